// Thin typed client over the study service's HTTP+JSON endpoints.
// The service never sends source labels to a respondent; nothing here could
// store one even if it wanted to.

export interface SessionInfo {
  sessionId: string;
  alias: string;
  totalTrials: number;
  judgedCount: number;
  complete: boolean;
}

export interface TrialImage {
  trialId: string;
  number: number; // 1-based
  total: number;
  blob: Blob;
}

export interface JudgmentAck {
  judgedCount: number;
  totalTrials: number;
  complete: boolean;
}

export type Verdict = "real" | "fake";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function raiseFor(resp: Response): Promise<never> {
  let code = "http_error";
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (body && typeof body === "object") {
      code = body.code ?? code;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(resp.status, code, message);
}

export class StudyApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async openSession(studyId: string, alias: string, seed = 0): Promise<SessionInfo> {
    const resp = await this.fetchImpl(this.url(`/studies/${studyId}/sessions`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ alias, seed }),
    });
    if (!resp.ok) await raiseFor(resp);
    const body = await resp.json();
    return {
      sessionId: body.session_id,
      alias: body.alias,
      totalTrials: body.total_trials,
      judgedCount: body.judged_count,
      complete: body.complete,
    };
  }

  /** Next pending trial, or null when the session is complete. */
  async nextTrial(sessionId: string): Promise<TrialImage | null> {
    const resp = await this.fetchImpl(this.url(`/sessions/${sessionId}/trials/next`));
    if (resp.status === 204) return null;
    if (!resp.ok) await raiseFor(resp);
    return {
      trialId: resp.headers.get("X-Trial-Id") ?? "",
      number: Number(resp.headers.get("X-Trial-Number") ?? "0"),
      total: Number(resp.headers.get("X-Trial-Total") ?? "0"),
      blob: await resp.blob(),
    };
  }

  async submitJudgment(sessionId: string, trialId: string, verdict: Verdict): Promise<JudgmentAck> {
    const resp = await this.fetchImpl(this.url(`/sessions/${sessionId}/judgments`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ trial_id: trialId, verdict }),
    });
    if (!resp.ok) await raiseFor(resp);
    const body = await resp.json();
    return {
      judgedCount: body.judged_count,
      totalTrials: body.total_trials,
      complete: body.complete,
    };
  }
}
