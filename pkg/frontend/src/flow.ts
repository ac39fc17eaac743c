// Respondent session state machine. Pure of DOM concerns so it can be driven
// headlessly in tests; the server stays authoritative for all progress.

import { ApiError, StudyApi, TrialImage, Verdict } from "./api.js";

export type FlowState =
  | { stage: "enter-alias"; error?: string }
  | { stage: "loading" }
  | {
      stage: "trial";
      trial: TrialImage;
      submitting: boolean;
      error?: string;
    }
  | { stage: "done"; judged: number; total: number };

export class RespondentFlow {
  state: FlowState = { stage: "enter-alias" };
  private sessionId = "";
  private total = 0;
  private onChange: (state: FlowState) => void;

  constructor(
    private api: StudyApi,
    private studyId: string,
    onChange: (state: FlowState) => void = () => {},
  ) {
    this.onChange = onChange;
  }

  private set(state: FlowState): void {
    this.state = state;
    this.onChange(state);
  }

  /** Open (or resume) the alias's session and show its first pending trial. */
  async join(alias: string): Promise<void> {
    if (!alias.trim()) {
      this.set({ stage: "enter-alias", error: "Please enter a name or alias." });
      return;
    }
    this.set({ stage: "loading" });
    try {
      const info = await this.api.openSession(this.studyId, alias.trim());
      this.sessionId = info.sessionId;
      this.total = info.totalTrials;
      await this.advance();
    } catch (err) {
      this.set({ stage: "enter-alias", error: describe(err) });
    }
  }

  /** Record the verdict for the current trial, then move on. */
  async judge(verdict: Verdict): Promise<void> {
    if (this.state.stage !== "trial" || this.state.submitting) return;
    const trial = this.state.trial;
    this.set({ stage: "trial", trial, submitting: true });
    try {
      await this.api.submitJudgment(this.sessionId, trial.trialId, verdict);
      await this.advance();
    } catch (err) {
      if (err instanceof ApiError && (err.status === 409 || err.status === 412)) {
        // already judged (double click / second tab): skip to the server's view
        await this.advance();
        return;
      }
      this.set({ stage: "trial", trial, submitting: false, error: describe(err) });
    }
  }

  /** Re-fetch the current pending trial after a network failure. */
  async retry(): Promise<void> {
    if (this.state.stage === "trial" || this.state.stage === "loading") {
      await this.advance();
    }
  }

  private async advance(): Promise<void> {
    try {
      const trial = await this.api.nextTrial(this.sessionId);
      if (trial === null) {
        this.set({ stage: "done", judged: this.total, total: this.total });
      } else {
        this.total = trial.total;
        this.set({ stage: "trial", trial, submitting: false });
      }
    } catch (err) {
      if (this.state.stage === "trial") {
        this.set({ ...this.state, submitting: false, error: describe(err) });
      } else {
        this.set({ stage: "enter-alias", error: describe(err) });
      }
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.message} (${err.code})`;
  if (err instanceof Error) return err.message;
  return String(err);
}
