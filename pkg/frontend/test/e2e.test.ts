// End-to-end: the real respondent flow (api + flow, real fetch) against the
// real Python study service over HTTP. Spawns the service as a child process.

import { spawn, ChildProcess } from "node:child_process";
import { createInterface } from "node:readline";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { StudyApi } from "../src/api.js";
import { RespondentFlow } from "../src/flow.js";

const here = dirname(fileURLToPath(import.meta.url));

let child: ChildProcess | null = null;
let baseUrl = "";
let studyId = "";

beforeAll(async () => {
  child = spawn("python3", [join(here, "e2e_server.py")], {
    stdio: ["ignore", "pipe", "inherit"],
  });
  const ready = await new Promise<{ port: number; study_id: string }>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("service did not start")), 30000);
    createInterface({ input: child!.stdout! }).once("line", (line) => {
      clearTimeout(timer);
      resolve(JSON.parse(line));
    });
    child!.once("exit", (code) => reject(new Error(`service exited early (${code})`)));
  });
  baseUrl = `http://127.0.0.1:${ready.port}`;
  studyId = ready.study_id;
  // wait for the socket to accept requests
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(`${baseUrl}/studies/${studyId}/report`);
      if (resp.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("service never became reachable");
}, 40000);

afterAll(() => {
  child?.kill();
});

describe("end-to-end against the real service", () => {
  it("completes 10 trials, resumes after reload, and persists every judgment", async () => {
    const api = new StudyApi(baseUrl);
    const flow = new RespondentFlow(api, studyId);

    await flow.join("e2e-respondent");
    // judge 4, then simulate a reload by starting a fresh flow
    for (let i = 0; i < 4; i++) {
      expect(flow.state.stage).toBe("trial");
      await flow.judge(i % 2 === 0 ? "real" : "fake");
    }

    const resumed = new RespondentFlow(new StudyApi(baseUrl), studyId);
    await resumed.join("e2e-respondent");
    expect(resumed.state.stage).toBe("trial");
    if (resumed.state.stage !== "trial") throw new Error("unreachable");
    expect(resumed.state.trial.number).toBe(5);

    for (let i = 4; i < 10; i++) {
      await resumed.judge(i % 2 === 0 ? "real" : "fake");
    }
    expect(resumed.state.stage).toBe("done");

    const report = await (await fetch(`${baseUrl}/studies/${studyId}/report`)).json();
    const me = report.respondents.find((r: { alias: string }) => r.alias === "e2e-respondent");
    expect(me.judged).toBe(10);
    expect(me.complete).toBe(true);
    const judgedTotal = Object.values(report.sources).reduce(
      (acc: number, s) => acc + (s as { shown: number }).shown,
      0,
    );
    expect(judgedTotal).toBe(10);
  }, 30000);

  it("serves blind trial responses (no label in headers, valid PNG body)", async () => {
    const api = new StudyApi(baseUrl);
    const flow = new RespondentFlow(api, studyId);
    await flow.join("e2e-blind");
    expect(flow.state.stage).toBe("trial");
    if (flow.state.stage !== "trial") throw new Error("unreachable");

    const sid = (flow as unknown as { sessionId: string }).sessionId;
    const raw = await fetch(`${baseUrl}/sessions/${sid}/trials/next`);
    expect(raw.status).toBe(200);
    expect(raw.headers.get("content-type")).toBe("image/png");
    const headerBlob = JSON.stringify(Object.fromEntries(raw.headers.entries()));
    expect(headerBlob).not.toContain("truth");
    expect(headerBlob).not.toContain("model");
    const bytes = new Uint8Array(await raw.arrayBuffer());
    expect(Array.from(bytes.slice(0, 4))).toEqual([0x89, 0x50, 0x4e, 0x47]); // PNG magic
  }, 30000);
});
