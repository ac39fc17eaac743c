// Respondent flow against the contract-faithful fake server: full sessions,
// reload resume, double-submit recovery, network retry, and blinding of the
// client-held state.

import { describe, expect, it } from "vitest";

import { StudyApi, Verdict } from "../src/api.js";
import { FlowState, RespondentFlow } from "../src/flow.js";

import { FakeStudyServer } from "./fake_server.js";

function makeFlow(server: FakeStudyServer) {
  const states: FlowState[] = [];
  const api = new StudyApi("http://fake", server.fetch);
  const flow = new RespondentFlow(api, server.studyId, (s) => states.push(s));
  return { flow, states };
}

describe("respondent flow", () => {
  it("runs a full 10-trial session and persists 10 judgments", async () => {
    const server = new FakeStudyServer();
    const { flow } = makeFlow(server);
    await flow.join("alice");

    const verdicts: Verdict[] = [];
    for (let i = 0; i < 10; i++) {
      expect(flow.state.stage).toBe("trial");
      if (flow.state.stage !== "trial") throw new Error("unreachable");
      expect(flow.state.trial.number).toBe(i + 1);
      expect(flow.state.trial.total).toBe(10);
      const verdict: Verdict = i % 3 === 0 ? "fake" : "real";
      verdicts.push(verdict);
      await flow.judge(verdict);
    }
    expect(flow.state.stage).toBe("done");
    const judged = server.judgments("alice");
    expect(judged).toHaveLength(10);
    expect(judged.every((j) => j.verdict !== null)).toBe(true);
    expect(judged.map((j) => j.verdict)).toEqual(verdicts);
  });

  it("resumes at the first pending trial after a reload", async () => {
    const server = new FakeStudyServer();
    const first = makeFlow(server).flow;
    await first.join("bob");
    await first.judge("real");
    await first.judge("fake");
    await first.judge("real");

    // new flow instance over the same server = page reload
    const second = makeFlow(server).flow;
    await second.join("bob");
    expect(second.state.stage).toBe("trial");
    if (second.state.stage !== "trial") throw new Error("unreachable");
    expect(second.state.trial.number).toBe(4);
    expect(server.judgments("bob").filter((j) => j.verdict !== null)).toHaveLength(3);
  });

  it("finishes a resumed session through to done", async () => {
    const server = new FakeStudyServer("st-test", 3);
    const a = makeFlow(server).flow;
    await a.join("carol");
    await a.judge("real");
    const b = makeFlow(server).flow;
    await b.join("carol");
    await b.judge("real");
    await b.judge("fake");
    expect(b.state.stage).toBe("done");
    // reopening a complete session lands directly on done
    const c = makeFlow(server).flow;
    await c.join("carol");
    expect(c.state.stage).toBe("done");
  });

  it("skips forward when the same trial is judged twice (conflict)", async () => {
    const server = new FakeStudyServer();
    const { flow } = makeFlow(server);
    await flow.join("dave");
    if (flow.state.stage !== "trial") throw new Error("unreachable");
    const firstTrial = flow.state.trial;
    await flow.judge("real");
    // re-submit the stale trial id directly through a second flow sharing state
    const api = new StudyApi("http://fake", server.fetch);
    const sid = server.byAlias.get("dave")!;
    await expect(api.submitJudgment(sid, firstTrial.trialId, "fake")).rejects.toMatchObject({
      status: 409,
      code: "conflict",
    });
    // and the flow keeps going regardless
    await flow.judge("fake");
    expect(server.judgments("dave").filter((j) => j.verdict !== null)).toHaveLength(2);
  });

  it("surfaces network failure with retry, losing nothing", async () => {
    const server = new FakeStudyServer();
    const { flow } = makeFlow(server);
    await flow.join("erin");
    server.failNextRequests = 1; // the submit itself fails
    await flow.judge("real");
    expect(flow.state.stage).toBe("trial");
    if (flow.state.stage !== "trial") throw new Error("unreachable");
    expect(flow.state.error).toContain("fetch failed");
    expect(server.judgments("erin").filter((j) => j.verdict !== null)).toHaveLength(0);
    await flow.retry();
    if (flow.state.stage !== "trial") throw new Error("unreachable");
    expect(flow.state.error).toBeUndefined();
    await flow.judge("real");
    expect(server.judgments("erin").filter((j) => j.verdict !== null)).toHaveLength(1);
  });

  it("requires an alias before joining", async () => {
    const server = new FakeStudyServer();
    const { flow } = makeFlow(server);
    await flow.join("   ");
    expect(flow.state.stage).toBe("enter-alias");
    if (flow.state.stage !== "enter-alias") throw new Error("unreachable");
    expect(flow.state.error).toBeTruthy();
  });

  it("never receives or stores a source label", async () => {
    const server = new FakeStudyServer();
    const { flow, states } = makeFlow(server);
    await flow.join("frank");
    for (let i = 0; i < 10; i++) await flow.judge("real");
    const everything = JSON.stringify(
      states,
      (_k, v) => (v instanceof Blob ? `blob:${v.size}` : v),
    );
    for (const label of server.sources) {
      expect(everything).not.toContain(label);
    }
  });
});
