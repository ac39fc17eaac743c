// Boot: read the study id from the query string, wire flow + view, and
// auto-resume the stored alias after a refresh (the server replays the
// session, so judging continues at the first pending trial).

import { StudyApi } from "./api.js";
import { RespondentFlow } from "./flow.js";
import { StudyView } from "./ui.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const studyId = new URLSearchParams(window.location.search).get("study");
if (!studyId) {
  root.textContent = "No study selected: open this page with ?study=<id>.";
} else {
  const api = new StudyApi(window.location.origin);
  const aliasKey = `unetcolor-alias:${studyId}`;
  const flow = new RespondentFlow(api, studyId, (state) => {
    view.render(state);
    if (state.stage === "trial" || state.stage === "done") {
      // only persist aliases that successfully joined
      if (pendingAlias) {
        sessionStorage.setItem(aliasKey, pendingAlias);
        pendingAlias = null;
      }
    }
  });
  const view = new StudyView(root, flow);
  let pendingAlias: string | null = null;

  const originalJoin = flow.join.bind(flow);
  flow.join = async (alias: string) => {
    pendingAlias = alias.trim();
    await originalJoin(alias);
  };

  view.render(flow.state);
  const saved = sessionStorage.getItem(aliasKey);
  if (saved) void flow.join(saved);
}
