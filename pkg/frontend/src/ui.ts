// DOM rendering for the respondent flow: one container, three screens.
// Keyboard shortcuts R (real) and F (fake) during a trial.

import { RespondentFlow, FlowState } from "./flow.js";

export class StudyView {
  private objectUrl: string | null = null;

  constructor(
    private root: HTMLElement,
    private flow: RespondentFlow,
  ) {
    document.addEventListener("keydown", (ev) => {
      if (this.flow.state.stage !== "trial" || this.flow.state.submitting) return;
      if (ev.key === "r" || ev.key === "R") void this.flow.judge("real");
      if (ev.key === "f" || ev.key === "F") void this.flow.judge("fake");
    });
  }

  render(state: FlowState): void {
    this.root.textContent = "";
    switch (state.stage) {
      case "enter-alias":
        this.renderAlias(state.error);
        break;
      case "loading":
        this.renderMessage("Loading...");
        break;
      case "trial":
        this.renderTrial(state);
        break;
      case "done":
        this.renderMessage(
          `All done. You judged ${state.judged} of ${state.total} images. Thank you!`,
          "done-message",
        );
        break;
    }
  }

  private renderAlias(error?: string): void {
    const box = el("div", "card");
    box.appendChild(el("h1", "", "Real or fake?"));
    box.appendChild(
      el(
        "p",
        "hint",
        "You will see one image at a time. Decide whether it is a real photograph " +
          "or a recolorized fake. Press the buttons or use the R / F keys.",
      ),
    );
    const input = el("input", "alias-input") as HTMLInputElement;
    input.id = "alias";
    input.placeholder = "Your name or alias";
    const button = el("button", "primary", "Start") as HTMLButtonElement;
    button.id = "join";
    button.addEventListener("click", () => void this.flow.join(input.value));
    input.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") void this.flow.join(input.value);
    });
    box.appendChild(input);
    box.appendChild(button);
    if (error) box.appendChild(el("p", "error", error));
    this.root.appendChild(box);
  }

  private renderTrial(state: Extract<FlowState, { stage: "trial" }>): void {
    const box = el("div", "card trial");
    const progress = el("p", "progress", `${state.trial.number}/${state.trial.total}`);
    progress.id = "progress";
    box.appendChild(progress);

    const img = el("img", "trial-image") as HTMLImageElement;
    img.id = "trial-image";
    img.alt = "image under judgment";
    if (this.objectUrl) URL.revokeObjectURL(this.objectUrl);
    this.objectUrl = URL.createObjectURL(state.trial.blob);
    img.src = this.objectUrl;
    box.appendChild(img);

    const buttons = el("div", "buttons");
    const real = el("button", "primary", "Real (R)") as HTMLButtonElement;
    real.id = "judge-real";
    const fake = el("button", "secondary", "Fake (F)") as HTMLButtonElement;
    fake.id = "judge-fake";
    real.disabled = fake.disabled = state.submitting;
    real.addEventListener("click", () => void this.flow.judge("real"));
    fake.addEventListener("click", () => void this.flow.judge("fake"));
    buttons.appendChild(real);
    buttons.appendChild(fake);
    box.appendChild(buttons);

    if (state.error) {
      const banner = el("div", "error banner");
      banner.appendChild(el("span", "", `Connection trouble: ${state.error} `));
      const retry = el("button", "", "Retry") as HTMLButtonElement;
      retry.id = "retry";
      retry.addEventListener("click", () => void this.flow.retry());
      banner.appendChild(retry);
      box.appendChild(banner);
    }
    this.root.appendChild(box);
  }

  private renderMessage(text: string, id = "message"): void {
    const box = el("div", "card");
    const p = el("p", "", text);
    p.id = id;
    box.appendChild(p);
    this.root.appendChild(box);
  }
}

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}
