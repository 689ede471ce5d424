/**
 * DOM layer: renders the session state and wires controls to it.
 *
 * Rendering is a pure function of the session snapshot; every mutation
 * goes through the session, so the DOM can never smuggle an invalid
 * judgment past the state machine.
 */

import { AnnotationSession, SessionState } from "./session.js";
import { ANSWER_GUIDELINES, INTENT_GUIDELINE } from "./guidelines.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mount(root: HTMLElement, session: AnnotationSession): void {
  session.onChange((state) => render(root, session, state));
  render(root, session, session.snapshot);
}

function render(root: HTMLElement, session: AnnotationSession, state: SessionState): void {
  root.replaceChildren();

  const header = el("header");
  header.append(el("h1", "", "query-code annotation"));
  const status = el("div", "status");
  status.append(
    el("span", "counter", `completed: ${state.completed}`),
    el("span", "last", state.lastStatus),
  );
  header.append(status);
  root.append(header);

  switch (state.phase) {
    case "idle":
      root.append(renderStart(session));
      break;
    case "loading":
      root.append(el("p", "loading", "loading…"));
      break;
    case "intent":
    case "answer":
      root.append(renderTask(session, state));
      break;
    case "done":
      root.append(renderDone());
      break;
    case "error":
      root.append(renderError(session, state));
      break;
  }
}

function renderStart(session: AnnotationSession): HTMLElement {
  const panel = el("section", "start");
  const name = el("input") as HTMLInputElement;
  name.placeholder = "display name (optional)";
  const button = el("button", "", "start annotating");
  button.addEventListener("click", () => void session.start(name.value || undefined));
  panel.append(name, button);
  return panel;
}

function renderTask(session: AnnotationSession, state: SessionState): HTMLElement {
  const task = state.task!;
  const panel = el("section", "task");
  panel.append(el("h2", "", `pair ${task.pair_id}`));
  panel.append(el("p", "query", task.query));

  const code = el("div", "code");
  code.append(
    el("pre", "code-header", task.code.header),
    el("pre", "code-docstring", task.code.docstring || "(no documentation)"),
    el("pre", "code-body", task.code.body),
  );
  panel.append(code);

  const guide = el("details", "guidelines");
  guide.append(el("summary", "", "labeling guidelines"));
  guide.append(el("p", "", INTENT_GUIDELINE));
  const list = el("ul");
  for (const rule of ANSWER_GUIDELINES.concat(task.guidelines)) {
    list.append(el("li", "", rule));
  }
  guide.append(list);
  panel.append(guide);

  const intentRow = el("div", "intent-row");
  intentRow.append(el("span", "", "does the query ask for code?"));
  const yes = el("button", "", "yes");
  const no = el("button", "", "no, skip answer");
  yes.disabled = state.phase !== "intent";
  no.disabled = state.phase !== "intent";
  yes.addEventListener("click", () => session.chooseIntent("yes"));
  no.addEventListener("click", () => {
    session.chooseIntent("no");
    void session.submit(); // no answer may accompany a "no"
  });
  intentRow.append(yes, no);
  panel.append(intentRow);

  const answerRow = el("div", "answer-row");
  answerRow.append(el("span", "", "does the code answer the query?"));
  const correct = el("button", "", "1 — answers it");
  const wrong = el("button", "", "0 — does not");
  // gating: answer controls exist only disabled until intent=yes
  correct.disabled = !session.answerEnabled;
  wrong.disabled = !session.answerEnabled;
  correct.addEventListener("click", () => void session.submit(1));
  wrong.addEventListener("click", () => void session.submit(0));
  answerRow.append(correct, wrong);
  panel.append(answerRow);

  return panel;
}

function renderDone(): HTMLElement {
  const panel = el("section", "done");
  panel.append(el("h2", "", "all done"));
  panel.append(el("p", "", "No more pairs need your judgment. Thank you!"));
  return panel;
}

function renderError(session: AnnotationSession, state: SessionState): HTMLElement {
  const panel = el("section", "error-banner");
  panel.append(el("p", "", `something went wrong: ${state.errorMessage ?? "unknown error"}`));
  const retryButton = el("button", "", "retry");
  retryButton.addEventListener("click", () => void session.retry());
  panel.append(retryButton);
  return panel;
}
