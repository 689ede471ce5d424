/**
 * Annotation session state machine.
 *
 * Owns the two-step protocol on the client side: an answer can only be
 * attached after an explicit "yes" intent judgment, and a judgment object
 * that violates the protocol is impossible to build (buildJudgment throws
 * before any network call). All persistent state lives on the server;
 * refreshing the page only loses the in-flight selection, never votes.
 */

import { AnnotationApi, ApiError, Judgment, Task } from "./api.js";

export type Phase = "idle" | "loading" | "intent" | "answer" | "done" | "error";

export class ProtocolViolation extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolViolation";
  }
}

export interface SessionState {
  phase: Phase;
  annotatorId: string | null;
  task: Task | null;
  intent: "yes" | "no" | null;
  completed: number; // monotone within a session
  lastStatus: string;
  errorMessage: string | null;
}

export function buildJudgment(
  pairId: string,
  annotatorId: string,
  intent: "yes" | "no",
  answer?: 0 | 1,
): Judgment {
  if (intent === "no" && answer !== undefined) {
    throw new ProtocolViolation(
      "an answer judgment is not allowed when the query has no code-search intent",
    );
  }
  if (intent === "yes" && answer === undefined) {
    throw new ProtocolViolation("a yes-intent judgment requires an answer of 0 or 1");
  }
  const judgment: Judgment = { pair_id: pairId, annotator_id: annotatorId, intent };
  if (intent === "yes") {
    judgment.answer = answer;
  }
  return judgment;
}

export class AnnotationSession {
  private state: SessionState = {
    phase: "idle",
    annotatorId: null,
    task: null,
    intent: null,
    completed: 0,
    lastStatus: "",
    errorMessage: null,
  };

  private listeners: Array<(s: SessionState) => void> = [];

  constructor(private readonly client: AnnotationApi) {}

  get snapshot(): SessionState {
    return { ...this.state };
  }

  onChange(listener: (s: SessionState) => void): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.snapshot);
  }

  /** Answer controls are enabled only after a "yes" intent selection. */
  get answerEnabled(): boolean {
    return this.state.phase === "answer" && this.state.intent === "yes";
  }

  async start(name?: string): Promise<void> {
    this.update({ phase: "loading", errorMessage: null });
    try {
      const { annotator_id } = await this.client.register(name);
      this.update({ annotatorId: annotator_id });
      await this.fetchNext();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Resume an existing annotator token (page refresh, new tab). */
  async resume(annotatorId: string): Promise<void> {
    this.update({ annotatorId, phase: "loading", errorMessage: null });
    await this.fetchNext();
  }

  async fetchNext(): Promise<void> {
    const annotatorId = this.state.annotatorId;
    if (!annotatorId) {
      throw new ProtocolViolation("session has no annotator token");
    }
    this.update({ phase: "loading", task: null, intent: null, errorMessage: null });
    try {
      const next = await this.client.nextTask(annotatorId);
      if (next.done || next.task === null) {
        this.update({ phase: "done", task: null });
      } else {
        this.update({ phase: "intent", task: next.task });
      }
    } catch (err) {
      this.fail(err);
    }
  }

  /** Step one: the intent judgment. "yes" unlocks the answer controls. */
  chooseIntent(intent: "yes" | "no"): void {
    if (this.state.phase !== "intent" || !this.state.task) {
      throw new ProtocolViolation("no task is awaiting an intent judgment");
    }
    if (intent === "yes") {
      this.update({ intent, phase: "answer" });
    } else {
      this.update({ intent });
    }
  }

  /**
   * Submit the current judgment. For intent=no no answer may be given;
   * for intent=yes the answer is mandatory. On acceptance the session
   * advances to the next task automatically.
   */
  async submit(answer?: 0 | 1): Promise<void> {
    const { task, annotatorId, intent } = this.state;
    if (!task || !annotatorId || intent === null) {
      throw new ProtocolViolation("nothing to submit: intent not chosen yet");
    }
    // throws ProtocolViolation before any network traffic on a bad combination
    const judgment = buildJudgment(task.pair_id, annotatorId, intent, answer);
    try {
      await this.client.submitJudgment(judgment);
      this.update({
        completed: this.state.completed + 1,
        lastStatus: `recorded ${task.pair_id}`,
      });
      await this.fetchNext();
    } catch (err) {
      if (err instanceof ApiError) {
        // duplicate or rejected: surface the reason, then move on --
        // the server remains the source of truth
        this.update({ lastStatus: `rejected: ${err.detail}` });
        if (err.duplicate) {
          await this.fetchNext();
          return;
        }
        this.fail(err);
        return;
      }
      this.fail(err);
    }
  }

  retry(): Promise<void> {
    if (this.state.annotatorId === null) {
      return this.start();
    }
    return this.fetchNext();
  }

  private fail(err: unknown): void {
    const message =
      err instanceof ApiError
        ? err.unauthorized
          ? "unknown annotator token; register again"
          : err.detail
        : String(err);
    this.update({ phase: "error", errorMessage: message });
  }
}
