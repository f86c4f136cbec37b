/** Feedback-control state: optimistic disabling only, never optimistic
 * data. A control greys out the moment its command is submitted and is
 * resolved by the matching feedbackApplied event (or a server rejection),
 * so the UI reflects outcomes within one event cycle. */

import type { FeedbackEntry, PhaseEvent } from "./types.js";

export type ControlStatus = "idle" | "pending" | "applied" | "rejected";

export interface ControlState {
  status: ControlStatus;
  feedbackId: string | null;
  reason: string | null;
}

/** Key a control by what it acts on, e.g. "removeClassifier:sgd_classifier". */
export function controlKey(kind: string, target = ""): string {
  return target ? `${kind}:${target}` : kind;
}

export class FeedbackControls {
  private states = new Map<string, ControlState>();
  private pendingById = new Map<string, string>();

  state(key: string): ControlState {
    return this.states.get(key) ?? { status: "idle", feedbackId: null, reason: null };
  }

  /** Disabled while a round trip is outstanding or once applied. */
  isDisabled(key: string): boolean {
    const s = this.state(key).status;
    return s === "pending" || s === "applied";
  }

  /** Call when the server acknowledged the command (202 queued). */
  submitted(key: string, feedbackId: string): void {
    this.states.set(key, { status: "pending", feedbackId, reason: null });
    this.pendingById.set(feedbackId, key);
  }

  /** Call when submission failed validation; control re-enables with the
   * server's reason attached. */
  rejected(key: string, reason: string): void {
    const prior = this.states.get(key);
    if (prior?.feedbackId) this.pendingById.delete(prior.feedbackId);
    this.states.set(key, { status: "rejected", feedbackId: null, reason });
  }

  /** Feed every streamed event; resolves pending controls on their
   * feedbackApplied. Returns the resolved control key, if any. */
  onEvent(event: PhaseEvent): string | null {
    if (event.kind !== "feedbackApplied") return null;
    const feedbackId = event.payload.feedbackId;
    if (typeof feedbackId !== "string") return null;
    const key = this.pendingById.get(feedbackId);
    if (!key) return null;
    this.pendingById.delete(feedbackId);
    this.states.set(key, { status: "applied", feedbackId, reason: null });
    return key;
  }

  /** Mirror a journal that already contains applied feedback (replay). */
  onEntry(entry: FeedbackEntry): void {
    const target =
      (entry.command.classifier as string | undefined) ??
      (entry.command.preprocessor as string | undefined) ??
      (entry.command.column as string | undefined) ?? "";
    const key = controlKey(entry.kind, target);
    this.states.set(key, { status: "applied", feedbackId: entry.feedbackId,
                           reason: null });
  }
}
