/** Journal and event-stream parsing.
 *
 * The server journals one JSON event per NDJSON line and serves the same
 * objects over server-sent events as `data: {...}` blocks. Both funnel
 * through parseEventLine; seenFilter drops anything already delivered so
 * a reconnect replay cannot duplicate chart points. */

import type { PhaseEvent } from "./types.js";

export function parseEventLine(line: string): PhaseEvent | null {
  const trimmed = line.trim();
  if (!trimmed) return null;
  const raw = JSON.parse(trimmed) as Record<string, unknown>;
  if (typeof raw.kind !== "string" || typeof raw.seq !== "number") {
    throw new Error(`not a journal event: ${trimmed.slice(0, 80)}`);
  }
  return {
    kind: raw.kind,
    phase: typeof raw.phase === "number" ? raw.phase : 0,
    seq: raw.seq,
    sessionId: typeof raw.sessionId === "string" ? raw.sessionId : "",
    timestamp: typeof raw.timestamp === "string" ? raw.timestamp : "",
    payload: (raw.payload ?? {}) as Record<string, unknown>,
  };
}

export function parseJournal(text: string): PhaseEvent[] {
  const events: PhaseEvent[] = [];
  for (const line of text.split("\n")) {
    const event = parseEventLine(line);
    if (event) events.push(event);
  }
  return events;
}

/** Stateful duplicate filter keyed by sequence number. Events arrive in
 * order from any single connection; replays start over from seq 1. */
export function seenFilter(): (event: PhaseEvent) => boolean {
  let lastSeq = 0;
  return (event) => {
    if (event.seq <= lastSeq) return false;
    lastSeq = event.seq;
    return true;
  };
}

/** Incremental SSE decoder: feed arbitrary text chunks, get complete
 * `data:` payload strings out. Handles events split across chunks. */
export class SseDecoder {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const out: string[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 2);
      for (const line of block.split("\n")) {
        if (line.startsWith("data: ")) out.push(line.slice(6));
        else if (line.startsWith("data:")) out.push(line.slice(5));
      }
    }
    return out;
  }
}
