import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { SseDecoder, seenFilter } from "../src/journal.js";
import type { PhaseEvent } from "../src/types.js";
import { fixturePath, loadJournal } from "./helpers.js";

const journal = loadJournal("completed");
const rawLines = readFileSync(fixturePath("completed", "journal.ndjson"), "utf8")
  .split("\n").filter((l) => l.trim());

function sseBody(lines: string[]): string {
  return lines.map((l) => `data: ${l}\n\n`).join("");
}

function chunkedResponse(text: string, chunkSize: number): Response {
  const bytes = new TextEncoder().encode(text);
  const stream = new ReadableStream<Uint8Array>({
    start(controller) {
      for (let i = 0; i < bytes.length; i += chunkSize) {
        controller.enqueue(bytes.slice(i, i + chunkSize));
      }
      controller.close();
    },
  });
  return new Response(stream, { status: 200 });
}

describe("SSE decoding", () => {
  it("reassembles events split across arbitrary chunk boundaries", () => {
    const text = sseBody(rawLines);
    for (const chunkSize of [1, 7, 64, 4096]) {
      const decoder = new SseDecoder();
      const out: string[] = [];
      for (let i = 0; i < text.length; i += chunkSize) {
        out.push(...decoder.push(text.slice(i, i + chunkSize)));
      }
      expect(out.length).toBe(rawLines.length);
      expect(JSON.parse(out[0]).seq).toBe(1);
      expect(JSON.parse(out[out.length - 1]).kind).toBe("sessionCompleted");
    }
  });

  it("drops duplicate sequence numbers", () => {
    const fresh = seenFilter();
    const twice = [...journal, ...journal];
    const kept = twice.filter(fresh);
    expect(kept.map((e) => e.seq)).toEqual(journal.map((e) => e.seq));
  });
});

describe("reconnecting event stream", () => {
  it("survives a mid-stream drop without duplicating events", async () => {
    const half = Math.floor(rawLines.length / 2);
    let call = 0;
    const fetchImpl = async (url: string): Promise<Response> => {
      expect(url).toContain("/subscription/events/job-x");
      call += 1;
      // first connection dies halfway; the replayed second one completes
      return call === 1
        ? chunkedResponse(sseBody(rawLines.slice(0, half)), 113)
        : chunkedResponse(sseBody(rawLines), 113);
    };
    const client = new Client("http://svc", fetchImpl as any);
    const received: PhaseEvent[] = [];
    await new Promise<void>((resolve) => {
      client.streamEvents("job-x", (e) => received.push(e),
                          { retryDelayMs: 1, onClose: resolve });
    });
    expect(call).toBe(2);
    expect(received.map((e) => e.seq)).toEqual(journal.map((e) => e.seq));
    expect(received[received.length - 1].kind).toBe("sessionCompleted");
  });

  it("stops cleanly once the terminal event arrives", async () => {
    let calls = 0;
    const fetchImpl = async (): Promise<Response> => {
      calls += 1;
      return chunkedResponse(sseBody(rawLines), 4096);
    };
    const client = new Client("http://svc", fetchImpl as any);
    const seqs: number[] = [];
    await new Promise<void>((resolve) => {
      client.streamEvents("job-x", (e) => seqs.push(e.seq),
                          { retryDelayMs: 1, onClose: resolve });
    });
    expect(calls).toBe(1);
    expect(seqs.length).toBe(journal.length);
  });
});

describe("error envelopes", () => {
  it("surfaces structured 422 errors", async () => {
    const fetchImpl = async (): Promise<Response> =>
      new Response(JSON.stringify({
        errors: [{ field: "targetName", message: "must be set" }],
      }), { status: 422 });
    const client = new Client("http://svc", fetchImpl as any);
    await expect(client.trainClassifier({} as any)).rejects.toMatchObject({
      status: 422,
      errors: [{ field: "targetName", message: "must be set" }],
    });
  });
});
