/** Thin typed client over the training service's public HTTP routes plus
 * a reconnecting event-stream reader. Nothing here interprets results;
 * that is the view model's job. */

import { SseDecoder, parseEventLine, seenFilter } from "./journal.js";
import type {
  FieldError,
  JobHandle,
  PhaseEvent,
  TrainRequest,
} from "./types.js";

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, public errors: FieldError[]) {
    super(errors.map((e) => `${e.field}: ${e.message}`).join("; ") ||
          `request failed (${status})`);
  }
}

async function readErrors(response: Response): Promise<FieldError[]> {
  try {
    const body = (await response.json()) as { errors?: FieldError[] };
    return body.errors ?? [];
  } catch {
    return [];
  }
}

export class Client {
  constructor(private baseUrl: string,
              private fetchImpl: FetchLike = fetch.bind(globalThis)) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) throw new ApiError(response.status, await readErrors(response));
    return (await response.json()) as T;
  }

  trainClassifier(request: TrainRequest): Promise<JobHandle> {
    return this.request("POST", "/mutation/trainClassifier", request);
  }

  job(jobId: string): Promise<JobHandle> {
    return this.request("GET", `/query/job/${jobId}`);
  }

  awaitJob(jobId: string, timeoutSeconds = 60): Promise<JobHandle> {
    return this.request(
      "GET", `/query/awaitJob/${jobId}?timeoutSeconds=${timeoutSeconds}`);
  }

  submitFeedback(jobId: string, command: Record<string, unknown>):
      Promise<{ status: string; feedbackId: string }> {
    return this.request("POST", "/mutation/feedback", { jobId, ...command });
  }

  bestModel(sessionId: string, criterion = "accuracy"):
      Promise<Record<string, unknown>> {
    return this.request(
      "GET", `/query/bestModel/${sessionId}?criterion=${criterion}`);
  }

  model(modelId: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/query/model/${modelId}`);
  }

  classifyInstances(modelId: string, data: Record<string, unknown>[]):
      Promise<{ labels: { value: string; confidence: number | null }[] }> {
    return this.request("POST", "/query/classifyInstances", { modelId, data });
  }

  /** Open the SSE stream and deliver each event once, in order. The
   * server replays the whole journal on every connect, so after a drop we
   * simply reconnect and let the sequence filter discard what was already
   * seen. Returns a stop function. */
  streamEvents(jobId: string, onEvent: (event: PhaseEvent) => void,
               options: { retryDelayMs?: number; onClose?: () => void } = {}):
      () => void {
    const retryDelayMs = options.retryDelayMs ?? 1000;
    const fresh = seenFilter();
    let stopped = false;
    let terminal = false;
    const controller = new AbortController();

    const deliver = (data: string) => {
      const event = parseEventLine(data);
      if (!event || !fresh(event)) return;
      if (event.kind === "sessionCompleted" || event.kind === "error") {
        terminal = true;
      }
      onEvent(event);
    };

    const connectOnce = async () => {
      const response = await this.fetchImpl(
        this.baseUrl + `/subscription/events/${jobId}`,
        { signal: controller.signal });
      if (!response.ok) throw new ApiError(response.status, await readErrors(response));
      if (!response.body) throw new Error("event stream has no body");
      const reader = response.body.getReader();
      const decoder = new SseDecoder();
      const text = new TextDecoder();
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        for (const data of decoder.push(text.decode(value, { stream: true }))) {
          deliver(data);
        }
      }
    };

    (async () => {
      while (!stopped && !terminal) {
        try {
          await connectOnce();
        } catch {
          if (stopped) break;
        }
        if (!stopped && !terminal) {
          await new Promise((resolve) => setTimeout(resolve, retryDelayMs));
        }
      }
      options.onClose?.();
    })();

    return () => {
      stopped = true;
      controller.abort();
    };
  }
}
