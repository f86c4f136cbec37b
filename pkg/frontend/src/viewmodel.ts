/** Pure view model: fold journal events into a SessionView.
 *
 * The view is a function of the event log alone; no result data is ever
 * invented client-side. While a phase streams, bars show running means
 * over the episodes seen so far; when its phaseCompleted event arrives
 * they snap to the table the server journaled. report.json is built from
 * those same payloads, so replaying a completed journal yields charts
 * whose numbers equal the report exactly. */

import type {
  BarDatum,
  EntityRecord,
  PhaseEvent,
  PipelineCard,
  SessionView,
} from "./types.js";

export function emptyView(criterion = "accuracy"): SessionView {
  return {
    sessionId: null,
    jobState: "pending",
    phase: 0,
    criterion,
    phase1: { bars: [], winner: null, done: false, exitReason: null },
    phase2: { bars: [], winner: null, done: false, exitReason: null },
    sweep: { points: [], episodes: 0, best: null, done: false },
    best: null,
    feedbackLog: [],
    removedClassifiers: [],
    removedPreprocessors: [],
    entities: [],
    lastSeq: 0,
    error: null,
  };
}

function asNumber(value: unknown): number | null {
  return typeof value === "number" ? value : null;
}

function asString(value: unknown): string | null {
  return typeof value === "string" ? value : null;
}

function meansOf(value: unknown): Record<string, number> {
  if (value && typeof value === "object") {
    return value as Record<string, number>;
  }
  return {};
}

function liveBar(bars: BarDatum[], key: string): BarDatum {
  let bar = bars.find((b) => b.key === key);
  if (!bar) {
    bar = { key, episodes: 0, value: null, means: {}, quality: null,
            removed: false, authoritative: false };
    bars.push(bar);
  }
  return bar;
}

// running mean per metric; only successful episodes contribute
function accumulate(bar: BarDatum, means: Record<string, number>,
                    criterion: string, failed: boolean): void {
  bar.episodes += 1;
  if (failed || bar.authoritative) return;
  const counted = bar.episodes;
  for (const [metric, v] of Object.entries(means)) {
    if (typeof v !== "number") continue;
    const prev = bar.means[metric] ?? 0;
    bar.means[metric] = prev + (v - prev) / counted;
  }
  bar.value = bar.means[criterion] ?? null;
}

function snapTable(view: SessionView, which: 1 | 2,
                   table: Record<string, unknown>[], keyField: string): void {
  const chart = which === 1 ? view.phase1 : view.phase2;
  const removed = which === 1 ? view.removedClassifiers : view.removedPreprocessors;
  chart.bars = table.map((row) => {
    const key = asString(row[keyField]) ?? "?";
    const means = meansOf(row.means);
    return {
      key,
      episodes: asNumber(row.episodes) ?? 0,
      value: means[view.criterion] ?? null,
      means,
      quality: asNumber(row.quality),
      removed: removed.includes(key),
      authoritative: true,
    };
  });
}

function upsertEntity(view: SessionView, record: EntityRecord): void {
  const existing = view.entities.findIndex(
    (e) => e.kind === record.kind && e.id === record.id);
  if (existing >= 0) view.entities[existing] = record;
  else view.entities.push(record);
}

function markRemoved(view: SessionView, diff: Record<string, unknown>): void {
  const rc = asString(diff.removedClassifier);
  if (rc && !view.removedClassifiers.includes(rc)) {
    view.removedClassifiers.push(rc);
    const bar = view.phase1.bars.find((b) => b.key === rc);
    if (bar) bar.removed = true;
  }
  const ac = asString(diff.addedClassifier);
  if (ac) {
    view.removedClassifiers = view.removedClassifiers.filter((c) => c !== ac);
    const bar = view.phase1.bars.find((b) => b.key === ac);
    if (bar) bar.removed = false;
  }
  const rp = asString(diff.removedPreprocessor);
  if (rp && !view.removedPreprocessors.includes(rp)) {
    view.removedPreprocessors.push(rp);
    const bar = view.phase2.bars.find((b) => b.key === rp);
    if (bar) bar.removed = true;
  }
  const ap = asString(diff.addedPreprocessor);
  if (ap) {
    view.removedPreprocessors = view.removedPreprocessors.filter((p) => p !== ap);
    const bar = view.phase2.bars.find((b) => b.key === ap);
    if (bar) bar.removed = false;
  }
}

/** Apply one event in place. Duplicate or out-of-order sequence numbers
 * (reconnect replays) are ignored. Returns true when the view changed. */
export function applyEvent(view: SessionView, event: PhaseEvent): boolean {
  if (event.seq <= view.lastSeq) return false;
  view.lastSeq = event.seq;
  if (view.sessionId === null && event.sessionId) view.sessionId = event.sessionId;
  if (event.phase > view.phase) {
    view.phase = event.phase;
    view.jobState = `phase${event.phase}` as SessionView["jobState"];
  }
  const p = event.payload;

  switch (event.kind) {
    case "planGenerated": {
      const plan = (p.plan ?? {}) as Record<string, unknown>;
      const id = asString(p.planRecordId);
      if (id) {
        upsertEntity(view, {
          id, kind: "plan",
          label: `${asString(plan.classifier) ?? "?"} + ${asString(plan.preprocessor) ?? "?"}`,
          detail: plan, seq: event.seq,
        });
      }
      break;
    }
    case "episodeCompleted": {
      const failed = p.error != null;
      const means = meansOf(p.means);
      if (event.phase === 1) {
        const key = asString(p.classifier);
        if (key) accumulate(liveBar(view.phase1.bars, key), means,
                            view.criterion, failed);
      } else if (event.phase === 2) {
        const key = asString(p.preprocessor);
        if (key) accumulate(liveBar(view.phase2.bars, key), means,
                            view.criterion, failed);
      } else if (event.phase === 3) {
        view.sweep.points.push({
          episodeIndex: asNumber(p.episodeIndex) ?? view.sweep.points.length,
          value: failed ? null : means[view.criterion] ?? null,
          seq: event.seq,
        });
      }
      const evalId = asString(p.evaluationId);
      if (evalId) {
        upsertEntity(view, {
          id: evalId, kind: "evaluation",
          label: `${asString(p.classifier) ?? "?"} / ${asString(p.preprocessor) ?? "?"} ` +
                 `#${asNumber(p.episodeIndex) ?? 0}`,
          detail: p, seq: event.seq,
        });
      }
      break;
    }
    case "phaseCompleted": {
      const phase = asNumber(p.phase);
      const criteria = asString(p.selectionCriteria);
      if (criteria) view.criterion = criteria;
      if (phase === 1) {
        snapTable(view, 1, (p.table ?? []) as Record<string, unknown>[], "classifier");
        view.phase1.winner = asString(p.winner);
        view.phase1.done = true;
      } else if (phase === 2) {
        snapTable(view, 2, (p.table ?? []) as Record<string, unknown>[], "preprocessor");
        view.phase2.winner = asString(p.winner);
        view.phase2.exitReason = asString(p.exitReason);
        view.phase2.done = true;
      } else if (phase === 3) {
        view.sweep.episodes = asNumber(p.episodes) ?? view.sweep.points.length;
        const best = p.best as { params?: Record<string, unknown>;
                                 means?: Record<string, number> } | undefined;
        view.sweep.best = best?.means
          ? { params: best.params ?? {}, means: best.means }
          : null;
        view.sweep.done = true;
        const modelId = asString(p.modelId);
        if (modelId) {
          upsertEntity(view, {
            id: modelId, kind: "model", label: "trained model",
            detail: p, seq: event.seq,
          });
        }
      }
      break;
    }
    case "pipelineConverged":
      break;
    case "feedbackApplied": {
      const command = (p.command ?? {}) as Record<string, unknown>;
      view.feedbackLog.push({
        feedbackId: asString(p.feedbackId) ?? "?",
        kind: asString(command.kind) ?? "?",
        command,
        diff: (p.diff ?? {}) as Record<string, unknown>,
        seq: event.seq,
      });
      markRemoved(view, (p.diff ?? {}) as Record<string, unknown>);
      break;
    }
    case "sessionCompleted": {
      view.jobState = p.stoppedEarly ? "stopped" : "completed";
      view.best = {
        classifier: asString(p.algorithm),
        preprocessor: asString(p.preprocessor),
        value: asNumber(p.accuracy),
        params: null,
        final: true,
      };
      const modelId = asString(p.modelId);
      if (modelId) {
        upsertEntity(view, {
          id: modelId, kind: "model",
          label: `${asString(p.algorithm) ?? "?"} + ${asString(p.preprocessor) ?? "?"}`,
          detail: p, seq: event.seq,
        });
      }
      break;
    }
    case "error": {
      view.jobState = "failed";
      view.error = asString(p.message) ?? asString(p.reason) ?? "unknown error";
      break;
    }
    default:
      break;
  }
  if (!view.best || !view.best.final) {
    refreshBestCard(view);
  }
  return true;
}

// best-so-far card: winner of the furthest finished stage, else the live leader
function refreshBestCard(view: SessionView): void {
  const leader = (bars: BarDatum[]): BarDatum | null => {
    let top: BarDatum | null = null;
    for (const bar of bars) {
      if (bar.removed || bar.value === null) continue;
      if (top === null || bar.value > (top.value ?? -Infinity)) top = bar;
    }
    return top;
  };
  const p2 = leader(view.phase2.bars);
  const p1 = leader(view.phase1.bars);
  if (p2 && (view.phase1.winner || p1)) {
    view.best = {
      classifier: view.phase1.winner ?? p1?.key ?? null,
      preprocessor: p2.key, value: p2.value, params: null, final: false,
    };
  } else if (p1) {
    view.best = { classifier: p1.key, preprocessor: null, value: p1.value,
                  params: null, final: false };
  }
}

/** Reduce a whole journal. Same events in, same view out. */
export function reduceJournal(events: PhaseEvent[],
                              criterion = "accuracy"): SessionView {
  const view = emptyView(criterion);
  for (const event of events) applyEvent(view, event);
  return view;
}
