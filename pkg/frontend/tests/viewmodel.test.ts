import { describe, expect, it } from "vitest";

import type { PhaseEvent } from "../src/types.js";
import { applyEvent, emptyView, reduceJournal } from "../src/viewmodel.js";
import { loadJournal, loadReport } from "./helpers.js";

const journal = loadJournal("completed");
const report = loadReport("completed");
const steered = loadJournal("steered");

describe("replaying a completed journal", () => {
  const view = reduceJournal(journal);

  it("renders the phase-1 chart with exactly the report's numbers", () => {
    const summary = report.phases["1"].summary;
    expect(view.phase1.bars.map((bar) => ({
      classifier: bar.key,
      episodes: bar.episodes,
      means: bar.means,
    }))).toEqual(summary.table);
    for (const [i, row] of summary.table.entries()) {
      // exact float equality, not approximate
      expect(view.phase1.bars[i].value).toBe(row.means[view.criterion]);
    }
    expect(view.phase1.winner).toBe(summary.winner);
    expect(view.phase1.done).toBe(true);
  });

  it("renders the phase-2 chart with exactly the report's numbers", () => {
    const summary = report.phases["2"].summary;
    expect(view.phase2.bars.map((bar) => ({
      preprocessor: bar.key,
      episodes: bar.episodes,
      means: bar.means,
      quality: bar.quality,
    }))).toEqual(summary.table);
    for (const [i, row] of summary.table.entries()) {
      expect(view.phase2.bars[i].value).toBe(row.means[view.criterion]);
    }
    expect(view.phase2.winner).toBe(summary.winner);
    expect(view.phase2.exitReason).toBe(summary.exitReason);
  });

  it("mirrors the sweep summary and one scatter point per episode", () => {
    const summary = report.phases["3"].summary;
    expect(view.sweep.episodes).toBe(summary.episodes);
    expect(view.sweep.best).toEqual(summary.best);
    expect(view.sweep.points.length).toBe(report.phases["3"].episodes.length);
    const values = report.phases["3"].episodes.map(
      (row: any) => row.means[view.criterion]);
    expect(view.sweep.points.map((p) => p.value)).toEqual(values);
  });

  it("ends in the completed state with the final pipeline card", () => {
    expect(view.jobState).toBe("completed");
    expect(view.best).not.toBeNull();
    expect(view.best!.final).toBe(true);
    expect(view.best!.classifier).toBe(report.model.algorithm);
    expect(view.best!.preprocessor).toBe(report.model.preprocessor);
    expect(view.best!.value).toBe(report.outcome.accuracy);
  });

  it("lists plans, evaluations and a model in the knowledge tab", () => {
    const kinds = new Set(view.entities.map((e) => e.kind));
    expect(kinds).toEqual(new Set(["plan", "evaluation", "model"]));
    const evaluations = view.entities.filter((e) => e.kind === "evaluation");
    const okEpisodes = journal.filter(
      (e) => e.kind === "episodeCompleted" && e.payload.error == null);
    expect(evaluations.length).toBe(okEpisodes.length);
  });
});

describe("view model purity", () => {
  it("is a pure function of the journal", () => {
    expect(reduceJournal(journal)).toEqual(reduceJournal(journal));
  });

  it("ignores duplicated events on reconnect replay", () => {
    const once = reduceJournal(journal);
    const replayed = reduceJournal([...journal, ...journal]);
    expect(replayed).toEqual(once);

    // drop mid-stream, then a full replay from seq 1
    const cut = Math.floor(journal.length / 2);
    const view = emptyView();
    for (const event of journal.slice(0, cut)) applyEvent(view, event);
    for (const event of journal) applyEvent(view, event);
    expect(view).toEqual(once);
  });

  it("never mutates on stale events", () => {
    const view = reduceJournal(journal);
    const before = JSON.stringify(view);
    expect(applyEvent(view, journal[0])).toBe(false);
    expect(JSON.stringify(view)).toBe(before);
  });
});

describe("live accumulation before a phase completes", () => {
  it("grows one bar per classifier and counts episodes", () => {
    const view = emptyView();
    const phase1Episodes = journal.filter(
      (e) => e.kind === "episodeCompleted" && e.phase === 1);
    for (const event of phase1Episodes) applyEvent(view, event);
    const keys = new Set(phase1Episodes.map((e) => String(e.payload.classifier)));
    expect(new Set(view.phase1.bars.map((b) => b.key))).toEqual(keys);
    const total = view.phase1.bars.reduce((n, b) => n + b.episodes, 0);
    expect(total).toBe(phase1Episodes.length);
    expect(view.phase1.done).toBe(false);
    for (const bar of view.phase1.bars) {
      expect(bar.value).not.toBeNull();
      expect(bar.value!).toBeGreaterThanOrEqual(0);
      expect(bar.value!).toBeLessThanOrEqual(1);
    }
  });

  it("tracks job state through the phases", () => {
    const view = emptyView();
    const states: string[] = [view.jobState];
    for (const event of journal) {
      applyEvent(view, event);
      if (states[states.length - 1] !== view.jobState) states.push(view.jobState);
    }
    expect(states).toEqual(["pending", "phase1", "phase2", "phase3", "completed"]);
  });
});

describe("steered journal", () => {
  const view = reduceJournal(steered);
  const applied = steered.find((e) => e.kind === "feedbackApplied")!;

  it("records the feedback in the log", () => {
    expect(view.feedbackLog.length).toBe(1);
    expect(view.feedbackLog[0].feedbackId).toBe(applied.payload.feedbackId);
    expect(view.feedbackLog[0].kind).toBe("removeClassifier");
  });

  it("greys the removed classifier's bar", () => {
    const removed = (applied.payload.diff as any).removedClassifier as string;
    expect(view.removedClassifiers).toContain(removed);
    const bar = view.phase1.bars.find((b) => b.key === removed)!;
    expect(bar.removed).toBe(true);
  });

  it("applies the grey-out within one event cycle", () => {
    const removed = (applied.payload.diff as any).removedClassifier as string;
    const view2 = emptyView();
    for (const event of steered) {
      applyEvent(view2, event);
      const bar = view2.phase1.bars.find((b) => b.key === removed);
      if (event.seq >= applied.seq) {
        expect(view2.removedClassifiers).toContain(removed);
        if (bar) expect(bar.removed).toBe(true);
      } else {
        expect(view2.removedClassifiers).not.toContain(removed);
        if (bar) expect(bar.removed).toBe(false);
      }
    }
  });

  it("still matches its own report exactly after steering", () => {
    const steeredReport = loadReport("steered");
    const summary = steeredReport.phases["1"].summary;
    expect(view.phase1.bars.map((bar) => ({
      classifier: bar.key,
      episodes: bar.episodes,
      means: bar.means,
    }))).toEqual(summary.table);
    expect(view.best!.classifier).toBe(steeredReport.model.algorithm);
  });

  it("excludes the removed classifier from every later episode", () => {
    const removed = (applied.payload.diff as any).removedClassifier as string;
    const later = steered.filter(
      (e) => e.seq > applied.seq && e.kind === "episodeCompleted");
    expect(later.length).toBeGreaterThan(0);
    expect(later.every((e) => e.payload.classifier !== removed)).toBe(true);
  });
});

describe("failure events", () => {
  it("marks the session failed and surfaces the reason", () => {
    const view = emptyView();
    const failure: PhaseEvent = {
      kind: "error", phase: 0, seq: 1, sessionId: "s", timestamp: "",
      payload: { message: "dataInput unresolved: /nope.csv" },
    };
    applyEvent(view, failure);
    expect(view.jobState).toBe("failed");
    expect(view.error).toContain("dataInput");
  });
});
