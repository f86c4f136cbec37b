/** Shared shapes: journal events from the training service and the view
 * model derived from them. Field names mirror the server's JSON exactly;
 * renames on the server side should break compilation here, not render
 * blank charts. */

export interface PhaseEvent {
  kind: string;
  phase: number;
  seq: number;
  sessionId: string;
  timestamp: string;
  payload: Record<string, unknown>;
}

export type JobState =
  | "pending"
  | "phase1"
  | "phase2"
  | "phase3"
  | "completed"
  | "stopped"
  | "failed";

/** One bar of a per-candidate chart. `value` is the mean of the selection
 * criterion; while a phase is live it is a running mean over streamed
 * episodes, and the moment the phase completes it snaps to the table the
 * server journaled, so a replayed journal reproduces report.json exactly. */
export interface BarDatum {
  key: string;
  episodes: number;
  value: number | null;
  means: Record<string, number>;
  quality: number | null;
  removed: boolean;
  authoritative: boolean;
}

export interface ScatterPoint {
  episodeIndex: number;
  value: number | null;
  seq: number;
}

export interface FeedbackEntry {
  feedbackId: string;
  kind: string;
  command: Record<string, unknown>;
  diff: Record<string, unknown>;
  seq: number;
}

export interface PipelineCard {
  classifier: string | null;
  preprocessor: string | null;
  value: number | null;
  params: Record<string, unknown> | null;
  final: boolean;
}

export interface EntityRecord {
  id: string;
  kind: "plan" | "evaluation" | "model";
  label: string;
  detail: Record<string, unknown>;
  seq: number;
}

export interface PhaseChart {
  bars: BarDatum[];
  winner: string | null;
  done: boolean;
  exitReason: string | null;
}

export interface SweepView {
  points: ScatterPoint[];
  episodes: number;
  best: { params: Record<string, unknown>; means: Record<string, number> } | null;
  done: boolean;
}

export interface SessionView {
  sessionId: string | null;
  jobState: JobState;
  phase: number;
  criterion: string;
  phase1: PhaseChart;
  phase2: PhaseChart;
  sweep: SweepView;
  best: PipelineCard | null;
  feedbackLog: FeedbackEntry[];
  removedClassifiers: string[];
  removedPreprocessors: string[];
  entities: EntityRecord[];
  lastSeq: number;
  error: string | null;
}

export interface TrainRequest {
  targetName: string;
  dataInput: string;
  folds: number;
  candidateModels: string[];
  candidatePreprocessors: string[];
  modelProfilingEpisode: number;
  modelSearchEpisode: number;
  selectionCriteria: string;
  minimumAccuracy: number | null;
  fields: { name: string; type: string }[];
  id: null;
  modelId: null;
  seed: number;
}

export interface JobHandle {
  jobId: string;
  sessionId: string;
  state: string;
}

export interface FieldError {
  field: string;
  message: string;
}
