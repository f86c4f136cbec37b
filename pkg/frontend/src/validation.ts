/** Client-side mirror of the server's training-request invariants, so a
 * bad form never leaves the browser. Field names in errors match the
 * server's 422 payload, letting one renderer show both. */

import type { FieldError, TrainRequest } from "./types.js";

export const CLASSIFIERS = [
  "random_forest_classifier",
  "linear_svc_classifier",
  "gaussian_nb_classifier",
  "multinomial_nb_classifier",
  "logistic_classifier",
  "sgd_classifier",
  "gradient_boosting_classifier",
] as const;

export const PREPROCESSORS = [
  "noop",
  "truncatedSVD",
  "pca",
  "kernelPCA",
  "fastICA",
  "rbfsampler",
  "nystroem",
  "selectkbest",
  "selectpercentile",
  "minmaxscaler",
  "robustscaler",
  "absscaler",
  "random_trees_embedding",
  "std_scaler",
] as const;

export const CRITERIA = ["accuracy", "f1", "precision", "recall"] as const;

export interface LaunchForm {
  targetName: string;
  dataInput: string;
  folds: number;
  candidateModels: string[];
  candidatePreprocessors: string[];
  modelProfilingEpisode: number;
  modelSearchEpisode: number;
  selectionCriteria: string;
  minimumAccuracy: number | null;
  seed: number;
}

export function validateLaunchForm(form: LaunchForm): FieldError[] {
  const errors: FieldError[] = [];
  const err = (field: string, message: string) => errors.push({ field, message });

  if (!form.targetName.trim()) err("targetName", "must be set");
  if (!form.dataInput.trim()) err("dataInput", "must be set");
  if (!Number.isInteger(form.folds) || form.folds < 1) {
    err("folds", "must be a positive integer");
  }
  if (form.candidateModels.length === 0) {
    err("candidateModels", "must be non-empty after defaulting");
  }
  for (const model of form.candidateModels) {
    if (!(CLASSIFIERS as readonly string[]).includes(model)) {
      err("candidateModels", `unknown classifier: ${model}`);
    }
  }
  if (form.candidatePreprocessors.length === 0) {
    err("candidatePreprocessors", "must be non-empty after defaulting");
  }
  for (const prep of form.candidatePreprocessors) {
    if (!(PREPROCESSORS as readonly string[]).includes(prep)) {
      err("candidatePreprocessors", `unknown preprocessor: ${prep}`);
    }
  }
  if (!Number.isInteger(form.modelProfilingEpisode) || form.modelProfilingEpisode < 1) {
    err("modelProfilingEpisode", "must be a positive integer");
  }
  if (!Number.isInteger(form.modelSearchEpisode) || form.modelSearchEpisode < 1) {
    err("modelSearchEpisode", "must be a positive integer");
  }
  if (!(CRITERIA as readonly string[]).includes(form.selectionCriteria)) {
    err("selectionCriteria", `unknown criterion: ${form.selectionCriteria}`);
  }
  if (form.minimumAccuracy !== null &&
      (form.minimumAccuracy < 0 || form.minimumAccuracy > 1)) {
    err("minimumAccuracy", "must lie in [0,1]");
  }
  if (!Number.isInteger(form.seed) || form.seed < 0) {
    err("seed", "must be a non-negative integer");
  }
  return errors;
}

/** Serialize a validated form into the exact trainClassifier body. */
export function buildTrainRequest(form: LaunchForm): TrainRequest {
  return {
    targetName: form.targetName,
    dataInput: form.dataInput,
    folds: form.folds,
    candidateModels: [...form.candidateModels],
    candidatePreprocessors: [...form.candidatePreprocessors],
    modelProfilingEpisode: form.modelProfilingEpisode,
    modelSearchEpisode: form.modelSearchEpisode,
    selectionCriteria: form.selectionCriteria,
    minimumAccuracy: form.minimumAccuracy,
    fields: [],
    id: null,
    modelId: null,
    seed: form.seed,
  };
}

/** The prefilled demo: the same wide-numeric benchmark search the
 * command-line config runs. */
export function demoForm(): LaunchForm {
  return {
    targetName: "label",
    dataInput: "data/spam.csv",
    folds: 10,
    candidateModels: [
      "logistic_classifier",
      "random_forest_classifier",
      "sgd_classifier",
      "gaussian_nb_classifier",
    ],
    candidatePreprocessors: ["noop", "pca"],
    modelProfilingEpisode: 10,
    modelSearchEpisode: 20,
    selectionCriteria: "accuracy",
    minimumAccuracy: null,
    seed: 2,
  };
}
