"""Pipeline assembly and v-fold cross validation.

A PipelineInstance binds a dataset schema to one featurizer per feature
column, a preprocessor and a classifier, each with sampled parameters.
Cross validation fits every stage on the training split of each fold
only; sparse matrices are densified right before any stage that cannot
consume them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..enums import ClassifierAlgorithm, FeaturizerAlgorithm, Metric, PreprocessorAlgorithm
from ..errors import EvaluationError
from ..planner import DEFAULT_COMPATIBILITY
from ..util import stable_seed
from .classifiers import build_classifier
from .featurizers import build_featurizer
from .matrix import FeatureMatrix
from .metrics import compute_metrics
from .preprocessors import build_preprocessor

__all__ = ["PipelineInstance", "FittedPipeline", "CVResult",
           "stratified_folds", "cross_validate"]

FOLD_SHUFFLE_SEED = 7


def _encode_target(values) -> tuple[np.ndarray, list]:
    """Integer-encode labels; ordering is by string form so it does not
    depend on row order."""
    for i, v in enumerate(values):
        if v is None:
            raise EvaluationError("target", f"missing target value at row {i}")
    labels = sorted(set(values), key=str)
    index = {v: i for i, v in enumerate(labels)}
    return np.array([index[v] for v in values], dtype=np.int64), labels


def stratified_folds(y: np.ndarray, v: int, seed: int = FOLD_SHUFFLE_SEED) -> list[np.ndarray]:
    """Validation index sets for stratified v-fold splitting.

    Each class's rows are shuffled then dealt round-robin across folds
    with a pointer that carries over between classes, so both overall
    and per-class fold sizes differ by at most one.
    """
    y = np.asarray(y)
    n = len(y)
    if v < 2:
        raise EvaluationError("cross_validate", f"invalid fold count {v}: requires v ≥ 2")
    if v > n:
        raise EvaluationError("cross_validate", f"v={v} exceeds the {n} available rows")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(v)]
    pointer = 0
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        rng.shuffle(members)
        for idx in members:
            buckets[pointer].append(int(idx))
            pointer = (pointer + 1) % v
    return [np.array(sorted(b), dtype=np.int64) for b in buckets]


@dataclass
class CVResult:
    """Per-fold and mean metric values for one evaluated pipeline."""

    fold_scores: dict[str, list[float]]
    means: dict[str, float]
    fit_seconds: float

    def __post_init__(self):
        for name, scores in self.fold_scores.items():
            mean = float(np.mean(scores)) if scores else 0.0
            if abs(mean - self.means[name]) > 1e-9:
                raise EvaluationError("cross_validate",
                                      f"mean of {name} does not match its folds")

    def mean_for(self, criterion: Metric | str) -> float:
        return self.means[Metric(criterion).value]

    def to_json_dict(self) -> dict:
        return {"foldScores": {k: list(v) for k, v in self.fold_scores.items()},
                "means": dict(self.means), "fitSeconds": self.fit_seconds}


@dataclass
class FittedPipeline:
    """Everything needed to turn raw rows into label predictions."""

    featurizers: dict[str, object]
    preprocessor: object
    classifier: object
    labels: list
    feature_order: list[str]
    sparse_plan: bool

    def matrix_for(self, column_values: dict[str, list]) -> FeatureMatrix:
        blocks = []
        for name in self.feature_order:
            blocks.append(self.featurizers[name].transform(column_values[name]))
        return FeatureMatrix.hstack(blocks, sparse_out=self.sparse_plan)

    def predict_encoded(self, matrix: FeatureMatrix) -> tuple[np.ndarray, "np.ndarray | None"]:
        X = _stage_input(matrix, self.preprocessor.algorithm.value, _SPARSE_PREPROCESSORS)
        transformed = FeatureMatrix(self.preprocessor.transform(X))
        Xc = _stage_input(transformed, self.classifier.algorithm.value, _SPARSE_CLASSIFIERS)
        proba = self.classifier.predict_proba(Xc)
        if proba is not None:
            proba = np.asarray(proba)
            return proba.argmax(axis=1), proba
        return self.classifier.predict(Xc), None

    def predict_labels(self, column_values: dict[str, list]) -> list:
        encoded, _ = self.predict_encoded(self.matrix_for(column_values))
        return [self.labels[i] for i in encoded]


_SPARSE_CLASSIFIERS = DEFAULT_COMPATIBILITY.accepts_sparse_classifiers
_SPARSE_PREPROCESSORS = DEFAULT_COMPATIBILITY.accepts_sparse_preprocessors


def _stage_input(matrix: FeatureMatrix, component: str, sparse_capable) -> "np.ndarray":
    if matrix.representation == "sparse" and component not in {
            getattr(c, "value", c) for c in sparse_capable}:
        matrix = matrix.densify()
    return matrix.values


@dataclass
class PipelineInstance:
    """One concrete pipeline: featurizer assignment + preprocessor +
    classifier, each paired with its parameter set."""

    assignment: dict[str, tuple[FeaturizerAlgorithm, dict]]
    preprocessor: tuple[PreprocessorAlgorithm, dict]
    classifier: tuple[ClassifierAlgorithm, dict]
    representation: str = "dense"
    seed: int = 0
    feature_order: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.assignment = {
            name: (FeaturizerAlgorithm(alg), dict(params or {}))
            for name, (alg, params) in self.assignment.items()}
        self.preprocessor = (PreprocessorAlgorithm(self.preprocessor[0]),
                             dict(self.preprocessor[1] or {}))
        self.classifier = (ClassifierAlgorithm(self.classifier[0]),
                           dict(self.classifier[1] or {}))
        if self.representation not in ("dense", "sparse"):
            raise EvaluationError("pipeline", f"unknown representation {self.representation!r}")
        if not self.feature_order:
            self.feature_order = list(self.assignment)

    def fit(self, column_values: dict[str, list], y_encoded: np.ndarray,
            n_classes: int, labels: list) -> FittedPipeline:
        """Fit featurizers, preprocessor and classifier on the given rows."""
        featurizers = {}
        blocks = []
        for name in self.feature_order:
            alg, params = self.assignment[name]
            featurizer = build_featurizer(alg, params)
            featurizer.fit(column_values[name])
            featurizers[name] = featurizer
            blocks.append(featurizer.transform(column_values[name]))
        sparse_plan = self.representation == "sparse"
        matrix = FeatureMatrix.hstack(blocks, sparse_out=sparse_plan)

        p_alg, p_params = self.preprocessor
        preprocessor = build_preprocessor(
            p_alg, p_params, seed=stable_seed("prep", self.seed) % (2 ** 32))
        Xp = _stage_input(matrix, p_alg.value, _SPARSE_PREPROCESSORS)
        preprocessor.fit(Xp, y_encoded)
        transformed = FeatureMatrix(preprocessor.transform(Xp))

        c_alg, c_params = self.classifier
        classifier = build_classifier(
            c_alg, c_params, seed=stable_seed("clf", self.seed) % (2 ** 32))
        Xc = _stage_input(transformed, c_alg.value, _SPARSE_CLASSIFIERS)
        classifier.fit(Xc, y_encoded, n_classes)
        return FittedPipeline(featurizers, preprocessor, classifier, labels,
                              list(self.feature_order), sparse_plan)


def _column_subset(dataset, names: list[str], rows: np.ndarray) -> dict[str, list]:
    return {name: [dataset.columns[name][i] for i in rows] for name in names}


def cross_validate(pipeline: PipelineInstance, dataset, folds: int,
                   metrics=(Metric.accuracy, Metric.f1, Metric.precision, Metric.recall),
                   fold_seed: int = FOLD_SHUFFLE_SEED) -> CVResult:
    """Stratified v-fold evaluation of one pipeline on a dataset."""
    metric_names = [Metric(m).value for m in metrics]
    y_encoded, labels = _encode_target(dataset.target_values)
    if len(labels) < 2:
        raise EvaluationError("cross_validate", "single-class dataset cannot be cross validated")
    validation_sets = stratified_folds(y_encoded, folds, fold_seed)

    feature_names = pipeline.feature_order or [
        c.name for c in dataset.schema.feature_columns]
    fold_scores: dict[str, list[float]] = {name: [] for name in metric_names}
    fit_seconds = 0.0
    all_rows = np.arange(dataset.row_count)
    for validation in validation_sets:
        mask = np.ones(dataset.row_count, dtype=bool)
        mask[validation] = False
        training = all_rows[mask]
        if len(np.unique(y_encoded[training])) < 2:
            raise EvaluationError("cross_validate",
                                  "a fold's training split holds fewer than 2 classes")
        started = time.perf_counter()
        fitted = pipeline.fit(_column_subset(dataset, feature_names, training),
                              y_encoded[training], len(labels), labels)
        fit_seconds += time.perf_counter() - started
        encoded, _ = fitted.predict_encoded(
            fitted.matrix_for(_column_subset(dataset, feature_names, validation)))
        truth = [labels[i] for i in y_encoded[validation]]
        guess = [labels[i] for i in encoded]
        scored = compute_metrics(truth, guess, labels)
        for name in metric_names:
            fold_scores[name].append(scored[name])

    means = {name: float(np.mean(scores)) for name, scores in fold_scores.items()}
    return CVResult(fold_scores, means, fit_seconds)
