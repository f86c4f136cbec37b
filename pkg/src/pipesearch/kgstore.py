"""Persistent knowledge store for everything the search produces.

Records (plans, per-episode evaluations, trained models, training inputs)
are immutable documents appended to a newline-delimited JSON journal and
indexed in memory. Re-recording an existing id appends a new version;
fetch always returns the latest. "Current best" is computed from the
evaluation records on demand, never stored.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .enums import (
    ClassifierAlgorithm,
    FeatureType,
    FeaturizerAlgorithm,
    Metric,
    PreprocessorAlgorithm,
)
from .errors import InvariantViolation, NoEvaluations, UnknownSession

__all__ = [
    "FeatureAssignment", "Label", "MachineLearningModel", "FieldInput",
    "TrainingInput", "EvaluationRecord", "PlanRecord", "KnowledgeStore",
    "DEFAULT_CANDIDATE_MODELS", "DEFAULT_CANDIDATE_PREPROCESSORS",
]

# Candidate sets used when a training input omits them entirely.
DEFAULT_CANDIDATE_MODELS = [
    ClassifierAlgorithm.random_forest_classifier,
    ClassifierAlgorithm.gaussian_nb_classifier,
    ClassifierAlgorithm.multinomial_nb_classifier,
    ClassifierAlgorithm.logistic_classifier,
    ClassifierAlgorithm.sgd_classifier,
]
DEFAULT_CANDIDATE_PREPROCESSORS = [
    PreprocessorAlgorithm.noop,
    PreprocessorAlgorithm.pca,
    PreprocessorAlgorithm.selectkbest,
    PreprocessorAlgorithm.minmaxscaler,
    PreprocessorAlgorithm.robustscaler,
    PreprocessorAlgorithm.absscaler,
    PreprocessorAlgorithm.std_scaler,
]

_MEAN_TOLERANCE = 1e-9


def _require(condition: bool, field_name: str, message: str) -> None:
    if not condition:
        raise InvariantViolation(field_name, message)


@dataclass
class FeatureAssignment:
    """Which featurizer handles which column."""

    field_name: str
    featurizer: FeaturizerAlgorithm

    def to_json_dict(self) -> dict:
        return {"fieldName": self.field_name, "featurizer": self.featurizer.value}

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeatureAssignment":
        return cls(d["fieldName"], FeaturizerAlgorithm(d["featurizer"]))


@dataclass
class Label:
    """A class name a trained model can emit, with optional confidence."""

    value: str
    confidence: float | None = None
    id: str | None = None

    def __post_init__(self):
        if self.confidence is not None:
            _require(0.0 <= self.confidence <= 1.0, "confidence", "must lie in [0,1]")

    def to_json_dict(self) -> dict:
        d: dict = {"value": self.value, "confidence": self.confidence}
        if self.id is not None:
            d["id"] = self.id
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "Label":
        return cls(value=d["value"], confidence=d.get("confidence"), id=d.get("id"))


@dataclass
class MachineLearningModel:
    """A trained pipeline: algorithm, featurization, preprocessor,
    hyperparameters and headline quality numbers."""

    algorithm: ClassifierAlgorithm
    preprocessor: PreprocessorAlgorithm
    accuracy: float
    features: list[FeatureAssignment] = field(default_factory=list)
    hyperparameters: dict = field(default_factory=dict)
    saved: bool = False
    time_to_learn_in_seconds: float = 0.0
    labels: list[Label] = field(default_factory=list)
    session_id: str | None = None
    plan_id: str | None = None
    artifact_path: str | None = None
    id: str | None = None

    def __post_init__(self):
        _require(0.0 <= self.accuracy <= 1.0, "accuracy", "must lie in [0,1]")
        _require(self.time_to_learn_in_seconds >= 0.0, "timeToLearnInSeconds",
                 "must be non-negative")

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "algorithm": self.algorithm.value,
            "features": [f.to_json_dict() for f in self.features],
            "preprocessor": self.preprocessor.value,
            "hyperparameters": dict(self.hyperparameters),
            "saved": self.saved,
            "accuracy": self.accuracy,
            "timeToLearnInSeconds": self.time_to_learn_in_seconds,
            "labels": [l.to_json_dict() for l in self.labels],
            "sessionId": self.session_id,
            "planId": self.plan_id,
            "artifactPath": self.artifact_path,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MachineLearningModel":
        return cls(
            algorithm=ClassifierAlgorithm(d["algorithm"]),
            preprocessor=PreprocessorAlgorithm(d["preprocessor"]),
            accuracy=d["accuracy"],
            features=[FeatureAssignment.from_json_dict(f) for f in d.get("features", [])],
            hyperparameters=d.get("hyperparameters", {}),
            saved=d.get("saved", False),
            time_to_learn_in_seconds=d.get("timeToLearnInSeconds", 0.0),
            labels=[Label.from_json_dict(l) for l in d.get("labels", [])],
            session_id=d.get("sessionId"),
            plan_id=d.get("planId"),
            artifact_path=d.get("artifactPath"),
            id=d.get("id"),
        )


@dataclass
class FieldInput:
    """Per-column declaration in a training request. Type may be omitted
    (inferred from data); at most one featurizer override is allowed."""

    name: str
    type: FeatureType | None = None
    featurizer_name: list[FeaturizerAlgorithm] | None = None

    def __post_init__(self):
        if self.featurizer_name is not None:
            _require(len(self.featurizer_name) == 1, "featurizerName",
                     "must contain exactly one featurizer when present")

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "type": self.type.value if self.type else None,
            "featurizerName": [f.value for f in self.featurizer_name]
            if self.featurizer_name is not None else None,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FieldInput":
        feats = d.get("featurizerName")
        return cls(
            name=d["name"],
            type=FeatureType(d["type"]) if d.get("type") else None,
            featurizer_name=[FeaturizerAlgorithm(f) for f in feats]
            if feats is not None else None,
        )


@dataclass
class TrainingInput:
    """A request to learn a classifier for one target column of one
    dataset. Candidate sets left as None fall back to the built-in
    defaults; explicitly empty lists are rejected."""

    target_name: str
    data_input: str
    fields: list[FieldInput] = field(default_factory=list)
    folds: int = 10
    selection_criteria: Metric = Metric.accuracy
    candidate_models: list[ClassifierAlgorithm] | None = None
    candidate_preprocessors: list[PreprocessorAlgorithm] | None = None
    model_profiling_episode: int | None = None
    model_search_episode: int | None = None
    minimum_accuracy: float | None = None
    model_id: str | None = None
    id: str | None = None

    def __post_init__(self):
        _require(bool(self.target_name), "targetName", "must be set")
        _require(bool(self.data_input), "dataInput", "must be set")
        _require(self.folds >= 1, "folds", "must be a positive integer")
        if self.candidate_models is None:
            self.candidate_models = list(DEFAULT_CANDIDATE_MODELS)
        if self.candidate_preprocessors is None:
            self.candidate_preprocessors = list(DEFAULT_CANDIDATE_PREPROCESSORS)
        _require(len(self.candidate_models) > 0, "candidateModels",
                 "must be non-empty after defaulting")
        _require(len(self.candidate_preprocessors) > 0, "candidatePreprocessors",
                 "must be non-empty after defaulting")
        if self.minimum_accuracy is not None:
            _require(0.0 <= self.minimum_accuracy <= 1.0, "minimumAccuracy",
                     "must lie in [0,1]")
        if self.model_profiling_episode is not None:
            _require(self.model_profiling_episode >= 1, "modelProfilingEpisode",
                     "must be a positive integer")
        if self.model_search_episode is not None:
            _require(self.model_search_episode >= 1, "modelSearchEpisode",
                     "must be a positive integer")
        feature_fields = [f.name for f in self.fields]
        _require(len(set(feature_fields)) == len(feature_fields), "fields",
                 "field names must be unique")

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "modelId": self.model_id,
            "minimumAccuracy": self.minimum_accuracy,
            "targetName": self.target_name,
            "dataInput": self.data_input,
            "fields": [f.to_json_dict() for f in self.fields],
            "folds": self.folds,
            "selectionCriteria": self.selection_criteria.value,
            "candidateModels": [c.value for c in self.candidate_models],
            "candidatePreprocessors": [p.value for p in self.candidate_preprocessors],
            "modelProfilingEpisode": self.model_profiling_episode,
            "modelSearchEpisode": self.model_search_episode,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TrainingInput":
        return cls(
            target_name=d["targetName"],
            data_input=d["dataInput"],
            fields=[FieldInput.from_json_dict(f) for f in d.get("fields", [])],
            folds=d.get("folds", 10),
            selection_criteria=Metric(d.get("selectionCriteria", "accuracy")),
            candidate_models=[ClassifierAlgorithm(c) for c in d["candidateModels"]]
            if d.get("candidateModels") is not None else None,
            candidate_preprocessors=[PreprocessorAlgorithm(p) for p in d["candidatePreprocessors"]]
            if d.get("candidatePreprocessors") is not None else None,
            model_profiling_episode=d.get("modelProfilingEpisode"),
            model_search_episode=d.get("modelSearchEpisode"),
            minimum_accuracy=d.get("minimumAccuracy"),
            model_id=d.get("modelId"),
            id=d.get("id"),
        )


@dataclass
class PlanRecord:
    """A generated plan, journaled so evaluations can reference it."""

    session_id: str
    plan: dict                      # Plan.to_json_dict() payload
    phase: int
    outer_iteration: int = 0
    id: str | None = None

    def __post_init__(self):
        _require(self.phase in (1, 2, 3), "phase", "must be 1, 2 or 3")

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "sessionId": self.session_id,
            "plan": self.plan,
            "phase": self.phase,
            "outerIteration": self.outer_iteration,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PlanRecord":
        return cls(session_id=d["sessionId"], plan=d["plan"], phase=d["phase"],
                   outer_iteration=d.get("outerIteration", 0), id=d.get("id"))


@dataclass
class EvaluationRecord:
    """One profiled episode: the pipeline tried, the sampled parameters,
    and the per-fold metric values."""

    session_id: str
    plan_id: str
    phase: int
    classifier: ClassifierAlgorithm
    preprocessor: PreprocessorAlgorithm
    features: list[FeatureAssignment]
    params: dict
    folds: int
    fold_scores: dict[str, list[float]]   # metric name -> per-fold values
    means: dict[str, float]
    wall_clock_seconds: float
    episode_index: int
    id: str | None = None

    def __post_init__(self):
        _require(self.phase in (1, 2, 3), "phase", "must be 1, 2 or 3")
        _require(bool(self.plan_id), "planId", "must be set")
        _require(self.wall_clock_seconds >= 0.0, "wallClockSeconds", "must be non-negative")
        _require(self.episode_index >= 0, "episodeIndex", "must be non-negative")
        for metric, scores in self.fold_scores.items():
            _require(len(scores) == self.folds, "foldScores",
                     f"fold count mismatch for {metric}: "
                     f"{len(scores)} scores but folds={self.folds}")
        _require(set(self.means) == set(self.fold_scores), "means",
                 "means must cover exactly the recorded metrics")
        for metric, mean in self.means.items():
            expected = sum(self.fold_scores[metric]) / self.folds
            _require(abs(mean - expected) <= _MEAN_TOLERANCE, "means",
                     f"mean for {metric} deviates from the fold average")

    def mean_for(self, criterion: Metric) -> float:
        return self.means[criterion.value]

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "sessionId": self.session_id,
            "planId": self.plan_id,
            "phase": self.phase,
            "classifier": self.classifier.value,
            "preprocessor": self.preprocessor.value,
            "features": [f.to_json_dict() for f in self.features],
            "params": dict(self.params),
            "folds": self.folds,
            "foldScores": {m: list(v) for m, v in self.fold_scores.items()},
            "means": dict(self.means),
            "wallClockSeconds": self.wall_clock_seconds,
            "episodeIndex": self.episode_index,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "EvaluationRecord":
        return cls(
            session_id=d["sessionId"],
            plan_id=d["planId"],
            phase=d["phase"],
            classifier=ClassifierAlgorithm(d["classifier"]),
            preprocessor=PreprocessorAlgorithm(d["preprocessor"]),
            features=[FeatureAssignment.from_json_dict(f) for f in d.get("features", [])],
            params=d.get("params", {}),
            folds=d["folds"],
            fold_scores={m: list(v) for m, v in d["foldScores"].items()},
            means=dict(d["means"]),
            wall_clock_seconds=d["wallClockSeconds"],
            episode_index=d["episodeIndex"],
            id=d.get("id"),
        )


_KINDS = {
    MachineLearningModel: ("model", "model"),
    TrainingInput: ("trainingInput", "input"),
    EvaluationRecord: ("evaluation", "ev"),
    PlanRecord: ("plan", "plan"),
    Label: ("label", "label"),
}
_KIND_TO_TYPE = {kind: t for t, (kind, _) in _KINDS.items()}


class KnowledgeStore:
    """Append-only journal of knowledge records with an in-memory index.

    One JSON document per line, discriminated by `kind`. A path of None
    keeps everything in memory (handy for tests). Single writer, many
    readers; a lock keeps reads consistent with the last completed write.
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.RLock()
        self._records: dict[str, object] = {}       # id -> latest typed record
        self._versions: dict[str, int] = {}
        self._order: list[str] = []                  # first-recorded order of ids
        self._counters: dict[str, int] = {}          # id prefix -> last numeral
        self._sessions: set[str] = set()
        if self._path is not None and self._path.exists():
            self._replay()

    # -- journal plumbing ------------------------------------------------

    def _replay(self) -> None:
        with self._path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                kind = doc.pop("kind")
                doc.pop("version", None)
                record_type = _KIND_TO_TYPE[kind]
                record = record_type.from_json_dict(doc)
                self._index(record, record.id)

    def _index(self, record, record_id: str) -> None:
        if record_id not in self._records:
            self._order.append(record_id)
            self._versions[record_id] = 1
        else:
            self._versions[record_id] += 1
        self._records[record_id] = record
        prefix, _, numeral = record_id.rpartition("-")
        if numeral.isdigit():
            self._counters[prefix] = max(self._counters.get(prefix, 0), int(numeral))
        session_id = getattr(record, "session_id", None)
        if session_id:
            self._sessions.add(session_id)

    def _next_id(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0) + 1
        self._counters[prefix] = n
        return f"{prefix}-{n:04d}"

    def _append(self, kind: str, record, version: int) -> None:
        if self._path is None:
            return
        doc = {"kind": kind, "version": version}
        doc.update(record.to_json_dict())
        line = json.dumps(doc, ensure_ascii=False, sort_keys=True)
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    # -- operations ------------------------------------------------------

    def record(self, entity) -> str:
        """Persist a record, returning its identifier. Recording an id
        that already exists appends a new version of that record."""
        kind_entry = _KINDS.get(type(entity))
        if kind_entry is None:
            raise InvariantViolation("kind", f"unsupported record type {type(entity).__name__}")
        kind, prefix = kind_entry
        with self._lock:
            if isinstance(entity, EvaluationRecord) and entity.plan_id not in self._records:
                raise InvariantViolation("planId",
                                         f"planId {entity.plan_id!r} does not resolve "
                                         "to a recorded plan")
            if entity.id is None:
                entity.id = self._next_id(prefix)
            self._index(entity, entity.id)
            self._append(kind, entity, self._versions[entity.id])
            return entity.id

    def fetch(self, record_id: str):
        """Latest version of the record with this id, or KeyError."""
        with self._lock:
            return self._records[record_id]

    def __contains__(self, record_id: str) -> bool:
        with self._lock:
            return record_id in self._records

    def has_session(self, session_id: str) -> bool:
        with self._lock:
            return session_id in self._sessions

    def all_of(self, record_type) -> list:
        """All latest-version records of one type, in first-recorded order."""
        with self._lock:
            return [self._records[i] for i in self._order
                    if isinstance(self._records[i], record_type)]

    def query_evaluations(self, session_id: str, phase: int | None = None,
                          classifier: ClassifierAlgorithm | None = None,
                          preprocessor: PreprocessorAlgorithm | None = None,
                          ) -> list[EvaluationRecord]:
        """All matching evaluation records, ordered by episode index."""
        with self._lock:
            if session_id not in self._sessions:
                raise UnknownSession(f"unknown session {session_id!r}")
            out = [r for r in self.all_of(EvaluationRecord) if r.session_id == session_id]
        if phase is not None:
            out = [r for r in out if r.phase == phase]
        if classifier is not None:
            out = [r for r in out if r.classifier == classifier]
        if preprocessor is not None:
            out = [r for r in out if r.preprocessor == preprocessor]
        out.sort(key=lambda r: r.episode_index)
        return out

    def query_best_model(self, session_id: str, criterion: Metric) -> MachineLearningModel:
        """Model view of the best evaluation by mean criterion value.
        A recorded model matching any top-tied evaluation is preferred;
        otherwise ties break to the earliest record id and a plain
        unsaved view of that evaluation is returned."""
        evaluations = self.query_evaluations(session_id)
        evaluations = [r for r in evaluations if criterion.value in r.means]
        if not evaluations:
            raise NoEvaluations(f"no evaluations recorded for session {session_id!r}")
        best = max(evaluations, key=lambda r: (r.mean_for(criterion), ))
        # max() keeps the first maximum, but make the earliest-id tie-break
        # explicit rather than an artifact of iteration order.
        top = best.mean_for(criterion)
        tied = sorted((r for r in evaluations if r.mean_for(criterion) == top),
                      key=lambda r: r.id)
        with self._lock:
            models = [m for m in self.all_of(MachineLearningModel)
                      if m.session_id == session_id]
        # a trained model tied at the top beats a bare evaluation view
        for r in tied:
            for model in models:
                if (model.algorithm == r.classifier
                        and model.preprocessor == r.preprocessor
                        and model.hyperparameters == r.params):
                    return model
        best = tied[0]
        return MachineLearningModel(
            algorithm=best.classifier,
            preprocessor=best.preprocessor,
            accuracy=best.mean_for(criterion),
            features=list(best.features),
            hyperparameters=dict(best.params),
            saved=False,
            time_to_learn_in_seconds=best.wall_clock_seconds,
            session_id=session_id,
            plan_id=best.plan_id,
        )
