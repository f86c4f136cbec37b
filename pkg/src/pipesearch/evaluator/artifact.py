"""Trained model artifacts: a versioned JSON envelope that captures the
schema, component tokens, parameters and fitted state of a pipeline so
predictions can be served long after training.

Numeric arrays inside fitted state are stored as base64 blocks
({dtype, shape, data}) to keep files compact and round trips exact.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import EvaluationError, SchemaMismatch
from ..ingest import DatasetSchema, is_missing
from ..enums import FeatureType
from ..kgstore import Label
from .classifiers import build_classifier
from .featurizers import build_featurizer
from .pipeline import FittedPipeline, PipelineInstance, _encode_target
from .preprocessors import build_preprocessor

__all__ = ["ModelArtifact", "fit_final", "predict"]

ARTIFACT_FORMAT_VERSION = 1

_NUMERIC_KINDS = frozenset("fiub")


def _pack(obj):
    """Recursively replace numeric arrays/lists with base64 blocks."""
    if isinstance(obj, np.ndarray):
        arr = np.ascontiguousarray(obj)
        if arr.dtype.kind in _NUMERIC_KINDS and arr.size:
            return {"__block__": {"dtype": str(arr.dtype), "shape": list(arr.shape),
                                  "data": base64.b64encode(arr.tobytes()).decode("ascii")}}
        return [_pack(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _pack(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        try:
            arr = np.asarray(obj)
        except ValueError:
            arr = np.empty(0, dtype=object)
        if arr.dtype.kind in _NUMERIC_KINDS and arr.size and arr.ndim >= 1:
            return _pack(arr)
        return [_pack(x) for x in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _unpack(obj):
    if isinstance(obj, dict):
        if set(obj) == {"__block__"}:
            block = obj["__block__"]
            raw = base64.b64decode(block["data"])
            arr = np.frombuffer(raw, dtype=np.dtype(block["dtype"]))
            return arr.reshape(block["shape"]).copy()
        return {k: _unpack(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_unpack(x) for x in obj]
    return obj


def _coerce(value, ftype: FeatureType):
    """Normalize one raw prediction-time cell to the typed convention the
    featurizers were trained on (None means missing)."""
    if value is None:
        return None
    if ftype in (FeatureType.integer, FeatureType.float):
        if isinstance(value, bool):
            return float(value)
        if isinstance(value, (int, float)):
            return value
        text = str(value).strip()
        if is_missing(text):
            return None
        try:
            return float(text)
        except ValueError:
            raise SchemaMismatch(f"value {value!r} is not numeric") from None
    text = str(value)
    return None if is_missing(text) else text


@dataclass
class ModelArtifact:
    """Serialized form of one fitted pipeline."""

    schema: dict
    components: dict
    parameters: dict
    fitted_state: dict
    format_version: int = ARTIFACT_FORMAT_VERSION

    def __post_init__(self):
        if self.format_version != ARTIFACT_FORMAT_VERSION:
            raise EvaluationError(
                "artifact", f"unsupported format version {self.format_version}")

    # -- construction -------------------------------------------------

    @classmethod
    def from_fitted(cls, pipeline: PipelineInstance, fitted: FittedPipeline,
                    schema: DatasetSchema) -> "ModelArtifact":
        components = {
            "featurizers": {name: alg.value
                            for name, (alg, _) in pipeline.assignment.items()},
            "preprocessor": pipeline.preprocessor[0].value,
            "classifier": pipeline.classifier[0].value,
            "representation": pipeline.representation,
            "featureOrder": list(fitted.feature_order),
        }
        parameters = {
            "featurizers": {name: dict(params)
                            for name, (_, params) in pipeline.assignment.items()},
            "preprocessor": dict(pipeline.preprocessor[1]),
            "classifier": dict(pipeline.classifier[1]),
        }
        fitted_state = {
            "featurizers": {name: _pack(f.state())
                            for name, f in fitted.featurizers.items()},
            "preprocessor": _pack(fitted.preprocessor.state()),
            "classifier": _pack(fitted.classifier.state()),
            "labels": list(fitted.labels),
        }
        return cls(schema.to_json_dict(), components, parameters, fitted_state)

    # -- serialization ------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "formatVersion": self.format_version,
            "schema": self.schema,
            "components": self.components,
            "parameters": self.parameters,
            "fittedState": self.fitted_state,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ModelArtifact":
        return cls(d["schema"], d["components"], d["parameters"],
                   d["fittedState"], d.get("formatVersion", ARTIFACT_FORMAT_VERSION))

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json_dict(), sort_keys=True,
                                   ensure_ascii=False) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "ModelArtifact":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    # -- prediction ---------------------------------------------------

    def dataset_schema(self) -> DatasetSchema:
        return DatasetSchema.from_json_dict(self.schema)

    def rebuild(self) -> FittedPipeline:
        featurizers = {}
        for name, token in self.components["featurizers"].items():
            featurizers[name] = build_featurizer(
                token, self.parameters["featurizers"].get(name, {})).load_state(
                    _unpack(self.fitted_state["featurizers"][name]))
        preprocessor = build_preprocessor(
            self.components["preprocessor"],
            self.parameters["preprocessor"]).load_state(
                _unpack(self.fitted_state["preprocessor"]))
        classifier = build_classifier(
            self.components["classifier"],
            self.parameters["classifier"]).load_state(
                _unpack(self.fitted_state["classifier"]))
        return FittedPipeline(
            featurizers, preprocessor, classifier,
            list(self.fitted_state["labels"]),
            list(self.components["featureOrder"]),
            self.components["representation"] == "sparse")

    def predict(self, rows: list[dict]) -> list[Label]:
        return predict(self, rows)


def fit_final(pipeline: PipelineInstance, dataset) -> ModelArtifact:
    """Fit the pipeline on the full dataset and wrap it as an artifact."""
    y_encoded, labels = _encode_target(dataset.target_values)
    if len(labels) < 2:
        raise EvaluationError("fit_final", "single-class dataset cannot be fitted")
    names = pipeline.feature_order or [c.name for c in dataset.schema.feature_columns]
    columns = {name: dataset.columns[name] for name in names}
    fitted = pipeline.fit(columns, y_encoded, len(labels), labels)
    return ModelArtifact.from_fitted(pipeline, fitted, dataset.schema)


def predict(artifact: ModelArtifact, rows: list[dict]) -> list[Label]:
    """Score raw JSON rows with a stored artifact.

    Unknown columns are rejected by name; a missing or null cell follows
    the training missing-value policy (numeric mean imputation, missing
    token otherwise). Confidence comes from predict_proba when the
    classifier provides one.
    """
    schema = artifact.dataset_schema()
    fitted = artifact.rebuild()
    by_type = {c.name: c.ftype for c in schema.columns}
    target = schema.target_name

    column_values: dict[str, list] = {name: [] for name in fitted.feature_order}
    for i, row in enumerate(rows):
        resolved: dict[str, object] = {}
        for key, value in row.items():
            column = schema.resolve(key)
            if column is None:
                raise SchemaMismatch(f"row {i} has unknown column {key!r}")
            if column.name == target:
                continue    # labels are ignored, never required
            resolved[column.name] = value
        for name in fitted.feature_order:
            column_values[name].append(_coerce(resolved.get(name), by_type[name]))

    if not rows:
        return []
    encoded, proba = fitted.predict_encoded(fitted.matrix_for(column_values))
    labels = fitted.labels
    out = []
    for i, cls in enumerate(encoded):
        confidence = float(proba[i].max()) if proba is not None else None
        out.append(Label(value=str(labels[cls]), confidence=confidence))
    return out
