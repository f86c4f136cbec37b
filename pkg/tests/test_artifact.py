"""Model artifact tests: serialization round trips, prediction-time
schema checks and the missing-value policy."""

import json

import numpy as np
import pytest

from pipesearch.enums import FeatureType
from pipesearch.errors import SchemaMismatch, UnknownComponent
from pipesearch.evaluator import ModelArtifact, PipelineInstance, fit_final, predict
from pipesearch.evaluator.artifact import _pack, _unpack
from pipesearch.ingest import ColumnSchema, Dataset, DatasetSchema


def blob_dataset(n=200, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    x0 = np.concatenate([rng.normal(-2, 0.4, half), rng.normal(2, 0.4, half)])
    x1 = rng.normal(0.0, 1.0, n)
    labels = ["A"] * half + ["B"] * half
    schema = DatasetSchema("blob_data", [
        ColumnSchema("field_x0", "x0", FeatureType.float),
        ColumnSchema("field_x1", "x1", FeatureType.float),
        ColumnSchema("field_label", "label", FeatureType.categorical),
    ], "field_label")
    return Dataset(schema, {"field_x0": list(x0), "field_x1": list(x1),
                            "field_label": labels})


def blob_artifact(classifier="logistic_classifier", params=None, seed=0):
    pipe = PipelineInstance(
        assignment={"field_x0": ("std_scaler", {}), "field_x1": ("std_scaler", {})},
        preprocessor=("noop", {}),
        classifier=(classifier, params or {}),
        representation="dense", seed=seed,
        feature_order=["field_x0", "field_x1"])
    return fit_final(pipe, blob_dataset(seed=seed))


def test_training_rows_scored_back_above_99_percent():
    artifact = blob_artifact()
    ds = blob_dataset()
    rows = [{"x0": a, "x1": b} for a, b in zip(ds.columns["field_x0"],
                                               ds.columns["field_x1"])]
    labels = [l.value for l in predict(artifact, rows)]
    truth = ds.columns["field_label"]
    assert np.mean([a == b for a, b in zip(labels, truth)]) >= 0.99


def test_point_deep_inside_a_class_gets_high_confidence():
    artifact = blob_artifact()
    [label] = predict(artifact, [{"x0": -3.0, "x1": 0.0}])
    assert label.value == "A"
    assert label.confidence is not None and label.confidence > 0.9


def test_serialize_deserialize_predict_equality_on_100_random_rows():
    artifact = blob_artifact("random_forest_classifier", {"trees": 12}, seed=3)
    rng = np.random.default_rng(42)
    rows = [{"x0": float(a), "x1": float(b)}
            for a, b in rng.normal(0, 2.5, (100, 2))]
    before = [(l.value, l.confidence) for l in predict(artifact, rows)]
    clone = ModelArtifact.from_json_dict(
        json.loads(json.dumps(artifact.to_json_dict())))
    after = [(l.value, l.confidence) for l in predict(clone, rows)]
    assert before == after


def test_save_and_load_through_a_file(tmp_path):
    artifact = blob_artifact(seed=4)
    path = artifact.save(tmp_path / "model.json")
    loaded = ModelArtifact.load(path)
    rows = [{"x0": 1.8, "x1": -0.2}]
    assert ([l.value for l in predict(loaded, rows)]
            == [l.value for l in predict(artifact, rows)])


def test_unknown_component_token_rejected_at_build_time():
    pipe = PipelineInstance(
        assignment={"field_x0": ("std_scaler", {}), "field_x1": ("std_scaler", {})},
        preprocessor=("noop", {}), classifier=("logistic_classifier", {}),
        representation="dense", feature_order=["field_x0", "field_x1"])
    artifact = fit_final(pipe, blob_dataset(seed=5))
    artifact.components["preprocessor"] = "imaginary_transform"
    with pytest.raises(UnknownComponent):
        artifact.rebuild()


def test_extra_unknown_column_is_named_in_the_error():
    artifact = blob_artifact(seed=6)
    with pytest.raises(SchemaMismatch, match="surprise"):
        predict(artifact, [{"x0": 0.0, "x1": 0.0, "surprise": 1}])


def test_target_column_in_rows_is_tolerated_and_ignored():
    artifact = blob_artifact(seed=7)
    with_target = predict(artifact, [{"x0": -2.5, "x1": 0.1, "label": "B"}])
    without = predict(artifact, [{"x0": -2.5, "x1": 0.1}])
    assert [l.value for l in with_target] == [l.value for l in without]


def test_missing_numeric_cell_is_imputed_and_scored():
    artifact = blob_artifact(seed=8)
    [a] = predict(artifact, [{"x0": -2.5}])            # x1 absent
    [b] = predict(artifact, [{"x0": -2.5, "x1": None}])  # x1 null
    [c] = predict(artifact, [{"x0": -2.5, "x1": "?"}])   # x1 missing token
    assert a.value == b.value == c.value == "A"


def test_non_numeric_value_in_numeric_column_rejected():
    artifact = blob_artifact(seed=9)
    with pytest.raises(SchemaMismatch, match="not numeric"):
        predict(artifact, [{"x0": "banana", "x1": 0.0}])


def test_raw_header_names_resolve_like_normalized_names():
    artifact = blob_artifact(seed=10)
    raw = predict(artifact, [{"x0": 2.4, "x1": 0.0}])
    normalized = predict(artifact, [{"field_x0": 2.4, "field_x1": 0.0}])
    assert [l.value for l in raw] == [l.value for l in normalized]


def test_empty_row_list_gives_empty_predictions():
    artifact = blob_artifact(seed=11)
    assert predict(artifact, []) == []


def test_envelope_has_the_documented_shape():
    artifact = blob_artifact(seed=12)
    d = artifact.to_json_dict()
    assert set(d) == {"formatVersion", "schema", "components", "parameters",
                      "fittedState"}
    assert d["formatVersion"] == 1
    assert d["components"]["classifier"] == "logistic_classifier"
    # fitted numeric arrays travel as base64 blocks
    packed = d["fittedState"]["classifier"]["W"]
    assert set(packed) == {"__block__"}
    assert set(packed["__block__"]) == {"dtype", "shape", "data"}


def test_pack_unpack_round_trips_mixed_structures():
    original = {
        "weights": np.arange(12, dtype=np.float64).reshape(3, 4),
        "ids": np.array([5, 9], dtype=np.int64),
        "names": ["alpha", "beta"],
        "nested": {"scale": 2.5, "flags": [True, False]},
        "empty": [],
    }
    restored = _unpack(json.loads(json.dumps(_pack(original))))
    assert np.array_equal(restored["weights"], original["weights"])
    assert restored["weights"].dtype == np.float64
    assert np.array_equal(restored["ids"], original["ids"])
    assert restored["names"] == ["alpha", "beta"]
    assert restored["nested"]["scale"] == 2.5
    assert restored["empty"] == []


def test_sparse_text_artifact_round_trip():
    n = 60
    texts = ["free money now"] * (n // 2) + ["project status update"] * (n // 2)
    labels = ["spam"] * (n // 2) + ["ham"] * (n // 2)
    schema = DatasetSchema("mail_data", [
        ColumnSchema("field_body", "body", FeatureType.text),
        ColumnSchema("field_kind", "kind", FeatureType.categorical),
    ], "field_kind")
    ds = Dataset(schema, {"field_body": texts, "field_kind": labels})
    pipe = PipelineInstance(
        assignment={"field_body": ("tfidf_vectorizer", {})},
        preprocessor=("noop", {}), classifier=("multinomial_nb_classifier", {}),
        representation="sparse", seed=13, feature_order=["field_body"])
    artifact = fit_final(pipe, ds)
    clone = ModelArtifact.from_json_dict(
        json.loads(json.dumps(artifact.to_json_dict())))
    rows = [{"body": "free update"}, {"body": "status money"}]
    assert ([(l.value, l.confidence) for l in predict(clone, rows)]
            == [(l.value, l.confidence) for l in predict(artifact, rows)])
