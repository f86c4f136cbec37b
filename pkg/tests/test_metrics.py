"""Metric tests: closed-form examples plus consistency properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipesearch.evaluator import compute_metrics
from pipesearch.evaluator.metrics import per_class_metrics


def test_constant_majority_on_90_10_split():
    y_true = ["maj"] * 90 + ["min"] * 10
    y_pred = ["maj"] * 100
    scores = compute_metrics(y_true, y_pred, ["maj", "min"])
    assert scores["accuracy"] == pytest.approx(0.9)
    per_class = per_class_metrics(y_true, y_pred, ["maj", "min"])
    assert per_class["min"]["recall"] == 0.0
    assert per_class["maj"]["recall"] == 1.0


def test_perfect_prediction_scores_one_everywhere():
    y = ["a", "b", "a", "c"]
    scores = compute_metrics(y, list(y), ["a", "b", "c"])
    assert scores == {"accuracy": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_empty_evaluation_set_rejected():
    with pytest.raises(ValueError):
        compute_metrics([], [], ["a"])


def test_binary_confusion_hand_example():
    # tp(a)=2, fn(a)=1, fp(a)=1, tn relative to a = 2
    y_true = ["a", "a", "a", "b", "b", "b"]
    y_pred = ["a", "a", "b", "a", "b", "b"]
    scores = compute_metrics(y_true, y_pred, ["a", "b"])
    assert scores["accuracy"] == pytest.approx(4 / 6)
    per_class = per_class_metrics(y_true, y_pred, ["a", "b"])
    assert per_class["a"]["precision"] == pytest.approx(2 / 3)
    assert per_class["a"]["recall"] == pytest.approx(2 / 3)


labels_strategy = st.lists(st.sampled_from(["a", "b", "c"]), min_size=1, max_size=60)


@settings(max_examples=60)
@given(labels_strategy, labels_strategy)
def test_accuracy_plus_error_rate_is_one(y_true, y_pred):
    size = min(len(y_true), len(y_pred))
    y_true, y_pred = y_true[:size], y_pred[:size]
    scores = compute_metrics(y_true, y_pred, ["a", "b", "c"])
    error = float(np.mean([t != p for t, p in zip(y_true, y_pred)]))
    assert scores["accuracy"] + error == pytest.approx(1.0)


@settings(max_examples=60)
@given(labels_strategy, labels_strategy)
def test_all_metrics_stay_in_unit_interval(y_true, y_pred):
    size = min(len(y_true), len(y_pred))
    scores = compute_metrics(y_true[:size], y_pred[:size], ["a", "b", "c"])
    for name, value in scores.items():
        assert 0.0 <= value <= 1.0, name


@settings(max_examples=30)
@given(labels_strategy)
def test_metrics_derive_from_shared_confusion_counts(y_true):
    # macro f1 recomputed from per-class precision/recall must agree
    rng = np.random.default_rng(1)
    y_pred = [rng.choice(["a", "b", "c"]) for _ in y_true]
    labels = ["a", "b", "c"]
    scores = compute_metrics(y_true, y_pred, labels)
    per_class = per_class_metrics(y_true, y_pred, labels)
    f1s = [per_class[c]["f1"] for c in labels]
    assert scores["f1"] == pytest.approx(float(np.mean(f1s)))
