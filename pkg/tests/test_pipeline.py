"""Cross-validation tests: fold discipline, leakage protection,
accuracy floors on constructed data and gradient correctness of the
logistic trainer."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipesearch.enums import FeatureType
from pipesearch.errors import EvaluationError
from pipesearch.evaluator import PipelineInstance, cross_validate, stratified_folds
from pipesearch.evaluator.classifiers import LogisticClassifier, logistic_loss_and_grad
from pipesearch.evaluator.featurizers import MinMaxFeaturizer
from pipesearch.ingest import ColumnSchema, Dataset, DatasetSchema


def blob_dataset(n=200, seed=0, gap=2.0):
    """Two well-separated gaussian blobs over two float features."""
    rng = np.random.default_rng(seed)
    half = n // 2
    x0 = np.concatenate([rng.normal(-gap, 0.4, half), rng.normal(gap, 0.4, half)])
    x1 = rng.normal(0.0, 1.0, n)
    labels = ["A"] * half + ["B"] * half
    schema = DatasetSchema("blob_data", [
        ColumnSchema("field_x0", "x0", FeatureType.float),
        ColumnSchema("field_x1", "x1", FeatureType.float),
        ColumnSchema("field_label", "label", FeatureType.categorical),
    ], "field_label")
    return Dataset(schema, {"field_x0": list(x0), "field_x1": list(x1),
                            "field_label": labels})


def logistic_pipeline(seed=0):
    return PipelineInstance(
        assignment={"field_x0": ("std_scaler", {}), "field_x1": ("std_scaler", {})},
        preprocessor=("noop", {}),
        classifier=("logistic_classifier", {}),
        representation="dense", seed=seed,
        feature_order=["field_x0", "field_x1"])


# -- fold construction ---------------------------------------------------

def test_fold_sizes_differ_by_at_most_one():
    y = np.array([0] * 47 + [1] * 13)
    folds = stratified_folds(y, 7)
    sizes = sorted(len(f) for f in folds)
    assert sizes[-1] - sizes[0] <= 1
    assert sum(sizes) == 60


def test_folds_are_stratified_per_class():
    y = np.array([0] * 40 + [1] * 20)
    folds = stratified_folds(y, 10)
    for fold in folds:
        minority = int((y[fold] == 1).sum())
        assert 1 <= minority <= 3


def test_folds_partition_the_rows():
    y = np.array([0, 1] * 25)
    folds = stratified_folds(y, 4)
    joined = np.concatenate(folds)
    assert sorted(joined.tolist()) == list(range(50))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 8))
def test_permuting_rows_preserves_the_multiset_of_fold_sizes(seed, v):
    y = np.array([0] * 23 + [1] * 17 + [2] * 9)
    baseline = sorted(len(f) for f in stratified_folds(y, v))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(y))
    shuffled = sorted(len(f) for f in stratified_folds(y[perm], v))
    assert shuffled == baseline


def test_fold_assignment_is_reproducible_under_the_fixed_seed():
    y = np.array([0, 1] * 40)
    first = [f.tolist() for f in stratified_folds(y, 5)]
    second = [f.tolist() for f in stratified_folds(y, 5)]
    assert first == second


# -- preconditions ---------------------------------------------------------

def test_v_equal_1_rejected_with_the_documented_message():
    ds = blob_dataset(20)
    with pytest.raises(EvaluationError, match="v ≥ 2"):
        cross_validate(logistic_pipeline(), ds, 1)


def test_v_larger_than_row_count_rejected():
    ds = blob_dataset(10)
    with pytest.raises(EvaluationError, match="exceeds"):
        cross_validate(logistic_pipeline(), ds, 11)


def test_single_class_dataset_rejected():
    ds = blob_dataset(20)
    ds.columns["field_label"] = ["A"] * 20
    with pytest.raises(EvaluationError, match="single-class"):
        cross_validate(logistic_pipeline(), ds, 5)


# -- accuracy floors ---------------------------------------------------------

def test_separable_blob_reaches_99_percent_mean_accuracy():
    result = cross_validate(logistic_pipeline(), blob_dataset(200, seed=1), 10)
    assert result.means["accuracy"] >= 0.99
    assert len(result.fold_scores["accuracy"]) == 10


def test_cv_result_scores_stay_in_unit_interval():
    result = cross_validate(logistic_pipeline(), blob_dataset(100, seed=2), 5)
    for scores in result.fold_scores.values():
        assert all(0.0 <= s <= 1.0 for s in scores)
    assert result.fit_seconds >= 0.0


def test_cv_is_bit_reproducible():
    a = cross_validate(logistic_pipeline(seed=3), blob_dataset(100, seed=3), 5)
    b = cross_validate(logistic_pipeline(seed=3), blob_dataset(100, seed=3), 5)
    assert a.fold_scores == b.fold_scores
    assert a.means == b.means


# -- leakage -----------------------------------------------------------------

def test_validation_fold_outlier_never_reaches_training_statistics():
    ds = blob_dataset(100, seed=4)
    y_values = ds.target_values
    labels = sorted(set(y_values), key=str)
    encoded = np.array([labels.index(v) for v in y_values])
    folds = stratified_folds(encoded, 5)

    outlier_row = int(folds[0][0])
    clean = list(ds.columns["field_x0"])
    poisoned = list(clean)
    poisoned[outlier_row] = 1e6
    ds.columns["field_x0"] = poisoned

    training = np.array([i for i in range(ds.row_count) if i not in set(folds[0].tolist())])
    featurizer = MinMaxFeaturizer()
    featurizer.fit([poisoned[i] for i in training])

    reference = MinMaxFeaturizer()
    reference.fit([clean[i] for i in training])
    # exact equality: the outlier sat in the validation fold only
    assert featurizer.min_ == reference.min_
    assert featurizer.max_ == reference.max_


def test_pipeline_fit_statistics_ignore_validation_rows():
    # same fold-0 training rows fitted through the real pipeline path,
    # once with a clean dataset and once with an outlier confined to the
    # validation fold: the fitted min_max statistics must match exactly
    clean = blob_dataset(100, seed=5)
    y_values = clean.target_values
    labels = sorted(set(y_values), key=str)
    encoded = np.array([labels.index(v) for v in y_values], dtype=np.int64)
    folds = stratified_folds(encoded, 5)
    row = int(folds[0][0])

    poisoned = blob_dataset(100, seed=5)
    poisoned.columns["field_x0"] = [
        1e6 if i == row else v for i, v in enumerate(poisoned.columns["field_x0"])]

    training = np.array(sorted(set(range(100)) - set(folds[0].tolist())))
    pipe = PipelineInstance(
        assignment={"field_x0": ("min_max_scaler", {}), "field_x1": ("min_max_scaler", {})},
        preprocessor=("noop", {}), classifier=("gaussian_nb_classifier", {}),
        representation="dense", seed=1, feature_order=["field_x0", "field_x1"])

    def fit_stats(ds):
        columns = {name: [ds.columns[name][i] for i in training]
                   for name in ("field_x0", "field_x1")}
        fitted = pipe.fit(columns, encoded[training], 2, labels)
        f = fitted.featurizers["field_x0"]
        return f.min_, f.max_

    assert fit_stats(poisoned) == fit_stats(clean)


# -- logistic trainer ----------------------------------------------------------

def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, 40)
    targets = np.zeros((40, 2))
    targets[np.arange(40), y] = 1.0
    weights = np.ones(40)
    w = rng.normal(scale=0.5, size=3 * 2 + 2)

    _, grad = logistic_loss_and_grad(w, X, targets, weights, l2=0.01)
    eps = 1e-6
    for i in range(len(w)):
        bump = np.zeros_like(w)
        bump[i] = eps
        hi, _ = logistic_loss_and_grad(w + bump, X, targets, weights, 0.01)
        lo, _ = logistic_loss_and_grad(w - bump, X, targets, weights, 0.01)
        numeric = (hi - lo) / (2 * eps)
        denom = max(abs(numeric), abs(grad[i]), 1e-8)
        assert abs(numeric - grad[i]) / denom < 1e-4, i


def test_logistic_gradient_norm_small_at_the_found_optimum():
    rng = np.random.default_rng(7)
    X = np.vstack([rng.normal(-2, 0.4, (100, 2)), rng.normal(2, 0.4, (100, 2))])
    y = np.array([0] * 100 + [1] * 100)
    clf = LogisticClassifier({})
    clf.fit(X, y, 2)

    targets = np.zeros((200, 2))
    targets[np.arange(200), y] = 1.0
    w = np.concatenate([clf.W_.ravel(), clf.b_])
    _, grad = logistic_loss_and_grad(w, X, targets, np.ones(200), l2=1.0 / 200)
    assert np.linalg.norm(grad) < 1e-3


def test_logistic_l1_drives_useless_weights_to_zero():
    rng = np.random.default_rng(8)
    informative = np.concatenate([rng.normal(-2, 0.3, 100), rng.normal(2, 0.3, 100)])
    noise = rng.normal(size=(200, 4))
    X = np.column_stack([informative, noise])
    y = np.array([0] * 100 + [1] * 100)
    clf = LogisticClassifier({"norm": "l1", "C": 0.05})
    clf.fit(X, y, 2)
    weight_scale = np.abs(clf.W_)
    assert weight_scale[0].max() > 10 * weight_scale[1:].max()
    assert (np.abs(clf.W_[1:]) < 1e-8).sum() >= 4


def test_balanced_weighting_lifts_minority_recall():
    rng = np.random.default_rng(9)
    X = np.vstack([rng.normal(-1, 1.0, (180, 2)), rng.normal(1, 1.0, (20, 2))])
    y = np.array([0] * 180 + [1] * 20)
    plain = LogisticClassifier({"balance": False}).fit(X, y, 2)
    balanced = LogisticClassifier({"balance": True}).fit(X, y, 2)
    recall_plain = (plain.predict(X)[y == 1] == 1).mean()
    recall_balanced = (balanced.predict(X)[y == 1] == 1).mean()
    assert recall_balanced >= recall_plain


# -- mixed and sparse paths ------------------------------------------------------

def test_mixed_schema_with_text_column_runs_dense():
    rng = np.random.default_rng(10)
    n = 60
    words = ["alpha beta", "gamma delta"]
    text = [words[i % 2] for i in range(n)]
    x = np.concatenate([rng.normal(-2, 0.5, n // 2), rng.normal(2, 0.5, n // 2)])
    labels = ["A"] * (n // 2) + ["B"] * (n // 2)
    schema = DatasetSchema("mixed_data", [
        ColumnSchema("field_note", "note", FeatureType.text),
        ColumnSchema("field_x", "x", FeatureType.float),
        ColumnSchema("field_y", "y", FeatureType.categorical),
    ], "field_y")
    ds = Dataset(schema, {"field_note": text, "field_x": list(x), "field_y": labels})
    pipe = PipelineInstance(
        assignment={"field_note": ("hashing_vectorizer", {"dimension": 64}),
                    "field_x": ("min_max_scaler", {})},
        preprocessor=("pca", {"componentFraction": 0.5}),
        classifier=("gaussian_nb_classifier", {}),
        representation="dense", seed=1,
        feature_order=["field_note", "field_x"])
    result = cross_validate(pipe, ds, 5)
    assert result.means["accuracy"] >= 0.9


def test_sparse_plan_densifies_before_dense_only_components():
    n = 40
    text = ["spam offer money"] * (n // 2) + ["weekly meeting report"] * (n // 2)
    labels = ["bad"] * (n // 2) + ["good"] * (n // 2)
    schema = DatasetSchema("txt_data", [
        ColumnSchema("field_body", "body", FeatureType.text),
        ColumnSchema("field_cls", "cls", FeatureType.categorical),
    ], "field_cls")
    ds = Dataset(schema, {"field_body": text, "field_cls": labels})
    pipe = PipelineInstance(
        assignment={"field_body": ("count_vectorizer", {})},
        preprocessor=("pca", {"componentFraction": 0.5}),   # dense only
        classifier=("gaussian_nb_classifier", {}),          # dense only
        representation="sparse", seed=2, feature_order=["field_body"])
    result = cross_validate(pipe, ds, 4)
    assert result.means["accuracy"] == 1.0
