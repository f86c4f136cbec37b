"""Featurizer tests.

Vectorizer behavior is checked against hand computations on tiny
corpora; scalers against closed-form values; missing-value policy and
state round trips against the documented conventions.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from pipesearch.errors import EvaluationError
from pipesearch.evaluator.featurizers import (CountFeaturizer, HashingFeaturizer,
                                              MinMaxFeaturizer, OneHotFeaturizer,
                                              RobustFeaturizer, StdFeaturizer,
                                              TfidfFeaturizer, build_featurizer,
                                              featurizer_from_state, tokenize)


def dense(block):
    return np.asarray(block.todense()) if sparse.issparse(block) else np.asarray(block)


# -- tokenization ------------------------------------------------------

def test_tokenize_lowercases_and_splits_on_word_boundaries():
    assert tokenize("Hello, World! x2") == ["hello", "world", "x2"]


def test_tokenize_treats_none_as_missing_token():
    assert tokenize(None) == ["__missing__"]


# -- one hot -----------------------------------------------------------

def test_one_hot_category_order_is_first_appearance():
    f = OneHotFeaturizer()
    f.fit(["a", "b", "a"])
    out = dense(f.transform(["a", "b", "a"]))
    assert out.tolist() == [[1, 0], [0, 1], [1, 0]]


def test_one_hot_unseen_category_becomes_zero_row():
    f = OneHotFeaturizer()
    f.fit(["a", "b"])
    assert dense(f.transform(["c"])).tolist() == [[0, 0]]


def test_one_hot_missing_is_its_own_category():
    f = OneHotFeaturizer()
    f.fit(["a", None, "a"])
    out = dense(f.transform([None]))
    assert out.sum() == 1


# -- numeric scalers ---------------------------------------------------

def test_min_max_maps_training_extremes_to_unit_interval():
    f = MinMaxFeaturizer()
    f.fit([0, 5, 10])
    assert dense(f.transform([0, 5, 10])).ravel().tolist() == [0.0, 0.5, 1.0]


def test_min_max_constant_column_becomes_zeros():
    f = MinMaxFeaturizer()
    f.fit([3, 3, 3])
    assert dense(f.transform([3, 3])).ravel().tolist() == [0.0, 0.0]


def test_min_max_missing_values_imputed_by_training_mean():
    f = MinMaxFeaturizer()
    f.fit([0, None, 10])
    # observed mean is 5, so the missing cell lands mid-range
    assert dense(f.transform([None])).ravel().tolist() == [0.5]


def test_std_scaler_zero_mean_unit_variance():
    f = StdFeaturizer()
    f.fit([1.0, 2.0, 3.0])
    out = dense(f.transform([1.0, 2.0, 3.0])).ravel()
    assert abs(out.mean()) < 1e-12
    assert abs(out.std() - 1.0) < 1e-12


def test_std_scaler_constant_column_becomes_zeros():
    f = StdFeaturizer()
    f.fit([4, 4])
    assert dense(f.transform([4, 4])).ravel().tolist() == [0.0, 0.0]


def test_robust_scaler_centers_by_median_scales_by_iqr():
    values = [1.0, 2.0, 3.0, 4.0, 100.0]
    f = RobustFeaturizer()
    f.fit(values)
    out = dense(f.transform([3.0])).ravel()[0]
    assert out == pytest.approx(0.0)
    q1, q3 = np.percentile(values, [25, 75])
    out2 = dense(f.transform([4.0])).ravel()[0]
    assert out2 == pytest.approx((4.0 - 3.0) / (q3 - q1))


def test_robust_scaler_zero_iqr_becomes_zeros():
    f = RobustFeaturizer()
    f.fit([5, 5, 5, 5])
    assert dense(f.transform([5])).ravel().tolist() == [0.0]


# -- count / tfidf -----------------------------------------------------

def test_count_matches_manual_counts_on_small_corpus():
    corpus = ["a b b", "b c", "a a"]
    f = CountFeaturizer()
    f.fit(corpus)
    vocab = f.vocabulary_
    assert vocab == sorted(vocab)
    out = dense(f.transform(corpus))
    expected = np.zeros((3, len(vocab)))
    for i, doc in enumerate(corpus):
        for tok in doc.split():
            expected[i, vocab.index(tok)] += 1
    assert np.array_equal(out, expected)


def test_count_empty_vocabulary_rejected():
    f = CountFeaturizer()
    with pytest.raises(EvaluationError, match="empty vocabulary"):
        f.fit([])


def test_tfidf_matches_hand_computation_on_two_documents():
    # N=2; df(a)=1, df(b)=2; smooth idf ln((1+N)/(1+df)) + 1
    f = TfidfFeaturizer()
    f.fit(["a b", "b"])
    out = dense(f.transform(["a b", "b"]))
    idf_a = math.log(3 / 2) + 1
    idf_b = math.log(3 / 3) + 1
    row0 = np.array([idf_a, idf_b])
    row0 = row0 / np.linalg.norm(row0)
    assert out[0] == pytest.approx(row0, abs=1e-12)
    assert out[1].tolist() == pytest.approx([0.0, 1.0], abs=1e-12)


def test_tfidf_rows_have_unit_l2_norm():
    f = TfidfFeaturizer()
    corpus = ["spam spam eggs", "eggs toast", "toast"]
    f.fit(corpus)
    out = dense(f.transform(corpus))
    for row in out:
        assert np.linalg.norm(row) == pytest.approx(1.0)


# -- hashing -----------------------------------------------------------

def test_hashing_is_deterministic_and_l2_normalized():
    f = HashingFeaturizer({"dimension": 64})
    f.fit(["ignored"])
    a = dense(f.transform(["cats and dogs"]))
    b = dense(f.transform(["cats and dogs"]))
    assert np.array_equal(a, b)
    assert a.shape == (1, 64)
    assert np.linalg.norm(a) == pytest.approx(1.0)


def test_hashing_signs_cancel_only_on_collisions():
    f = HashingFeaturizer({"dimension": 2 ** 18})
    f.fit(["x"])
    out = f.transform(["alpha beta gamma"])
    assert out.nnz == 3


def test_hashing_dimension_default_is_2_pow_18():
    f = HashingFeaturizer()
    f.fit(["x"])
    assert f.transform(["x"]).shape[1] == 2 ** 18


# -- generic contracts -------------------------------------------------

ALL_FEATURIZERS = ["one_hot", "min_max_scaler", "std_scaler", "robust_scaler",
                   "hashing_vectorizer", "count_vectorizer", "tfidf_vectorizer"]


@pytest.mark.parametrize("name", ALL_FEATURIZERS)
def test_state_round_trip_preserves_transform(name):
    numeric = name in ("min_max_scaler", "std_scaler", "robust_scaler")
    train = [1.0, 2.0, 5.0, None] if numeric else ["red fox", "lazy dog", None]
    probe = [3.5, None] if numeric else ["red dog", "new words"]
    f = build_featurizer(name, {"dimension": 32} if name == "hashing_vectorizer" else {})
    f.fit(train)
    g = featurizer_from_state(name, getattr(f, "params", {}), f.state())
    assert np.array_equal(dense(f.transform(probe)), dense(g.transform(probe)))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
def test_min_max_output_stays_in_unit_interval_on_training_data(values):
    f = MinMaxFeaturizer()
    f.fit(values)
    out = dense(f.transform(values)).ravel()
    assert np.all(out >= -1e-9) and np.all(out <= 1 + 1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c", None]), min_size=1, max_size=25))
def test_one_hot_rows_sum_to_one_on_training_data(values):
    f = OneHotFeaturizer()
    f.fit(values)
    out = dense(f.transform(values))
    assert np.array_equal(out.sum(axis=1), np.ones(len(values)))
