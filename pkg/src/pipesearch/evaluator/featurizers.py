"""Per-column featurizers.

Numeric scalers impute missing cells with the training mean, then scale
with statistics learned from the training split only. Categorical one-hot
keeps categories in first-appearance order and maps unseen categories to
an all-zero block. Text vectorizers tokenize on Unicode word boundaries,
lowercased; hashing uses a stable signed hash so results do not depend on
process hash seeds.
"""

from __future__ import annotations

import math
import re

import numpy as np
from scipy import sparse

from ..enums import FeaturizerAlgorithm
from ..errors import EvaluationError, UnknownComponent
from ..util import stable_u64
from .params import HASHING_DEFAULT_DIMENSION

__all__ = ["build_featurizer", "featurizer_from_state", "MISSING_TOKEN", "tokenize"]

MISSING_TOKEN = "__missing__"
_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(value) -> list[str]:
    text = MISSING_TOKEN if value is None else str(value)
    return _TOKEN_RE.findall(text.lower())


def _as_token(value) -> str:
    return MISSING_TOKEN if value is None else str(value)


def _numeric(values) -> np.ndarray:
    """Column to float array with NaN for missing cells."""
    return np.array([math.nan if v is None else float(v) for v in values],
                    dtype=np.float64)


class _NumericScaler:
    """Shared impute-then-scale skeleton for the numeric featurizers."""

    algorithm: FeaturizerAlgorithm

    def __init__(self, params: dict | None = None):
        self.params = dict(params or {})
        self.mean_: float = 0.0

    def fit(self, values):
        col = _numeric(values)
        observed = col[~np.isnan(col)]
        self.mean_ = float(observed.mean()) if observed.size else 0.0
        col = np.where(np.isnan(col), self.mean_, col)
        self._fit_stats(col)
        return self

    def transform(self, values) -> np.ndarray:
        col = _numeric(values)
        col = np.where(np.isnan(col), self.mean_, col)
        return self._scale(col).reshape(-1, 1)

    def _fit_stats(self, col: np.ndarray) -> None:
        raise NotImplementedError

    def _scale(self, col: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class MinMaxFeaturizer(_NumericScaler):
    algorithm = FeaturizerAlgorithm.min_max_scaler

    def _fit_stats(self, col):
        self.min_ = float(col.min())
        self.max_ = float(col.max())

    def _scale(self, col):
        span = self.max_ - self.min_
        if span == 0.0:
            return np.zeros_like(col)
        return (col - self.min_) / span

    def state(self) -> dict:
        return {"mean": self.mean_, "min": self.min_, "max": self.max_}

    def load_state(self, d):
        self.mean_, self.min_, self.max_ = d["mean"], d["min"], d["max"]
        return self


class StdFeaturizer(_NumericScaler):
    algorithm = FeaturizerAlgorithm.std_scaler

    def _fit_stats(self, col):
        self.center_ = float(col.mean())
        self.scale_ = float(col.std())

    def _scale(self, col):
        if self.scale_ == 0.0:
            return np.zeros_like(col)
        return (col - self.center_) / self.scale_

    def state(self) -> dict:
        return {"mean": self.mean_, "center": self.center_, "scale": self.scale_}

    def load_state(self, d):
        self.mean_, self.center_, self.scale_ = d["mean"], d["center"], d["scale"]
        return self


class RobustFeaturizer(_NumericScaler):
    algorithm = FeaturizerAlgorithm.robust_scaler

    def _fit_stats(self, col):
        self.median_ = float(np.median(col))
        q75, q25 = np.percentile(col, [75, 25])
        self.iqr_ = float(q75 - q25)

    def _scale(self, col):
        if self.iqr_ == 0.0:
            return np.zeros_like(col)
        return (col - self.median_) / self.iqr_

    def state(self) -> dict:
        return {"mean": self.mean_, "median": self.median_, "iqr": self.iqr_}

    def load_state(self, d):
        self.mean_, self.median_, self.iqr_ = d["mean"], d["median"], d["iqr"]
        return self


class OneHotFeaturizer:
    algorithm = FeaturizerAlgorithm.one_hot

    def __init__(self, params: dict | None = None):
        self.params = dict(params or {})
        self.categories_: list[str] = []

    def fit(self, values):
        seen: dict[str, int] = {}
        for v in values:
            token = _as_token(v)
            if token not in seen:
                seen[token] = len(seen)
        self.categories_ = list(seen)
        return self

    def transform(self, values) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.categories_)}
        out = np.zeros((len(values), len(self.categories_)), dtype=np.float64)
        for row, v in enumerate(values):
            col = index.get(_as_token(v))
            if col is not None:
                out[row, col] = 1.0
        return out

    def state(self) -> dict:
        return {"categories": self.categories_}

    def load_state(self, d):
        self.categories_ = list(d["categories"])
        return self


def _csr_from_rows(rows: list[dict[int, float]], width: int) -> sparse.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for row in rows:
        for idx in sorted(row):
            indices.append(idx)
            data.append(row[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix((np.array(data, dtype=np.float64),
                              np.array(indices, dtype=np.int64),
                              np.array(indptr, dtype=np.int64)),
                             shape=(len(rows), width))


def _l2_normalize(matrix: sparse.csr_matrix) -> sparse.csr_matrix:
    norms = np.sqrt(matrix.multiply(matrix).sum(axis=1)).A1
    norms[norms == 0.0] = 1.0
    inv = sparse.diags(1.0 / norms)
    return (inv @ matrix).tocsr()


class CountFeaturizer:
    algorithm = FeaturizerAlgorithm.count_vectorizer

    def __init__(self, params: dict | None = None):
        self.params = dict(params or {})
        self.vocabulary_: list[str] = []

    def fit(self, values):
        vocab = set()
        for v in values:
            vocab.update(tokenize(v))
        if not vocab:
            raise EvaluationError("count_vectorizer", "empty vocabulary")
        self.vocabulary_ = sorted(vocab)
        return self

    def _count_rows(self, values) -> list[dict[int, float]]:
        index = {t: i for i, t in enumerate(self.vocabulary_)}
        rows = []
        for v in values:
            counts: dict[int, float] = {}
            for token in tokenize(v):
                i = index.get(token)
                if i is not None:
                    counts[i] = counts.get(i, 0.0) + 1.0
            rows.append(counts)
        return rows

    def transform(self, values) -> sparse.csr_matrix:
        return _csr_from_rows(self._count_rows(values), len(self.vocabulary_))

    def state(self) -> dict:
        return {"vocabulary": self.vocabulary_}

    def load_state(self, d):
        self.vocabulary_ = list(d["vocabulary"])
        return self


class TfidfFeaturizer(CountFeaturizer):
    algorithm = FeaturizerAlgorithm.tfidf_vectorizer

    def __init__(self, params: dict | None = None):
        super().__init__(params)
        self.idf_: np.ndarray = np.zeros(0)

    def fit(self, values):
        vocab = set()
        docs = []
        for v in values:
            tokens = tokenize(v)
            docs.append(set(tokens))
            vocab.update(tokens)
        if not vocab:
            raise EvaluationError("tfidf_vectorizer", "empty vocabulary")
        self.vocabulary_ = sorted(vocab)
        n = len(values)
        df = np.array([sum(1 for d in docs if t in d) for t in self.vocabulary_],
                      dtype=np.float64)
        # smooth idf: ln((1+N)/(1+df)) + 1
        self.idf_ = np.log((1.0 + n) / (1.0 + df)) + 1.0
        return self

    def transform(self, values) -> sparse.csr_matrix:
        counts = _csr_from_rows(self._count_rows(values), len(self.vocabulary_))
        weighted = (counts @ sparse.diags(self.idf_)).tocsr()
        return _l2_normalize(weighted)

    def state(self) -> dict:
        return {"vocabulary": self.vocabulary_, "idf": self.idf_.tolist()}

    def load_state(self, d):
        self.vocabulary_ = list(d["vocabulary"])
        self.idf_ = np.array(d["idf"], dtype=np.float64)
        return self


class HashingFeaturizer:
    algorithm = FeaturizerAlgorithm.hashing_vectorizer

    def __init__(self, params: dict | None = None):
        self.params = dict(params or {})
        self.dimension = int(self.params.get("dimension", HASHING_DEFAULT_DIMENSION))

    def fit(self, values):
        return self   # stateless

    def transform(self, values) -> sparse.csr_matrix:
        rows = []
        for v in values:
            accum: dict[int, float] = {}
            for token in tokenize(v):
                h = stable_u64(token)
                idx = h % self.dimension
                sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
                accum[idx] = accum.get(idx, 0.0) + sign
            rows.append(accum)
        return _l2_normalize(_csr_from_rows(rows, self.dimension))

    def state(self) -> dict:
        return {"dimension": self.dimension}

    def load_state(self, d):
        self.dimension = int(d["dimension"])
        return self


_FEATURIZERS = {
    FeaturizerAlgorithm.one_hot: OneHotFeaturizer,
    FeaturizerAlgorithm.min_max_scaler: MinMaxFeaturizer,
    FeaturizerAlgorithm.std_scaler: StdFeaturizer,
    FeaturizerAlgorithm.robust_scaler: RobustFeaturizer,
    FeaturizerAlgorithm.hashing_vectorizer: HashingFeaturizer,
    FeaturizerAlgorithm.count_vectorizer: CountFeaturizer,
    FeaturizerAlgorithm.tfidf_vectorizer: TfidfFeaturizer,
}


def build_featurizer(algorithm: FeaturizerAlgorithm | str, params: dict | None = None):
    try:
        algorithm = FeaturizerAlgorithm(algorithm)
    except ValueError:
        raise UnknownComponent(f"unknown featurizer {algorithm!r}") from None
    return _FEATURIZERS[algorithm](params)


def featurizer_from_state(algorithm: str, params: dict, state: dict):
    featurizer = build_featurizer(algorithm, params)
    return featurizer.load_state(state)
