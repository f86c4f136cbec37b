"""Whole-matrix preprocessors applied between featurization and the
classifier.

The required set (noop, pca, selectkbest and the scalers) is implemented
directly on numpy; the remaining menu entries (truncatedSVD, kernelPCA,
fastICA, kernel approximations, percentile selection, random-trees
embedding) are compact implementations kept behind the same interface.
noop, selectkbest and truncatedSVD consume sparse matrices natively;
everything else expects dense input.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import svds

from ..enums import PreprocessorAlgorithm
from ..errors import EvaluationError, UnknownComponent
from ..util import stable_seed
from . import trees as _trees

__all__ = ["build_preprocessor", "preprocessor_from_state"]


def _as_dense(X):
    return np.asarray(X.todense()) if sparse.issparse(X) else np.asarray(X)


def _component_count(fraction: float, n_features: int, n_samples: int) -> int:
    k = int(round(fraction * n_features))
    return max(1, min(k, n_features, max(1, n_samples - 1)))


class NoopPreprocessor:
    algorithm = PreprocessorAlgorithm.noop

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return X

    def state(self) -> dict:
        return {}

    def load_state(self, d):
        return self


class PCAPreprocessor:
    """Eigendecomposition of the covariance matrix, top components kept."""

    algorithm = PreprocessorAlgorithm.pca

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.fraction = float(self.params.get("componentFraction", 0.9))

    def fit(self, X, y=None):
        X = _as_dense(X)
        n, p = X.shape
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        cov = (centered.T @ centered) / max(1, n - 1)
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        order = np.argsort(eigenvalues)[::-1]
        k = _component_count(self.fraction, p, n)
        components = eigenvectors[:, order[:k]]
        # deterministic sign: largest-magnitude coordinate positive
        for j in range(components.shape[1]):
            pivot = np.argmax(np.abs(components[:, j]))
            if components[pivot, j] < 0:
                components[:, j] = -components[:, j]
        self.components_ = components
        return self

    def transform(self, X):
        X = _as_dense(X)
        return (X - self.mean_) @ self.components_

    def state(self) -> dict:
        return {"mean": self.mean_.tolist(), "components": self.components_.tolist()}

    def load_state(self, d):
        self.mean_ = np.array(d["mean"], dtype=np.float64)
        self.components_ = np.array(d["components"], dtype=np.float64)
        return self


def _anova_f_scores(X, y: np.ndarray) -> np.ndarray:
    """Per-feature one-way ANOVA F statistic against integer classes."""
    classes = np.unique(y)
    n, p = X.shape
    k = len(classes)
    indicator = np.zeros((n, k), dtype=np.float64)
    for j, c in enumerate(classes):
        indicator[y == c, j] = 1.0
    counts = indicator.sum(axis=0)

    if sparse.issparse(X):
        sums = np.asarray((X.T @ indicator))
        sumsq = np.asarray((X.multiply(X)).T @ indicator)
    else:
        sums = X.T @ indicator
        sumsq = (X * X).T @ indicator

    total_sum = sums.sum(axis=1)
    total_sumsq = sumsq.sum(axis=1)
    grand_mean = total_sum / n
    group_means = sums / counts

    between = ((group_means - grand_mean[:, None]) ** 2 * counts).sum(axis=1)
    within = (sumsq - counts * group_means ** 2).sum(axis=1)
    within = np.maximum(within, 0.0)

    df_between = max(1, k - 1)
    df_within = max(1, n - k)
    msb = between / df_between
    msw = within / df_within
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(msw > 0, msb / msw, np.where(msb > 0, np.inf, 0.0))
    return np.nan_to_num(scores, nan=0.0, posinf=np.finfo(np.float64).max)


class _SelectByScore:
    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})

    def _keep_count(self, p: int) -> int:
        raise NotImplementedError

    def fit(self, X, y=None):
        if y is None:
            raise EvaluationError(self.algorithm.value, "requires target labels to fit")
        scores = _anova_f_scores(X, np.asarray(y))
        k = self._keep_count(X.shape[1])
        ranked = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
        self.selected_ = np.array(sorted(ranked[:k]), dtype=np.int64)
        return self

    def transform(self, X):
        if sparse.issparse(X):
            return X.tocsc()[:, self.selected_].tocsr()
        return np.asarray(X)[:, self.selected_]

    def state(self) -> dict:
        return {"selected": self.selected_.tolist()}

    def load_state(self, d):
        self.selected_ = np.array(d["selected"], dtype=np.int64)
        return self


class SelectKBestPreprocessor(_SelectByScore):
    algorithm = PreprocessorAlgorithm.selectkbest

    def _keep_count(self, p: int) -> int:
        fraction = float(self.params.get("kFraction", 0.5))
        return max(1, min(p, int(round(fraction * p))))


class SelectPercentilePreprocessor(_SelectByScore):
    algorithm = PreprocessorAlgorithm.selectpercentile

    def _keep_count(self, p: int) -> int:
        percentile = float(self.params.get("percentile", 50))
        return max(1, min(p, int(round(p * percentile / 100.0))))


class _ColumnScaler:
    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})

    def fit(self, X, y=None):
        self._fit_stats(_as_dense(X))
        return self

    def transform(self, X):
        return self._scale(_as_dense(X))


class MinMaxPreprocessor(_ColumnScaler):
    algorithm = PreprocessorAlgorithm.minmaxscaler

    def _fit_stats(self, X):
        self.min_ = X.min(axis=0)
        self.span_ = X.max(axis=0) - self.min_

    def _scale(self, X):
        span = np.where(self.span_ == 0.0, 1.0, self.span_)
        out = (X - self.min_) / span
        return np.where(self.span_ == 0.0, 0.0, out)

    def state(self):
        return {"min": self.min_.tolist(), "span": self.span_.tolist()}

    def load_state(self, d):
        self.min_ = np.array(d["min"], dtype=np.float64)
        self.span_ = np.array(d["span"], dtype=np.float64)
        return self


class StdPreprocessor(_ColumnScaler):
    algorithm = PreprocessorAlgorithm.std_scaler

    def _fit_stats(self, X):
        self.center_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)

    def _scale(self, X):
        scale = np.where(self.scale_ == 0.0, 1.0, self.scale_)
        out = (X - self.center_) / scale
        return np.where(self.scale_ == 0.0, 0.0, out)

    def state(self):
        return {"center": self.center_.tolist(), "scale": self.scale_.tolist()}

    def load_state(self, d):
        self.center_ = np.array(d["center"], dtype=np.float64)
        self.scale_ = np.array(d["scale"], dtype=np.float64)
        return self


class RobustPreprocessor(_ColumnScaler):
    algorithm = PreprocessorAlgorithm.robustscaler

    def _fit_stats(self, X):
        self.median_ = np.median(X, axis=0)
        q75 = np.percentile(X, 75, axis=0)
        q25 = np.percentile(X, 25, axis=0)
        self.iqr_ = q75 - q25

    def _scale(self, X):
        iqr = np.where(self.iqr_ == 0.0, 1.0, self.iqr_)
        out = (X - self.median_) / iqr
        return np.where(self.iqr_ == 0.0, 0.0, out)

    def state(self):
        return {"median": self.median_.tolist(), "iqr": self.iqr_.tolist()}

    def load_state(self, d):
        self.median_ = np.array(d["median"], dtype=np.float64)
        self.iqr_ = np.array(d["iqr"], dtype=np.float64)
        return self


class AbsScalerPreprocessor(_ColumnScaler):
    algorithm = PreprocessorAlgorithm.absscaler

    def _fit_stats(self, X):
        self.max_abs_ = np.abs(X).max(axis=0)

    def _scale(self, X):
        denom = np.where(self.max_abs_ == 0.0, 1.0, self.max_abs_)
        return X / denom

    def state(self):
        return {"maxAbs": self.max_abs_.tolist()}

    def load_state(self, d):
        self.max_abs_ = np.array(d["maxAbs"], dtype=np.float64)
        return self


class TruncatedSVDPreprocessor:
    algorithm = PreprocessorAlgorithm.truncatedSVD

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.fraction = float(self.params.get("componentFraction", 0.5))
        self.seed = seed

    def fit(self, X, y=None):
        n, p = X.shape
        k = _component_count(self.fraction, p, n)
        k = min(k, min(n, p) - 1) if min(n, p) > 1 else 1
        k = max(1, k)
        matrix = X.asfptype() if sparse.issparse(X) else np.asarray(X, dtype=np.float64)
        v0 = np.random.default_rng(self.seed).normal(size=min(n, p))
        _, _, vt = svds(matrix, k=k, v0=v0)
        components = vt[::-1]   # svds returns ascending singular values
        for j in range(components.shape[0]):
            pivot = np.argmax(np.abs(components[j]))
            if components[j, pivot] < 0:
                components[j] = -components[j]
        self.components_ = components
        return self

    def transform(self, X):
        return np.asarray((X @ self.components_.T))

    def state(self):
        return {"components": self.components_.tolist()}

    def load_state(self, d):
        self.components_ = np.array(d["components"], dtype=np.float64)
        return self


def _rbf_kernel(A, B, gamma: float) -> np.ndarray:
    a2 = (A * A).sum(axis=1)[:, None]
    b2 = (B * B).sum(axis=1)[None, :]
    d2 = np.maximum(a2 + b2 - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * d2)


class KernelPCAPreprocessor:
    algorithm = PreprocessorAlgorithm.kernelPCA

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.fraction = float(self.params.get("componentFraction", 0.5))
        self.gamma = float(self.params.get("gamma", 0.1))

    def fit(self, X, y=None):
        X = _as_dense(X)
        self.fit_rows_ = X.copy()
        n = X.shape[0]
        K = _rbf_kernel(X, X, self.gamma)
        ones = np.full((n, n), 1.0 / n)
        Kc = K - ones @ K - K @ ones + ones @ K @ ones
        self.k_fit_rowmean_ = K.mean(axis=0)
        self.k_fit_mean_ = K.mean()
        eigenvalues, eigenvectors = np.linalg.eigh(Kc)
        order = np.argsort(eigenvalues)[::-1]
        k = _component_count(self.fraction, X.shape[1], n)
        k = min(k, n - 1) if n > 1 else 1
        lambdas = np.maximum(eigenvalues[order[:k]], 1e-12)
        alphas = eigenvectors[:, order[:k]]
        for j in range(alphas.shape[1]):
            pivot = np.argmax(np.abs(alphas[:, j]))
            if alphas[pivot, j] < 0:
                alphas[:, j] = -alphas[:, j]
        self.scaled_alphas_ = alphas / np.sqrt(lambdas)
        return self

    def transform(self, X):
        X = _as_dense(X)
        K = _rbf_kernel(X, self.fit_rows_, self.gamma)
        Kc = (K - self.k_fit_rowmean_[None, :]
              - K.mean(axis=1)[:, None] + self.k_fit_mean_)
        return Kc @ self.scaled_alphas_

    def state(self):
        return {
            "fitRows": self.fit_rows_.tolist(),
            "rowMean": self.k_fit_rowmean_.tolist(),
            "mean": self.k_fit_mean_,
            "scaledAlphas": self.scaled_alphas_.tolist(),
            "gamma": self.gamma,
        }

    def load_state(self, d):
        self.fit_rows_ = np.array(d["fitRows"], dtype=np.float64)
        self.k_fit_rowmean_ = np.array(d["rowMean"], dtype=np.float64)
        self.k_fit_mean_ = float(d["mean"])
        self.scaled_alphas_ = np.array(d["scaledAlphas"], dtype=np.float64)
        self.gamma = float(d["gamma"])
        return self


class FastICAPreprocessor:
    algorithm = PreprocessorAlgorithm.fastICA

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.fraction = float(self.params.get("componentFraction", 0.5))
        self.seed = seed

    def fit(self, X, y=None):
        X = _as_dense(X)
        n, p = X.shape
        k = _component_count(self.fraction, p, n)
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        cov = (centered.T @ centered) / max(1, n - 1)
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        order = np.argsort(eigenvalues)[::-1][:k]
        d = np.maximum(eigenvalues[order], 1e-12)
        whitener = eigenvectors[:, order] / np.sqrt(d)
        Z = centered @ whitener          # n x k, whitened
        rng = np.random.default_rng(self.seed)
        W = rng.normal(size=(k, k))
        W, _ = np.linalg.qr(W)
        for _ in range(200):
            WZ = Z @ W.T                  # n x k
            G = np.tanh(WZ)
            G_prime = 1.0 - G ** 2
            W_new = (G.T @ Z) / n - np.diag(G_prime.mean(axis=0)) @ W
            # symmetric decorrelation
            u, _, vt = np.linalg.svd(W_new)
            W_new = u @ vt
            if np.max(np.abs(np.abs(np.einsum("ij,ij->i", W_new, W)) - 1.0)) < 1e-4:
                W = W_new
                break
            W = W_new
        self.transform_ = whitener @ W.T   # p x k
        return self

    def transform(self, X):
        X = _as_dense(X)
        return (X - self.mean_) @ self.transform_

    def state(self):
        return {"mean": self.mean_.tolist(), "transform": self.transform_.tolist()}

    def load_state(self, d):
        self.mean_ = np.array(d["mean"], dtype=np.float64)
        self.transform_ = np.array(d["transform"], dtype=np.float64)
        return self


class RBFSamplerPreprocessor:
    """Random Fourier feature approximation of an RBF kernel."""

    algorithm = PreprocessorAlgorithm.rbfsampler

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.gamma = float(self.params.get("gamma", 0.1))
        self.components = int(self.params.get("components", 100))
        self.seed = seed

    def fit(self, X, y=None):
        p = X.shape[1]
        rng = np.random.default_rng(self.seed)
        self.weights_ = rng.normal(scale=np.sqrt(2.0 * self.gamma), size=(p, self.components))
        self.offsets_ = rng.uniform(0, 2 * np.pi, size=self.components)
        return self

    def transform(self, X):
        X = _as_dense(X)
        projection = X @ self.weights_ + self.offsets_
        return np.sqrt(2.0 / self.components) * np.cos(projection)

    def state(self):
        return {"weights": self.weights_.tolist(), "offsets": self.offsets_.tolist(),
                "components": self.components}

    def load_state(self, d):
        self.weights_ = np.array(d["weights"], dtype=np.float64)
        self.offsets_ = np.array(d["offsets"], dtype=np.float64)
        self.components = int(d["components"])
        return self


class NystroemPreprocessor:
    """Nystroem landmark approximation of an RBF kernel feature map."""

    algorithm = PreprocessorAlgorithm.nystroem

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.gamma = float(self.params.get("gamma", 0.1))
        self.components = int(self.params.get("components", 100))
        self.seed = seed

    def fit(self, X, y=None):
        X = _as_dense(X)
        n = X.shape[0]
        m = min(self.components, n)
        rng = np.random.default_rng(self.seed)
        landmarks = rng.choice(n, size=m, replace=False)
        self.landmarks_ = X[np.sort(landmarks)]
        kernel_mm = _rbf_kernel(self.landmarks_, self.landmarks_, self.gamma)
        eigenvalues, eigenvectors = np.linalg.eigh(kernel_mm)
        d = np.maximum(eigenvalues, 1e-12)
        self.normalizer_ = eigenvectors @ np.diag(1.0 / np.sqrt(d)) @ eigenvectors.T
        return self

    def transform(self, X):
        X = _as_dense(X)
        return _rbf_kernel(X, self.landmarks_, self.gamma) @ self.normalizer_

    def state(self):
        return {"landmarks": self.landmarks_.tolist(),
                "normalizer": self.normalizer_.tolist(), "gamma": self.gamma}

    def load_state(self, d):
        self.landmarks_ = np.array(d["landmarks"], dtype=np.float64)
        self.normalizer_ = np.array(d["normalizer"], dtype=np.float64)
        self.gamma = float(d["gamma"])
        return self


class RandomTreesEmbeddingPreprocessor:
    """One-hot encoding of leaf indices from totally random trees."""

    algorithm = PreprocessorAlgorithm.random_trees_embedding

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.n_trees = int(self.params.get("trees", 10))
        self.max_depth = int(self.params.get("maxDepth", 5))
        self.seed = seed

    def fit(self, X, y=None):
        X = np.ascontiguousarray(_as_dense(X), dtype=np.float64)
        n = X.shape[0]
        self.trees_ = []
        for t in range(self.n_trees):
            tree_seed = stable_seed("rte", self.seed, t)
            targets = np.random.default_rng(tree_seed).normal(size=n)
            feature, threshold, left, right, _, node_count = _trees.build_regression_tree(
                X, targets, self.max_depth, 2, X.shape[1], tree_seed % (2 ** 63))
            leaves = sorted(set(
                int(v) for v in _trees.tree_apply(feature, threshold, left, right, X)))
            self.trees_.append({
                "feature": feature[:node_count].tolist(),
                "threshold": threshold[:node_count].tolist(),
                "left": left[:node_count].tolist(),
                "right": right[:node_count].tolist(),
                "leaves": leaves,
            })
        return self

    def transform(self, X):
        X = np.ascontiguousarray(_as_dense(X), dtype=np.float64)
        blocks = []
        for tree in self.trees_:
            leaf_ids = _trees.tree_apply(
                np.array(tree["feature"], dtype=np.int64),
                np.array(tree["threshold"], dtype=np.float64),
                np.array(tree["left"], dtype=np.int64),
                np.array(tree["right"], dtype=np.int64), X)
            index = {leaf: i for i, leaf in enumerate(tree["leaves"])}
            block = np.zeros((X.shape[0], len(index)), dtype=np.float64)
            for row, leaf in enumerate(leaf_ids):
                col = index.get(int(leaf))
                if col is not None:
                    block[row, col] = 1.0
            blocks.append(block)
        return np.hstack(blocks)

    def state(self):
        return {"trees": self.trees_}

    def load_state(self, d):
        self.trees_ = d["trees"]
        return self


_PREPROCESSORS = {
    PreprocessorAlgorithm.noop: NoopPreprocessor,
    PreprocessorAlgorithm.pca: PCAPreprocessor,
    PreprocessorAlgorithm.selectkbest: SelectKBestPreprocessor,
    PreprocessorAlgorithm.selectpercentile: SelectPercentilePreprocessor,
    PreprocessorAlgorithm.minmaxscaler: MinMaxPreprocessor,
    PreprocessorAlgorithm.std_scaler: StdPreprocessor,
    PreprocessorAlgorithm.robustscaler: RobustPreprocessor,
    PreprocessorAlgorithm.absscaler: AbsScalerPreprocessor,
    PreprocessorAlgorithm.truncatedSVD: TruncatedSVDPreprocessor,
    PreprocessorAlgorithm.kernelPCA: KernelPCAPreprocessor,
    PreprocessorAlgorithm.fastICA: FastICAPreprocessor,
    PreprocessorAlgorithm.rbfsampler: RBFSamplerPreprocessor,
    PreprocessorAlgorithm.nystroem: NystroemPreprocessor,
    PreprocessorAlgorithm.random_trees_embedding: RandomTreesEmbeddingPreprocessor,
}


def build_preprocessor(algorithm: PreprocessorAlgorithm | str,
                       params: dict | None = None, seed: int = 0):
    try:
        algorithm = PreprocessorAlgorithm(algorithm)
    except ValueError:
        raise UnknownComponent(f"unknown preprocessor {algorithm!r}") from None
    return _PREPROCESSORS[algorithm](params, seed)


def preprocessor_from_state(algorithm: str, params: dict, state: dict, seed: int = 0):
    preprocessor = build_preprocessor(algorithm, params, seed)
    return preprocessor.load_state(state)
