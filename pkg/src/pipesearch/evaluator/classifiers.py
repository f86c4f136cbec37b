"""Classifier implementations behind one fit/predict interface.

Labels arrive as integers 0..K-1 (the pipeline owns the label
dictionary). Linear models accept dense or CSR input; tree models and
gaussian naive bayes densify first. All stochastic training is seeded
explicitly so a fit is reproducible bit-for-bit.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse

from ..enums import ClassifierAlgorithm
from ..errors import EvaluationError, UnknownComponent
from ..util import stable_seed
from . import trees as _trees

__all__ = ["build_classifier", "classifier_from_state", "logistic_loss_and_grad"]


def _as_dense(X):
    return np.asarray(X.todense()) if sparse.issparse(X) else np.asarray(X)


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _one_hot_targets(y: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(y), n_classes), dtype=np.float64)
    out[np.arange(len(y)), y] = 1.0
    return out


def logistic_loss_and_grad(w_flat: np.ndarray, X, targets: np.ndarray,
                           sample_weight: np.ndarray, l2: float):
    """Weighted multinomial log-loss plus L2 penalty, with its gradient.

    w_flat packs [W (p*k), b (k)]. The bias is not penalized. Returns
    (loss, gradient) with the gradient flattened the same way.
    """
    n, p = X.shape
    k = targets.shape[1]
    W = w_flat[: p * k].reshape(p, k)
    b = w_flat[p * k:]
    scores = (X @ W) + b
    proba = _softmax(np.asarray(scores))
    weight_total = sample_weight.sum()

    log_proba = np.log(np.clip(proba, 1e-300, None))
    loss = -np.sum(sample_weight[:, None] * targets * log_proba) / weight_total
    loss += 0.5 * l2 * float((W * W).sum())

    residual = (proba - targets) * sample_weight[:, None] / weight_total
    grad_W = np.asarray(X.T @ residual) + l2 * W
    grad_b = residual.sum(axis=0)
    return loss, np.concatenate([grad_W.ravel(), grad_b])


def _soft_threshold(values: np.ndarray, amount: float) -> np.ndarray:
    return np.sign(values) * np.maximum(np.abs(values) - amount, 0.0)


class LogisticClassifier:
    """Multinomial logistic regression fitted by gradient descent with
    backtracking line search; L2 directly, L1 via proximal steps."""

    algorithm = ClassifierAlgorithm.logistic_classifier

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.norm = self.params.get("norm", "l2")
        self.tolerance = float(self.params.get("tolerance", 1e-4))
        self.C = float(self.params.get("C", 1.0))
        self.balance = bool(self.params.get("balance", False))
        self.max_iterations = int(self.params.get("maxIterations", 500))
        solver = self.params.get("solver", "gd")
        if solver != "gd":
            raise EvaluationError("logistic_classifier", f"unknown solver {solver!r}")

    def fit(self, X, y: np.ndarray, n_classes: int):
        y = np.asarray(y, dtype=np.int64)
        n, p = X.shape
        self.n_classes = n_classes
        targets = _one_hot_targets(y, n_classes)

        if self.balance:
            counts = np.maximum(np.bincount(y, minlength=n_classes), 1)
            class_weight = n / (n_classes * counts)
            sample_weight = class_weight[y]
        else:
            sample_weight = np.ones(n)

        lam = 1.0 / (self.C * n)
        l2 = lam if self.norm == "l2" else 0.0
        l1 = lam if self.norm == "l1" else 0.0

        w = np.zeros(p * n_classes + n_classes)
        step = 1.0
        loss, grad = logistic_loss_and_grad(w, X, targets, sample_weight, l2)
        for _ in range(self.max_iterations):
            grad_sq = float(grad @ grad)
            while True:
                proposal = w - step * grad
                if l1 > 0.0:
                    proposal[: p * n_classes] = _soft_threshold(
                        proposal[: p * n_classes], step * l1)
                new_loss, new_grad = logistic_loss_and_grad(
                    proposal, X, targets, sample_weight, l2)
                penalty = l1 * np.abs(proposal[: p * n_classes]).sum()
                old_penalty = l1 * np.abs(w[: p * n_classes]).sum()
                if new_loss + penalty <= loss + old_penalty - 1e-4 * step * grad_sq or step < 1e-12:
                    break
                step *= 0.5
            # optimality measure: plain gradient for l2, prox residual for l1
            if l1 > 0.0:
                residual = np.linalg.norm((w - proposal) / max(step, 1e-12))
            else:
                residual = np.linalg.norm(new_grad)
            w, loss, grad = proposal, new_loss, new_grad
            if not math.isfinite(loss):
                raise EvaluationError("logistic_classifier", "fit diverged")
            if residual < self.tolerance:
                break
            step = min(step * 2.0, 1e6)

        self.W_ = w[: p * n_classes].reshape(p, n_classes)
        self.b_ = w[p * n_classes:]
        return self

    def decision_scores(self, X) -> np.ndarray:
        return np.asarray(X @ self.W_) + self.b_

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.decision_scores(X))

    def predict(self, X) -> np.ndarray:
        return self.decision_scores(X).argmax(axis=1)

    def state(self) -> dict:
        return {"W": self.W_.tolist(), "b": self.b_.tolist(),
                "nClasses": self.n_classes}

    def load_state(self, d):
        self.W_ = np.array(d["W"], dtype=np.float64)
        self.b_ = np.array(d["b"], dtype=np.float64)
        self.n_classes = int(d["nClasses"])
        return self


class GaussianNBClassifier:
    algorithm = ClassifierAlgorithm.gaussian_nb_classifier

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.var_smoothing = float(self.params.get("varSmoothing", 1e-9))

    def fit(self, X, y: np.ndarray, n_classes: int):
        X = _as_dense(X)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        n, p = X.shape
        self.theta_ = np.zeros((n_classes, p))
        self.var_ = np.zeros((n_classes, p))
        self.log_prior_ = np.zeros(n_classes)
        epsilon = self.var_smoothing * float(X.var(axis=0).max() or 1.0)
        for c in range(n_classes):
            rows = X[y == c]
            if len(rows) == 0:
                raise EvaluationError("gaussian_nb_classifier",
                                      f"class {c} absent from training split")
            self.theta_[c] = rows.mean(axis=0)
            self.var_[c] = rows.var(axis=0) + epsilon
            self.log_prior_[c] = math.log(len(rows) / n)
        return self

    def _joint_log_likelihood(self, X) -> np.ndarray:
        X = _as_dense(X)
        jll = np.zeros((X.shape[0], self.n_classes))
        for c in range(self.n_classes):
            diff = X - self.theta_[c]
            jll[:, c] = (self.log_prior_[c]
                         - 0.5 * np.sum(np.log(2.0 * np.pi * self.var_[c]))
                         - 0.5 * np.sum(diff * diff / self.var_[c], axis=1))
        return jll

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self._joint_log_likelihood(X))

    def predict(self, X) -> np.ndarray:
        return self._joint_log_likelihood(X).argmax(axis=1)

    def state(self) -> dict:
        return {"theta": self.theta_.tolist(), "var": self.var_.tolist(),
                "logPrior": self.log_prior_.tolist(), "nClasses": self.n_classes}

    def load_state(self, d):
        self.theta_ = np.array(d["theta"], dtype=np.float64)
        self.var_ = np.array(d["var"], dtype=np.float64)
        self.log_prior_ = np.array(d["logPrior"], dtype=np.float64)
        self.n_classes = int(d["nClasses"])
        return self


class MultinomialNBClassifier:
    algorithm = ClassifierAlgorithm.multinomial_nb_classifier

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.alpha = float(self.params.get("alpha", 1.0))

    def fit(self, X, y: np.ndarray, n_classes: int):
        y = np.asarray(y, dtype=np.int64)
        minimum = X.min() if not sparse.issparse(X) else X.data.min() if X.nnz else 0.0
        if minimum < 0:
            raise EvaluationError("multinomial_nb_classifier",
                                  "requires non-negative features")
        self.n_classes = n_classes
        n, p = X.shape
        self.log_prior_ = np.zeros(n_classes)
        counts = np.zeros((n_classes, p))
        for c in range(n_classes):
            mask = y == c
            size = int(mask.sum())
            if size == 0:
                raise EvaluationError("multinomial_nb_classifier",
                                      f"class {c} absent from training split")
            rows = X[mask]
            counts[c] = np.asarray(rows.sum(axis=0)).ravel()
            self.log_prior_[c] = math.log(size / n)
        smoothed = counts + self.alpha
        self.feature_log_prob_ = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
        return self

    def _joint_log_likelihood(self, X) -> np.ndarray:
        return np.asarray(X @ self.feature_log_prob_.T) + self.log_prior_

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self._joint_log_likelihood(X))

    def predict(self, X) -> np.ndarray:
        return self._joint_log_likelihood(X).argmax(axis=1)

    def state(self) -> dict:
        return {"featureLogProb": self.feature_log_prob_.tolist(),
                "logPrior": self.log_prior_.tolist(), "nClasses": self.n_classes}

    def load_state(self, d):
        self.feature_log_prob_ = np.array(d["featureLogProb"], dtype=np.float64)
        self.log_prior_ = np.array(d["logPrior"], dtype=np.float64)
        self.n_classes = int(d["nClasses"])
        return self


class SGDClassifier:
    """One-vs-rest linear model trained by mini-batch SGD with a decaying
    step size; hinge or logistic loss."""

    algorithm = ClassifierAlgorithm.sgd_classifier

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.loss = self.params.get("loss", "hinge")
        self.alpha = float(self.params.get("alpha", 1e-4))
        self.epochs = int(self.params.get("epochs", 20))
        self.seed = seed
        if self.loss not in ("hinge", "logistic"):
            raise EvaluationError("sgd_classifier", f"unknown loss {self.loss!r}")

    def fit(self, X, y: np.ndarray, n_classes: int):
        y = np.asarray(y, dtype=np.int64)
        n, p = X.shape
        self.n_classes = n_classes
        W = np.zeros((p, n_classes))
        b = np.zeros(n_classes)
        signs = 2.0 * _one_hot_targets(y, n_classes) - 1.0   # +-1 targets
        rng = np.random.default_rng(self.seed)
        batch = 32
        step0 = 0.5
        t = 0
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, batch):
                rows = order[start: start + batch]
                Xb = X[rows]
                Sb = signs[rows]
                scores = np.asarray(Xb @ W) + b
                margins = Sb * scores
                if self.loss == "hinge":
                    factor = np.where(margins < 1.0, 1.0, 0.0)
                else:
                    factor = 1.0 / (1.0 + np.exp(np.clip(margins, -500, 500)))
                coeff = Sb * factor / len(rows)
                step = step0 / (1.0 + step0 * self.alpha * t)
                grad_W = -np.asarray(Xb.T @ coeff) + self.alpha * W
                grad_b = -coeff.sum(axis=0)
                W -= step * grad_W
                b -= step * grad_b
                t += 1
        if not np.all(np.isfinite(W)):
            raise EvaluationError("sgd_classifier", "fit diverged")
        self.W_, self.b_ = W, b
        return self

    def decision_scores(self, X) -> np.ndarray:
        return np.asarray(X @ self.W_) + self.b_

    def predict(self, X) -> np.ndarray:
        return self.decision_scores(X).argmax(axis=1)

    def predict_proba(self, X):
        if self.loss != "logistic":
            return None
        scores = self.decision_scores(X)
        per_class = 1.0 / (1.0 + np.exp(-np.clip(scores, -500, 500)))
        total = per_class.sum(axis=1, keepdims=True)
        total[total == 0.0] = 1.0
        return per_class / total

    def state(self) -> dict:
        return {"W": self.W_.tolist(), "b": self.b_.tolist(),
                "nClasses": self.n_classes, "loss": self.loss}

    def load_state(self, d):
        self.W_ = np.array(d["W"], dtype=np.float64)
        self.b_ = np.array(d["b"], dtype=np.float64)
        self.n_classes = int(d["nClasses"])
        self.loss = d.get("loss", self.loss)
        return self


class LinearSVCClassifier(SGDClassifier):
    """Linear SVM: hinge-loss SGD with C mapped to the L2 penalty."""

    algorithm = ClassifierAlgorithm.linear_svc_classifier

    def __init__(self, params: dict | None = None, seed: int = 0):
        params = dict(params or {})
        C = float(params.get("C", 1.0))
        super().__init__({"loss": "hinge",
                          "alpha": 1.0 / max(C, 1e-12) * 1e-3,
                          "epochs": int(params.get("epochs", 50))}, seed)
        self.params = params


class RandomForestClassifier:
    algorithm = ClassifierAlgorithm.random_forest_classifier

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.n_trees = int(self.params.get("trees", 100))
        depth = self.params.get("maxDepth", None)
        self.max_depth = int(depth) if depth is not None else 2 ** 30
        self.min_samples_split = int(self.params.get("minSamplesSplit", 2))
        self.seed = seed

    def fit(self, X, y: np.ndarray, n_classes: int):
        X = np.ascontiguousarray(_as_dense(X), dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, p = X.shape
        self.n_classes = n_classes
        max_features = max(1, int(round(math.sqrt(p))))
        self.trees_ = []
        for t in range(self.n_trees):
            tree_seed = stable_seed("rf", self.seed, t) % (2 ** 63)
            rows = _trees.bootstrap_indices(n, tree_seed)
            feature, threshold, left, right, counts, node_count = (
                _trees.build_classification_tree(
                    X[rows], y[rows], n_classes, self.max_depth,
                    self.min_samples_split, max_features, tree_seed))
            self.trees_.append({
                "feature": feature[:node_count],
                "threshold": threshold[:node_count],
                "left": left[:node_count],
                "right": right[:node_count],
                "counts": counts[:node_count],
            })
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.ascontiguousarray(_as_dense(X), dtype=np.float64)
        total = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees_:
            counts = _trees.tree_leaf_counts(
                np.ascontiguousarray(tree["feature"]),
                np.ascontiguousarray(tree["threshold"]),
                np.ascontiguousarray(tree["left"]),
                np.ascontiguousarray(tree["right"]),
                np.ascontiguousarray(tree["counts"]), X)
            sums = counts.sum(axis=1, keepdims=True)
            sums[sums == 0.0] = 1.0
            total += counts / sums
        return total / len(self.trees_)

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def state(self) -> dict:
        return {
            "nClasses": self.n_classes,
            "trees": [{k: v.tolist() for k, v in tree.items()}
                      for tree in self.trees_],
        }

    def load_state(self, d):
        self.n_classes = int(d["nClasses"])
        self.trees_ = []
        for tree in d["trees"]:
            self.trees_.append({
                "feature": np.array(tree["feature"], dtype=np.int64),
                "threshold": np.array(tree["threshold"], dtype=np.float64),
                "left": np.array(tree["left"], dtype=np.int64),
                "right": np.array(tree["right"], dtype=np.int64),
                "counts": np.array(tree["counts"], dtype=np.float64),
            })
        return self


class GradientBoostingClassifier:
    """One-vs-rest gradient boosting with shrinking regression trees."""

    algorithm = ClassifierAlgorithm.gradient_boosting_classifier

    def __init__(self, params: dict | None = None, seed: int = 0):
        self.params = dict(params or {})
        self.n_trees = int(self.params.get("trees", 100))
        self.learning_rate = float(self.params.get("learningRate", 0.1))
        self.max_depth = int(self.params.get("maxDepth", 3))
        self.seed = seed

    def fit(self, X, y: np.ndarray, n_classes: int):
        X = np.ascontiguousarray(_as_dense(X), dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, p = X.shape
        self.n_classes = n_classes
        self.models_ = []
        for c in range(n_classes):
            target = (y == c).astype(np.float64)
            scores = np.zeros(n)
            stages = []
            for t in range(self.n_trees):
                proba = 1.0 / (1.0 + np.exp(-scores))
                gradient = target - proba
                tree_seed = stable_seed("gb", self.seed, c, t) % (2 ** 63)
                feature, threshold, left, right, value, node_count = (
                    _trees.build_regression_tree(X, gradient, self.max_depth, 2,
                                                 p, tree_seed))
                leaf = _trees.tree_apply(feature, threshold, left, right, X)
                scores += self.learning_rate * value[leaf]
                stages.append({
                    "feature": feature[:node_count],
                    "threshold": threshold[:node_count],
                    "left": left[:node_count],
                    "right": right[:node_count],
                    "value": value[:node_count],
                })
            self.models_.append(stages)
        return self

    def _scores(self, X) -> np.ndarray:
        X = np.ascontiguousarray(_as_dense(X), dtype=np.float64)
        out = np.zeros((X.shape[0], self.n_classes))
        for c, stages in enumerate(self.models_):
            for tree in stages:
                leaf = _trees.tree_apply(
                    np.ascontiguousarray(tree["feature"]),
                    np.ascontiguousarray(tree["threshold"]),
                    np.ascontiguousarray(tree["left"]),
                    np.ascontiguousarray(tree["right"]), X)
                out[:, c] += self.learning_rate * tree["value"][leaf]
        return out

    def predict_proba(self, X) -> np.ndarray:
        per_class = 1.0 / (1.0 + np.exp(-self._scores(X)))
        total = per_class.sum(axis=1, keepdims=True)
        total[total == 0.0] = 1.0
        return per_class / total

    def predict(self, X) -> np.ndarray:
        return self._scores(X).argmax(axis=1)

    def state(self) -> dict:
        return {
            "nClasses": self.n_classes,
            "models": [[{k: v.tolist() for k, v in tree.items()} for tree in stages]
                       for stages in self.models_],
        }

    def load_state(self, d):
        self.n_classes = int(d["nClasses"])
        self.models_ = []
        for stages in d["models"]:
            loaded = []
            for tree in stages:
                loaded.append({
                    "feature": np.array(tree["feature"], dtype=np.int64),
                    "threshold": np.array(tree["threshold"], dtype=np.float64),
                    "left": np.array(tree["left"], dtype=np.int64),
                    "right": np.array(tree["right"], dtype=np.int64),
                    "value": np.array(tree["value"], dtype=np.float64),
                })
            self.models_.append(loaded)
        return self


_CLASSIFIERS = {
    ClassifierAlgorithm.logistic_classifier: LogisticClassifier,
    ClassifierAlgorithm.gaussian_nb_classifier: GaussianNBClassifier,
    ClassifierAlgorithm.multinomial_nb_classifier: MultinomialNBClassifier,
    ClassifierAlgorithm.sgd_classifier: SGDClassifier,
    ClassifierAlgorithm.linear_svc_classifier: LinearSVCClassifier,
    ClassifierAlgorithm.random_forest_classifier: RandomForestClassifier,
    ClassifierAlgorithm.gradient_boosting_classifier: GradientBoostingClassifier,
}


def build_classifier(algorithm: ClassifierAlgorithm | str,
                     params: dict | None = None, seed: int = 0):
    try:
        algorithm = ClassifierAlgorithm(algorithm)
    except ValueError:
        raise UnknownComponent(f"unknown classifier {algorithm!r}") from None
    return _CLASSIFIERS[algorithm](params, seed)


def classifier_from_state(algorithm: str, params: dict, state: dict, seed: int = 0):
    classifier = build_classifier(algorithm, params, seed)
    return classifier.load_state(state)
