"""Hyper-parameter spaces, seeded random sampling and 3-point grids.

Each tunable component declares a space of named distributions. Sampling
draws parameters in sorted name order from a seeded generator so a seed
fully determines the ParamSet. Grids take three points per parameter
(low, middle, high; choices take first/middle/last) and combine them in
sorted-name product order, which is also the truncation priority.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..enums import ClassifierAlgorithm, FeaturizerAlgorithm, PreprocessorAlgorithm
from ..errors import InvariantViolation, UnknownComponent

__all__ = ["sample_params", "grid_points", "default_params", "PARAM_SPACES",
           "HASHING_DEFAULT_DIMENSION"]

HASHING_DEFAULT_DIMENSION = 2 ** 18


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def __post_init__(self):
        if not (0 < self.low < self.high):
            raise InvariantViolation("paramSpace", "log-uniform requires 0 < a < b")

    def sample(self, rng: np.random.Generator):
        return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))

    def grid(self) -> list:
        return [self.low, float(math.sqrt(self.low * self.high)), self.high]


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise InvariantViolation("paramSpace", "uniform requires a < b")

    def sample(self, rng: np.random.Generator):
        return float(rng.uniform(self.low, self.high))

    def grid(self) -> list:
        return [self.low, (self.low + self.high) / 2.0, self.high]


@dataclass(frozen=True)
class UniformInt:
    low: int
    high: int

    def __post_init__(self):
        if not self.low < self.high:
            raise InvariantViolation("paramSpace", "uniform-int requires a < b")

    def sample(self, rng: np.random.Generator):
        return int(rng.integers(self.low, self.high + 1))

    def grid(self) -> list:
        return [self.low, int(round((self.low + self.high) / 2.0)), self.high]


@dataclass(frozen=True)
class Choice:
    options: tuple

    def __post_init__(self):
        if not self.options:
            raise InvariantViolation("paramSpace", "choice set must be non-empty")

    def sample(self, rng: np.random.Generator):
        return self.options[int(rng.integers(len(self.options)))]

    def grid(self) -> list:
        if len(self.options) <= 3:
            return list(self.options)
        return [self.options[0], self.options[len(self.options) // 2], self.options[-1]]


# maxDepth None means unbounded depth.
PARAM_SPACES: dict[str, dict] = {
    ClassifierAlgorithm.logistic_classifier.value: {
        "norm": Choice(("l1", "l2")),
        "tolerance": LogUniform(1e-5, 1e-2),
        "C": LogUniform(1e-3, 1e3),
        "balance": Choice((True, False)),
        "solver": Choice(("gd",)),
        "maxIterations": Choice((100, 500, 1000)),
    },
    ClassifierAlgorithm.random_forest_classifier.value: {
        "trees": UniformInt(10, 200),
        "maxDepth": Choice((None, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16)),
        "minSamplesSplit": UniformInt(2, 10),
    },
    ClassifierAlgorithm.gaussian_nb_classifier.value: {
        "varSmoothing": LogUniform(1e-11, 1e-7),
    },
    ClassifierAlgorithm.multinomial_nb_classifier.value: {
        "alpha": LogUniform(1e-3, 10),
    },
    ClassifierAlgorithm.sgd_classifier.value: {
        "loss": Choice(("hinge", "logistic")),
        "alpha": LogUniform(1e-6, 1e-2),
        "epochs": Choice((5, 20, 50)),
    },
    ClassifierAlgorithm.linear_svc_classifier.value: {
        "C": LogUniform(1e-3, 1e3),
        "epochs": Choice((20, 50)),
    },
    ClassifierAlgorithm.gradient_boosting_classifier.value: {
        "trees": UniformInt(50, 200),
        "learningRate": LogUniform(0.01, 0.3),
        "maxDepth": Choice((2, 3, 4)),
    },
    PreprocessorAlgorithm.pca.value: {
        "componentFraction": Uniform(0.2, 0.95),
    },
    PreprocessorAlgorithm.selectkbest.value: {
        "kFraction": Uniform(0.1, 1.0),
    },
    PreprocessorAlgorithm.truncatedSVD.value: {
        "componentFraction": Uniform(0.2, 0.95),
    },
    PreprocessorAlgorithm.kernelPCA.value: {
        "componentFraction": Uniform(0.2, 0.95),
        "gamma": LogUniform(1e-3, 1.0),
    },
    PreprocessorAlgorithm.fastICA.value: {
        "componentFraction": Uniform(0.2, 0.95),
    },
    PreprocessorAlgorithm.rbfsampler.value: {
        "gamma": LogUniform(1e-3, 1.0),
        "components": Choice((100, 300)),
    },
    PreprocessorAlgorithm.nystroem.value: {
        "gamma": LogUniform(1e-3, 1.0),
        "components": Choice((100, 300)),
    },
    PreprocessorAlgorithm.selectpercentile.value: {
        "percentile": UniformInt(10, 100),
    },
    PreprocessorAlgorithm.random_trees_embedding.value: {
        "trees": Choice((10, 30)),
        "maxDepth": Choice((3, 5)),
    },
    PreprocessorAlgorithm.noop.value: {},
    PreprocessorAlgorithm.minmaxscaler.value: {},
    PreprocessorAlgorithm.robustscaler.value: {},
    PreprocessorAlgorithm.absscaler.value: {},
    PreprocessorAlgorithm.std_scaler.value: {},
    FeaturizerAlgorithm.hashing_vectorizer.value: {
        "dimension": Choice((HASHING_DEFAULT_DIMENSION,)),
    },
    FeaturizerAlgorithm.one_hot.value: {},
    FeaturizerAlgorithm.min_max_scaler.value: {},
    FeaturizerAlgorithm.std_scaler.value: {},
    FeaturizerAlgorithm.robust_scaler.value: {},
    FeaturizerAlgorithm.count_vectorizer.value: {},
    FeaturizerAlgorithm.tfidf_vectorizer.value: {},
}

DEFAULT_PARAMS: dict[str, dict] = {
    ClassifierAlgorithm.logistic_classifier.value: {
        "norm": "l2", "tolerance": 1e-4, "C": 1.0, "balance": False,
        "solver": "gd", "maxIterations": 500,
    },
    ClassifierAlgorithm.random_forest_classifier.value: {
        "trees": 100, "maxDepth": None, "minSamplesSplit": 2,
    },
    ClassifierAlgorithm.gaussian_nb_classifier.value: {"varSmoothing": 1e-9},
    ClassifierAlgorithm.multinomial_nb_classifier.value: {"alpha": 1.0},
    ClassifierAlgorithm.sgd_classifier.value: {
        "loss": "hinge", "alpha": 1e-4, "epochs": 20,
    },
    ClassifierAlgorithm.linear_svc_classifier.value: {"C": 1.0, "epochs": 50},
    ClassifierAlgorithm.gradient_boosting_classifier.value: {
        "trees": 100, "learningRate": 0.1, "maxDepth": 3,
    },
    PreprocessorAlgorithm.pca.value: {"componentFraction": 0.9},
    PreprocessorAlgorithm.selectkbest.value: {"kFraction": 0.5},
    PreprocessorAlgorithm.truncatedSVD.value: {"componentFraction": 0.5},
    PreprocessorAlgorithm.kernelPCA.value: {"componentFraction": 0.5, "gamma": 0.1},
    PreprocessorAlgorithm.fastICA.value: {"componentFraction": 0.5},
    PreprocessorAlgorithm.rbfsampler.value: {"gamma": 0.1, "components": 100},
    PreprocessorAlgorithm.nystroem.value: {"gamma": 0.1, "components": 100},
    PreprocessorAlgorithm.selectpercentile.value: {"percentile": 50},
    PreprocessorAlgorithm.random_trees_embedding.value: {"trees": 10, "maxDepth": 5},
    FeaturizerAlgorithm.hashing_vectorizer.value: {
        "dimension": HASHING_DEFAULT_DIMENSION},
}


def _component_name(component) -> str:
    name = getattr(component, "value", component)
    if name not in PARAM_SPACES:
        raise UnknownComponent(f"no parameter space declared for {name!r}")
    return name


def sample_params(component, seed: int) -> dict:
    """Deterministic random ParamSet for a component under a fixed seed."""
    name = _component_name(component)
    rng = np.random.default_rng(seed)
    return {param: dist.sample(rng)
            for param, dist in sorted(PARAM_SPACES[name].items())}


def default_params(component) -> dict:
    name = _component_name(component)
    return dict(DEFAULT_PARAMS.get(name, {}))


def grid_points(component) -> list[dict]:
    """Per-parameter 3-point grids combined in sorted-name product order."""
    name = _component_name(component)
    space = sorted(PARAM_SPACES[name].items())
    if not space:
        return [{}]
    names = [p for p, _ in space]
    axes = [dist.grid() for _, dist in space]
    return [dict(zip(names, combo)) for combo in itertools.product(*axes)]
