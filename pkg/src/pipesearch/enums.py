"""Closed enumerations for the pipeline search space.

Serialized names are part of the wire format (journal records, JSON
payloads, plan step rendering) and must not be renamed. Declaration
order doubles as the deterministic tie-break order used by the planner.
"""

from __future__ import annotations

import enum


class ClassifierAlgorithm(str, enum.Enum):
    random_forest_classifier = "random_forest_classifier"
    linear_svc_classifier = "linear_svc_classifier"
    gaussian_nb_classifier = "gaussian_nb_classifier"
    multinomial_nb_classifier = "multinomial_nb_classifier"
    logistic_classifier = "logistic_classifier"
    sgd_classifier = "sgd_classifier"
    gradient_boosting_classifier = "gradient_boosting_classifier"


class PreprocessorAlgorithm(str, enum.Enum):
    noop = "noop"
    truncatedSVD = "truncatedSVD"
    pca = "pca"
    kernelPCA = "kernelPCA"
    fastICA = "fastICA"
    rbfsampler = "rbfsampler"
    nystroem = "nystroem"
    selectkbest = "selectkbest"
    selectpercentile = "selectpercentile"
    minmaxscaler = "minmaxscaler"
    robustscaler = "robustscaler"
    absscaler = "absscaler"
    random_trees_embedding = "random_trees_embedding"
    std_scaler = "std_scaler"


class FeaturizerAlgorithm(str, enum.Enum):
    one_hot = "one_hot"
    min_max_scaler = "min_max_scaler"
    std_scaler = "std_scaler"
    robust_scaler = "robust_scaler"
    hashing_vectorizer = "hashing_vectorizer"
    count_vectorizer = "count_vectorizer"
    tfidf_vectorizer = "tfidf_vectorizer"


class FeatureType(str, enum.Enum):
    integer = "integer"
    float = "float"
    categorical = "categorical"
    text = "text"


class Metric(str, enum.Enum):
    accuracy = "accuracy"
    f1 = "f1"
    precision = "precision"
    recall = "recall"


def enum_rank(member: enum.Enum) -> int:
    """Position of a member in its enum's declaration order."""
    return list(type(member)).index(member)
