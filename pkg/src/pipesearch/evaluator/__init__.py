"""Concrete pipeline execution: featurizers, preprocessors, classifiers,
hyper-parameter sampling, cross-validation, final training and prediction.
"""

from .artifact import ModelArtifact, fit_final, predict
from .matrix import FeatureMatrix
from .metrics import compute_metrics
from .params import default_params, grid_points, sample_params
from .pipeline import CVResult, PipelineInstance, cross_validate, stratified_folds

__all__ = [
    "FeatureMatrix", "compute_metrics", "sample_params", "grid_points",
    "default_params", "PipelineInstance", "CVResult", "cross_validate",
    "stratified_folds", "ModelArtifact", "fit_final", "predict",
]
