"""Interpretable AutoML: symbolic pipeline planning steered by
average-reward reinforcement learning, with a persistent knowledge store,
an interactive training service and a command line front end.
"""

__version__ = "0.1.0"

from .enums import (
    ClassifierAlgorithm,
    FeatureType,
    FeaturizerAlgorithm,
    Metric,
    PreprocessorAlgorithm,
)
from .errors import (
    ConfigError,
    EvaluationError,
    InvariantViolation,
    NoEvaluations,
    ParseError,
    PipesearchError,
    SchemaMismatch,
    SearchSpaceError,
    UnknownComponent,
    UnknownSession,
)
from .ingest import load_csv
from .kgstore import (
    FieldInput,
    KnowledgeStore,
    Label,
    MachineLearningModel,
    TrainingInput,
)
from .orchestrator import (
    FeedbackCommand,
    PhaseEvent,
    Session,
    SessionConfig,
    profile_pipelines,
    run_session,
)
from .planner import GroundedDomain, Plan, SearchSpaceConfig, build_domain, generate_plan
from .report import build_report, render_markdown, write_report
from .rl import RLConfig, ValueTable

__all__ = [
    "ClassifierAlgorithm", "PreprocessorAlgorithm", "FeaturizerAlgorithm",
    "FeatureType", "Metric",
    "PipesearchError", "InvariantViolation", "ConfigError", "ParseError",
    "SchemaMismatch", "UnknownComponent", "EvaluationError", "NoEvaluations",
    "UnknownSession", "SearchSpaceError",
    "load_csv",
    "TrainingInput", "FieldInput", "Label", "MachineLearningModel", "KnowledgeStore",
    "SearchSpaceConfig", "GroundedDomain", "Plan", "build_domain", "generate_plan",
    "RLConfig", "ValueTable",
    "Session", "SessionConfig", "FeedbackCommand", "PhaseEvent",
    "profile_pipelines", "run_session",
    "build_report", "render_markdown", "write_report",
    "__version__",
]
