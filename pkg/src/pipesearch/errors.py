"""Exception hierarchy shared across the package."""


class PipesearchError(Exception):
    """Base class for all errors raised by this package."""


class InvariantViolation(PipesearchError):
    """A domain object failed one of its declared invariants."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigError(PipesearchError):
    """User-supplied configuration is unusable."""


class ParseError(PipesearchError):
    """Input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class SchemaMismatch(PipesearchError):
    """Prediction-time rows do not conform to the training schema."""


class UnknownComponent(PipesearchError):
    """An algorithm name does not resolve to an implemented component."""


class EvaluationError(PipesearchError):
    """A pipeline component failed during fitting or scoring."""

    def __init__(self, component: str, message: str):
        self.component = component
        super().__init__(f"{component}: {message}")


class NoEvaluations(PipesearchError):
    """A query required at least one completed evaluation."""


class UnknownSession(PipesearchError):
    """Session or job identifier does not resolve."""


class SearchSpaceError(PipesearchError):
    """The requested change would leave the search space unusable."""
