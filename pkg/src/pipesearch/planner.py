"""Symbolic pipeline planning over the declared search space.

Pipelines have a fixed action shape: import the training data, apply one
featurizer per column, apply one preprocessor, cross-validate a
classifier, train. The planner grounds that shape against the dataset
schema, the user's candidate sets and the compatibility facts, then
searches the grounded space for the plan with the best estimated quality
above a moving bar. Unexplored steps are scored with an optimistic
default so untried components get visited before the search settles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .enums import (
    ClassifierAlgorithm,
    FeatureType,
    FeaturizerAlgorithm,
    PreprocessorAlgorithm,
    enum_rank,
)
from .errors import ConfigError, InvariantViolation
from .ingest import DatasetSchema
from .rl import ValueTable

__all__ = [
    "SearchSpaceConfig", "CompatibilityFacts", "FeaturizerOverride",
    "PlanStep", "Plan", "PlanState", "GroundedDomain", "NoImprovingPlan",
    "build_domain", "generate_plan", "estimate_quality",
    "DEFAULT_COMPATIBILITY", "STEP_OPTIMISM",
]

# Optimistic quality contribution of a step whose rho is still unexplored.
STEP_OPTIMISM = 10.0


@dataclass(frozen=True)
class FeaturizerOverride:
    featurizer: FeaturizerAlgorithm
    force: bool = False


@dataclass(frozen=True)
class CompatibilityFacts:
    """Which components tolerate sparse matrices, which featurizers suit
    which column types, and the per-type default featurizer."""

    accepts_sparse_classifiers: frozenset[ClassifierAlgorithm]
    accepts_sparse_preprocessors: frozenset[PreprocessorAlgorithm]
    accepts_sparse_featurizers: frozenset[FeaturizerAlgorithm]
    compatible: dict[FeatureType, frozenset[FeaturizerAlgorithm]]
    default_featurizer: dict[FeatureType, FeaturizerAlgorithm]

    def __post_init__(self):
        for ftype in FeatureType:
            if ftype not in self.default_featurizer:
                raise InvariantViolation("defaultFeaturizer", f"no default for type {ftype.value}")


DEFAULT_COMPATIBILITY = CompatibilityFacts(
    accepts_sparse_classifiers=frozenset({
        ClassifierAlgorithm.logistic_classifier,
        ClassifierAlgorithm.sgd_classifier,
        ClassifierAlgorithm.multinomial_nb_classifier,
        ClassifierAlgorithm.linear_svc_classifier,
    }),
    accepts_sparse_preprocessors=frozenset({
        PreprocessorAlgorithm.noop,
        PreprocessorAlgorithm.selectkbest,
        PreprocessorAlgorithm.truncatedSVD,
    }),
    accepts_sparse_featurizers=frozenset({
        FeaturizerAlgorithm.hashing_vectorizer,
        FeaturizerAlgorithm.count_vectorizer,
        FeaturizerAlgorithm.tfidf_vectorizer,
    }),
    compatible={
        FeatureType.integer: frozenset({
            FeaturizerAlgorithm.min_max_scaler,
            FeaturizerAlgorithm.std_scaler,
            FeaturizerAlgorithm.robust_scaler,
        }),
        FeatureType.float: frozenset({
            FeaturizerAlgorithm.std_scaler,
            FeaturizerAlgorithm.min_max_scaler,
            FeaturizerAlgorithm.robust_scaler,
        }),
        FeatureType.categorical: frozenset({FeaturizerAlgorithm.one_hot}),
        FeatureType.text: frozenset({
            FeaturizerAlgorithm.hashing_vectorizer,
            FeaturizerAlgorithm.count_vectorizer,
            FeaturizerAlgorithm.tfidf_vectorizer,
        }),
    },
    default_featurizer={
        FeatureType.categorical: FeaturizerAlgorithm.one_hot,
        FeatureType.float: FeaturizerAlgorithm.std_scaler,
        FeatureType.integer: FeaturizerAlgorithm.min_max_scaler,
        FeatureType.text: FeaturizerAlgorithm.hashing_vectorizer,
    },
)


@dataclass
class SearchSpaceConfig:
    """Candidate classifiers/preprocessors plus per-column featurizer
    overrides. Each column gets its type's default featurizer unless an
    override names something else; a type-incompatible override is only
    honored when flagged force."""

    candidate_classifiers: list[ClassifierAlgorithm]
    candidate_preprocessors: list[PreprocessorAlgorithm]
    featurizer_overrides: dict[str, FeaturizerOverride] = field(default_factory=dict)
    candidate_featurizers: frozenset[FeaturizerAlgorithm] = frozenset(FeaturizerAlgorithm)

    def __post_init__(self):
        if not self.candidate_classifiers:
            raise InvariantViolation("candidateModels", "must be non-empty")
        if not self.candidate_preprocessors:
            raise InvariantViolation("candidatePreprocessors", "must be non-empty")
        # Dedup while keeping deterministic enum order.
        self.candidate_classifiers = sorted(set(self.candidate_classifiers), key=enum_rank)
        self.candidate_preprocessors = sorted(set(self.candidate_preprocessors), key=enum_rank)


@dataclass(frozen=True)
class PlanStep:
    """One action of a plan, rendered with the symbolic action names."""

    kind: str                 # import_train | initfeaturizer | initpreprocessor | crossvalidate | train
    args: tuple[str, ...]

    def action(self) -> str:
        return f"{self.kind}({','.join(self.args)})"

    @property
    def contributes(self) -> bool:
        return self.kind in ("initfeaturizer", "initpreprocessor", "crossvalidate")

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "args": list(self.args), "action": self.action()}


@dataclass(frozen=True)
class PlanState:
    """Canonical progress marker used as the value-table state key."""

    imported: bool = False
    featurized: tuple[tuple[str, str], ...] = ()   # sorted (column, featurizer) pairs
    preprocessor: str | None = None
    validated: bool = False
    trained: bool = False

    def key(self) -> str:
        feats = ",".join(f"{c}:{f}" for c, f in self.featurized)
        return (f"state(imported={int(self.imported)};feats=[{feats}];"
                f"prep={self.preprocessor or '-'};validated={int(self.validated)};"
                f"trained={int(self.trained)})")

    def after(self, step: PlanStep) -> "PlanState":
        if step.kind == "import_train":
            return PlanState(True, self.featurized, self.preprocessor, self.validated, self.trained)
        if step.kind == "initfeaturizer":
            feat, col = step.args[0], step.args[1]
            featurized = tuple(sorted(self.featurized + ((col, feat),)))
            return PlanState(self.imported, featurized, self.preprocessor, self.validated, self.trained)
        if step.kind == "initpreprocessor":
            return PlanState(self.imported, self.featurized, step.args[0], self.validated, self.trained)
        if step.kind == "crossvalidate":
            return PlanState(self.imported, self.featurized, self.preprocessor, True, self.trained)
        if step.kind == "train":
            return PlanState(self.imported, self.featurized, self.preprocessor, self.validated, True)
        raise ValueError(f"unknown step kind {step.kind!r}")


@dataclass(frozen=True)
class Plan:
    """An ordered symbolic pipeline: import, one featurizer per column,
    preprocessor, cross-validation, train."""

    steps: tuple[PlanStep, ...]
    estimated_quality: float = field(default=0.0, compare=False)

    def transitions(self):
        """Yield (state_key, step, next_state_key) along the plan."""
        state = PlanState()
        for step in self.steps:
            nxt = state.after(step)
            yield state.key(), step, nxt.key()
            state = nxt

    def value_transitions(self):
        """(state_key, action) pairs for the contributing steps only."""
        return [(s, step.action()) for s, step, _ in self.transitions() if step.contributes]

    @property
    def classifier(self) -> ClassifierAlgorithm:
        return ClassifierAlgorithm(self._step_of("crossvalidate").args[0])

    @property
    def preprocessor(self) -> PreprocessorAlgorithm:
        return PreprocessorAlgorithm(self._step_of("initpreprocessor").args[0])

    @property
    def representation(self) -> str:
        return self._step_of("crossvalidate").args[2]

    @property
    def target(self) -> str:
        return self._step_of("crossvalidate").args[3]

    @property
    def dataset_name(self) -> str:
        return self._step_of("import_train").args[0]

    def featurizer_assignment(self) -> dict[str, FeaturizerAlgorithm]:
        return {s.args[1]: FeaturizerAlgorithm(s.args[0])
                for s in self.steps if s.kind == "initfeaturizer"}

    def _step_of(self, kind: str) -> PlanStep:
        for s in self.steps:
            if s.kind == kind:
                return s
        raise ValueError(f"plan has no {kind} step")

    def lex_key(self) -> tuple:
        assignment = tuple(enum_rank(FeaturizerAlgorithm(s.args[0]))
                           for s in self.steps if s.kind == "initfeaturizer")
        return (enum_rank(self.classifier), enum_rank(self.preprocessor), assignment)

    def key(self) -> str:
        return ";".join(s.action() for s in self.steps)

    def to_json_dict(self) -> dict:
        return {
            "steps": [s.to_json_dict() for s in self.steps],
            "estimatedQuality": self.estimated_quality,
            "classifier": self.classifier.value,
            "preprocessor": self.preprocessor.value,
            "representation": self.representation,
            "featurizers": {c: f.value for c, f in self.featurizer_assignment().items()},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Plan":
        steps = tuple(PlanStep(s["kind"], tuple(s["args"])) for s in d["steps"])
        return cls(steps=steps, estimated_quality=d.get("estimatedQuality", 0.0))


@dataclass(frozen=True)
class NoImprovingPlan:
    """Returned when no candidate plan beats the quality bar."""

    reason: str
    min_quality: float = float("-inf")


@dataclass
class GroundedDomain:
    """The legal pipeline space for one dataset and search-space config."""

    schema: DatasetSchema
    assignment: tuple[tuple[str, FeaturizerAlgorithm], ...]   # (column, featurizer), schema order
    representation: str                                       # "sparse" | "dense"
    candidates: tuple[tuple[ClassifierAlgorithm, PreprocessorAlgorithm], ...]

    @property
    def is_empty(self) -> bool:
        return not self.candidates

    def build_plan(self, classifier: ClassifierAlgorithm,
                   preprocessor: PreprocessorAlgorithm,
                   estimated_quality: float = 0.0) -> Plan:
        name = self.schema.dataset_name
        target = self.schema.target_name
        steps = [PlanStep("import_train", (name,))]
        for col, feat in self.assignment:
            steps.append(PlanStep("initfeaturizer", (feat.value, col, name)))
        steps.append(PlanStep("initpreprocessor", (preprocessor.value, name)))
        steps.append(PlanStep("crossvalidate", (classifier.value, preprocessor.value,
                                                self.representation, target)))
        steps.append(PlanStep("train", (classifier.value, preprocessor.value,
                                        self.representation, target)))
        return Plan(steps=tuple(steps), estimated_quality=estimated_quality)

    def plans(self):
        for c, p in self.candidates:
            yield self.build_plan(c, p)

    def restrict(self, drop: set[tuple[ClassifierAlgorithm, PreprocessorAlgorithm]]) -> "GroundedDomain":
        """Domain with the given (classifier, preprocessor) pairs removed."""
        kept = tuple(cp for cp in self.candidates if cp not in drop)
        return GroundedDomain(self.schema, self.assignment, self.representation, kept)

    def to_json_dict(self) -> dict:
        return {
            "datasetName": self.schema.dataset_name,
            "targetName": self.schema.target_name,
            "featurizers": {c: f.value for c, f in self.assignment},
            "representation": self.representation,
            "candidates": [{"classifier": c.value, "preprocessor": p.value}
                           for c, p in self.candidates],
        }


def build_domain(schema: DatasetSchema, config: SearchSpaceConfig,
                 compat: CompatibilityFacts = DEFAULT_COMPATIBILITY) -> GroundedDomain:
    """Ground the pipeline space: fix the featurizer assignment (default
    per column type unless overridden), decide the matrix representation,
    and enumerate the legal (classifier, preprocessor) combinations.

    The representation is sparse exactly when every feature column is
    text; sparse grounding excludes components that cannot consume sparse
    matrices. Raises when a column ends up with no usable featurizer.
    """
    feature_cols = schema.feature_columns
    if not feature_cols:
        raise ConfigError("schema has no feature columns to featurize")

    known_names = {c.name for c in feature_cols} | {c.raw_name for c in feature_cols}
    for override_col in config.featurizer_overrides:
        if override_col not in known_names:
            raise ConfigError(f"featurizer override references unknown column {override_col!r}")

    assignment: list[tuple[str, FeaturizerAlgorithm]] = []
    for col in feature_cols:
        override = config.featurizer_overrides.get(col.name)
        if override is None and col.raw_name in config.featurizer_overrides:
            override = config.featurizer_overrides[col.raw_name]
        if override is not None:
            feat = override.featurizer
            if not override.force and feat not in compat.compatible[col.ftype]:
                raise ConfigError(
                    f"featurizer {feat.value} is not compatible with {col.ftype.value} "
                    f"column {col.name} (pass force to apply anyway)")
        else:
            feat = compat.default_featurizer[col.ftype]
            if feat not in config.candidate_featurizers:
                raise ConfigError(f"uncoverable column {col.name}: default featurizer "
                                  f"{feat.value} excluded and no override given")
        assignment.append((col.name, feat))

    types_present = {c.ftype for c in feature_cols}
    sparse = types_present == {FeatureType.text}
    representation = "sparse" if sparse else "dense"

    candidates = []
    for c, p in itertools.product(config.candidate_classifiers, config.candidate_preprocessors):
        if sparse:
            if c not in compat.accepts_sparse_classifiers:
                continue
            if p not in compat.accepts_sparse_preprocessors:
                continue
            if any(f not in compat.accepts_sparse_featurizers for _, f in assignment):
                continue
        candidates.append((c, p))

    return GroundedDomain(
        schema=schema,
        assignment=tuple(assignment),
        representation=representation,
        candidates=tuple(candidates),
    )


def estimate_quality(plan: Plan, values: ValueTable) -> float:
    """Plan quality estimate: learned rho per contributing step when
    explored, otherwise the optimistic default; import/train contribute 0."""
    total = 0.0
    for state, action in plan.value_transitions():
        if values.has_rho(state, action):
            total += values.rho_value(state, action)
        else:
            total += STEP_OPTIMISM
    return total


def generate_plan(domain: GroundedDomain, values: ValueTable,
                  min_quality: float) -> Plan | NoImprovingPlan:
    """Best plan in the grounded domain by estimated quality, subject to
    a strict improvement over min_quality.

    Candidates are scanned in (classifier, preprocessor, featurizer
    assignment) enum order and ties keep the first seen, so generation is
    deterministic. Returns NoImprovingPlan when nothing clears the bar."""
    if domain.is_empty:
        return NoImprovingPlan(reason="empty search space", min_quality=min_quality)
    best: Plan | None = None
    best_quality = float("-inf")
    for plan in domain.plans():
        q = estimate_quality(plan, values)
        if q > best_quality:
            best, best_quality = plan, q
    assert best is not None
    if best_quality <= min_quality:
        return NoImprovingPlan(reason="no plan beats current quality", min_quality=min_quality)
    return Plan(steps=best.steps, estimated_quality=best_quality)
