"""Session orchestration: the pipeline-profiling loop, the three-phase
interactive protocol, live feedback, event journaling and parallel
episode dispatch.

A session runs three phases over one training request. Phase 1 profiles
every candidate classifier in isolation (no preprocessing) and keeps the
one with the best mean validation metric. Phase 2 fixes that classifier
and lets the planner/value loop search the preprocessor space until the
generated plan stops changing. Phase 3 sweeps hyper-parameters on the
winning pipeline shape, fits the best setting on the full training data
and records the resulting model.

Users can steer a live session: feedback commands are queued thread-safe
and take effect at the next episode boundary, never mid-cross-validation.
Every observable step is journaled as a PhaseEvent before subscribers see
it, so a crashed or restarted reader can replay the exact history.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .enums import (
    ClassifierAlgorithm,
    FeaturizerAlgorithm,
    Metric,
    PreprocessorAlgorithm,
    enum_rank,
)
from .errors import (
    ConfigError,
    EvaluationError,
    InvariantViolation,
    SearchSpaceError,
)
from .evaluator import (
    ModelArtifact,
    cross_validate,
    default_params,
    fit_final,
    grid_points,
    sample_params,
)
from .evaluator.pipeline import PipelineInstance
from .ingest import Dataset, load_csv
from .kgstore import (
    EvaluationRecord,
    FeatureAssignment,
    KnowledgeStore,
    Label,
    MachineLearningModel,
    PlanRecord,
    TrainingInput,
)
from .planner import (
    DEFAULT_COMPATIBILITY,
    FeaturizerOverride,
    GroundedDomain,
    NoImprovingPlan,
    Plan,
    SearchSpaceConfig,
    build_domain,
    generate_plan,
)
from .rl import RLConfig, ValueTable, plan_quality
from .util import stable_seed

__all__ = [
    "SessionConfig", "FeedbackCommand", "PhaseEvent", "EpisodeOutcome",
    "PlanProfile", "ProfileResult", "ProfilingHooks", "ControlDirective",
    "PipelineEvaluator", "Session", "profile_pipelines", "run_session",
    "load_journal", "EVENT_KINDS", "FEEDBACK_KINDS",
]

EVENT_KINDS = (
    "planGenerated", "episodeCompleted", "pipelineConverged",
    "phaseCompleted", "feedbackApplied", "sessionCompleted", "error",
)

FEEDBACK_KINDS = (
    "addClassifier", "removeClassifier", "addPreprocessor",
    "removePreprocessor", "overrideFeaturizer", "cancelCurrentPipeline",
    "stopPhase", "stopAll",
)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class SessionConfig:
    """Everything a session needs beyond the dataset itself.

    The training request may carry its own episode/fold counts; when it
    does, those override the session defaults, since the request is the
    user's word. worker_count None means one worker per available core;
    0 forces inline execution on the dispatcher thread.
    """

    training_input: TrainingInput
    rl: RLConfig = field(default_factory=RLConfig)
    profiling_episodes: int = 10
    search_episodes: int = 20
    folds: int | None = None
    max_outer_iterations: int = 25
    worker_count: int | None = None
    seed: int = 0
    sweep_mode: str = "random"          # random | grid
    out_dir: str | Path | None = None

    def __post_init__(self):
        ti = self.training_input
        if ti.model_profiling_episode is not None:
            self.profiling_episodes = ti.model_profiling_episode
        if ti.model_search_episode is not None:
            self.search_episodes = ti.model_search_episode
        if self.folds is None:
            self.folds = ti.folds
        if self.profiling_episodes < 1:
            raise InvariantViolation("profilingEpisodes", "must be >= 1")
        if self.search_episodes < 1:
            raise InvariantViolation("searchEpisodes", "must be >= 1")
        if self.folds < 2:
            raise InvariantViolation("folds", "cross validation requires v >= 2")
        if self.max_outer_iterations < 1:
            raise InvariantViolation("maxOuterIterations", "must be >= 1")
        if self.sweep_mode not in ("random", "grid"):
            raise InvariantViolation("sweepMode", f"must be random or grid, got {self.sweep_mode!r}")
        if self.worker_count is not None and self.worker_count < 0:
            raise InvariantViolation("workerCount", "must be >= 0")

    @property
    def criterion(self) -> Metric:
        return self.training_input.selection_criteria


@dataclass
class FeedbackCommand:
    """One steering command for a live session.

    kind selects the action; the component fields are required or
    forbidden depending on it. feedback_id is assigned at submission when
    absent and echoes through the matching feedbackApplied event.
    """

    kind: str
    classifier: ClassifierAlgorithm | None = None
    preprocessor: PreprocessorAlgorithm | None = None
    column: str | None = None
    featurizer: FeaturizerAlgorithm | None = None
    feedback_id: str | None = None

    def __post_init__(self):
        if self.kind not in FEEDBACK_KINDS:
            raise ConfigError(f"unknown feedback kind {self.kind!r}")
        if self.classifier is not None:
            self.classifier = ClassifierAlgorithm(self.classifier)
        if self.preprocessor is not None:
            self.preprocessor = PreprocessorAlgorithm(self.preprocessor)
        if self.featurizer is not None:
            self.featurizer = FeaturizerAlgorithm(self.featurizer)
        if self.kind in ("addClassifier", "removeClassifier") and self.classifier is None:
            raise ConfigError(f"{self.kind} requires a classifier")
        if self.kind in ("addPreprocessor", "removePreprocessor") and self.preprocessor is None:
            raise ConfigError(f"{self.kind} requires a preprocessor")
        if self.kind == "overrideFeaturizer" and (self.column is None or self.featurizer is None):
            raise ConfigError("overrideFeaturizer requires a column and a featurizer")

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classifier": self.classifier.value if self.classifier else None,
            "preprocessor": self.preprocessor.value if self.preprocessor else None,
            "column": self.column,
            "featurizer": self.featurizer.value if self.featurizer else None,
            "feedbackId": self.feedback_id,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeedbackCommand":
        return cls(
            kind=d["kind"],
            classifier=ClassifierAlgorithm(d["classifier"]) if d.get("classifier") else None,
            preprocessor=PreprocessorAlgorithm(d["preprocessor"]) if d.get("preprocessor") else None,
            column=d.get("column"),
            featurizer=FeaturizerAlgorithm(d["featurizer"]) if d.get("featurizer") else None,
            feedback_id=d.get("feedbackId"),
        )


@dataclass
class PhaseEvent:
    """One journaled session event. seq is strictly increasing per
    session; phase 0 marks session-scope events."""

    session_id: str
    phase: int
    kind: str
    payload: dict
    seq: int
    timestamp: str

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise InvariantViolation("kind", f"unknown event kind {self.kind!r}")
        if self.phase not in (0, 1, 2, 3):
            raise InvariantViolation("phase", f"must be 0..3, got {self.phase}")
        if self.seq < 0:
            raise InvariantViolation("seq", "must be non-negative")

    def to_json_dict(self) -> dict:
        return {
            "sessionId": self.session_id,
            "phase": self.phase,
            "kind": self.kind,
            "payload": self.payload,
            "seq": self.seq,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PhaseEvent":
        return cls(session_id=d["sessionId"], phase=d["phase"], kind=d["kind"],
                   payload=d.get("payload", {}), seq=d["seq"], timestamp=d["timestamp"])


def load_journal(path: str | Path) -> list[PhaseEvent]:
    """Replay a session journal file into ordered PhaseEvents."""
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(PhaseEvent.from_json_dict(json.loads(line)))
    return events


@dataclass
class EpisodeOutcome:
    """Result of one profiling or sweep episode: the sampled parameters
    and either cross-validation scores or a failure message."""

    plan_key: str
    seed: int
    classifier_params: dict
    preprocessor_params: dict
    means: dict[str, float] | None = None
    fold_scores: dict[str, list[float]] | None = None
    wall_clock_seconds: float = 0.0
    error: str | None = None
    episode_index: int = 0
    traversal: int = 1

    @property
    def ok(self) -> bool:
        return self.error is None

    def mean_for(self, criterion: Metric) -> float:
        if self.means is None:
            raise EvaluationError("episode", "failed episode has no scores")
        return self.means[Metric(criterion).value]


@dataclass
class PlanProfile:
    """Accumulated profiling evidence for one plan across traversals."""

    plan: Plan
    outcomes: list[EpisodeOutcome] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    traversals: int = 0
    quality: float | None = None

    def mean_for(self, criterion: Metric) -> float:
        if not self.outcomes:
            raise EvaluationError("profile", "no successful episodes recorded")
        key = Metric(criterion).value
        return math.fsum(o.means[key] for o in self.outcomes) / len(self.outcomes)


@dataclass
class ProfileResult:
    """What a profiling run returns: the chosen plan (None when the
    search space emptied before anything was measured), the learned
    values, and the per-plan evidence."""

    plan: Plan | None
    values: ValueTable
    exit_reason: str            # converged | no_improving_plan | max_iterations | stopped
    outer_iterations: int
    profiles: dict[str, PlanProfile]
    stopped: bool = False


@dataclass
class ControlDirective:
    """What the session tells the profiling loop at an episode boundary."""

    domain: GroundedDomain | None = None   # replacement after regrounding
    cancel_plan: bool = False              # drop the current plan's remaining episodes
    stop: bool = False                     # end profiling now with the best so far


class ProfilingHooks:
    """Observation/steering points layered over the profiling loop. The
    defaults observe nothing and never interrupt."""

    def control(self) -> ControlDirective:
        return ControlDirective()

    def plan_generated(self, plan: Plan, outer_iteration: int, traversal: int) -> None:
        pass

    def episode_completed(self, plan: Plan, outcome: EpisodeOutcome) -> None:
        pass

    def plan_profiled(self, plan: Plan, quality: float, episodes: int) -> None:
        pass


def profile_pipelines(domain: GroundedDomain, evaluate, *, rl_config: RLConfig,
                      profiling_episodes: int, criterion: Metric, sample_seed=0,
                      max_outer_iterations: int = 25, values: ValueTable | None = None,
                      hooks: ProfilingHooks | None = None,
                      executor: ThreadPoolExecutor | None = None) -> ProfileResult:
    """Plan-guided profiling of the grounded pipeline space.

    Each outer iteration asks the planner for the best plan whose
    estimated quality strictly beats the previous measured quality. A
    plan identical to the one just profiled means the search has settled
    and it is returned as-is. Otherwise the plan is traversed: featurizer
    and preprocessor steps cost a fixed -1 reward, the cross-validation
    step runs profiling_episodes episodes (fresh hyper-parameters each,
    reward proportional to the mean CV metric), and every transition
    updates the value table. After the traversal the plan's measured
    quality (sum of learned average-reward values) becomes the bar the
    next plan must clear.

    Episode seeds are pre-derived from (sample_seed, plan, traversal,
    index); when an executor is given the episodes run concurrently but
    value updates are applied here in episode order, so learned values do
    not depend on worker count. hooks.control() is polled at every
    episode boundary for live steering.

    Raises EvaluationError when every grounded pipeline failed to fit.
    """
    if domain.is_empty:
        raise SearchSpaceError("grounded domain is empty")
    if values is None:
        values = ValueTable()
    if hooks is None:
        hooks = ProfilingHooks()
    criterion = Metric(criterion)

    live = domain
    profiles: dict[str, PlanProfile] = {}
    traversal_counts: dict[str, int] = {}
    dropped: set[tuple[ClassifierAlgorithm, PreprocessorAlgorithm]] = set()
    previous_key: str | None = None
    min_quality = float("-inf")
    outer = 0
    exit_reason = "max_iterations"
    stopped = False
    converged: Plan | None = None

    def apply(directive: ControlDirective, current: Plan | None) -> tuple[bool, bool]:
        """Returns (abort_current_plan, stop_everything)."""
        nonlocal live
        abort = False
        if directive.domain is not None:
            live = directive.domain
            if current is not None and (current.classifier, current.preprocessor) not in live.candidates:
                abort = True
        if directive.cancel_plan:
            abort = True
        return abort, directive.stop

    while outer < max_outer_iterations:
        _, stop = apply(hooks.control(), None)
        if stop:
            exit_reason, stopped = "stopped", True
            break
        outer += 1
        candidate = generate_plan(live.restrict(dropped), values, min_quality)
        if isinstance(candidate, NoImprovingPlan):
            exit_reason = "no_improving_plan"
            break
        plan = candidate
        key = plan.key()
        if key == previous_key:
            # The search regenerated the plan it just measured: settled.
            hooks.plan_generated(plan, outer, 0)
            converged, exit_reason = plan, "converged"
            break
        previous_key = key
        traversal = traversal_counts.get(key, 0) + 1
        traversal_counts[key] = traversal
        hooks.plan_generated(plan, outer, traversal)
        profile = profiles.setdefault(key, PlanProfile(plan=plan))
        profile.traversals = traversal
        before = len(profile.outcomes)
        aborted = False

        for state, step, next_state in plan.transitions():
            if aborted or stopped:
                break
            if step.kind in ("initfeaturizer", "initpreprocessor"):
                values.update(state, step.action(), next_state, -1.0, rl_config)
            elif step.kind == "crossvalidate":
                action = step.action()
                seeds = [stable_seed(sample_seed, key, "episode", traversal, e)
                         for e in range(profiling_episodes)]
                futures = None
                if executor is not None:
                    futures = [executor.submit(evaluate, plan, s) for s in seeds]
                for e in range(profiling_episodes):
                    abort, stop = apply(hooks.control(), plan)
                    aborted = aborted or abort
                    stopped = stopped or stop
                    if aborted or stopped:
                        if futures is not None:
                            for f in futures[e:]:
                                f.cancel()
                        break
                    outcome = futures[e].result() if futures is not None else evaluate(plan, seeds[e])
                    outcome.episode_index = e
                    outcome.traversal = traversal
                    if outcome.ok:
                        reward = rl_config.reward_scale * outcome.mean_for(criterion)
                        values.update(state, action, next_state, reward, rl_config)
                        profile.outcomes.append(outcome)
                    else:
                        profile.failures.append(outcome.error)
                    hooks.episode_completed(plan, outcome)
            # import_train and train execute directly: nothing to learn from

        if stopped:
            exit_reason = "stopped"
            break
        if aborted:
            # Cancelled or removed mid-traversal: keep partial evidence but
            # take the pair out of the running.
            dropped.add((plan.classifier, plan.preprocessor))
            continue
        if len(profile.outcomes) == before:
            # Every episode of this traversal failed; the bar is unchanged.
            dropped.add((plan.classifier, plan.preprocessor))
            continue
        quality = plan_quality(plan, values)
        profile.quality = quality
        min_quality = quality
        hooks.plan_profiled(plan, quality, len(profile.outcomes) - before)

    if converged is not None:
        return ProfileResult(plan=converged, values=values, exit_reason=exit_reason,
                             outer_iterations=outer, profiles=profiles, stopped=stopped)

    # Pick the best measured plan still inside the live search space.
    live_keys = {p.key() for p in live.restrict(dropped).plans()}
    selectable = [p for k, p in profiles.items() if k in live_keys and p.outcomes]
    if selectable:
        best = min(selectable, key=lambda p: (-p.mean_for(criterion), p.plan.lex_key()))
        return ProfileResult(plan=best.plan, values=values, exit_reason=exit_reason,
                             outer_iterations=outer, profiles=profiles, stopped=stopped)
    if not any(p.outcomes for p in profiles.values()):
        failures = sorted({msg for p in profiles.values() for msg in p.failures})
        if failures:
            raise EvaluationError(
                "profiling",
                "every grounded pipeline failed to fit: " + "; ".join(failures))
    return ProfileResult(plan=None, values=values, exit_reason=exit_reason,
                         outer_iterations=outer, profiles=profiles, stopped=stopped)


def pipeline_from_plan(plan: Plan, classifier_params: dict, preprocessor_params: dict,
                       seed: int) -> PipelineInstance:
    """Assemble a concrete pipeline from a symbolic plan plus parameter
    sets; featurizers take their defaults."""
    assignment = {col: (feat, default_params(feat))
                  for col, feat in plan.featurizer_assignment().items()}
    return PipelineInstance(
        assignment=assignment,
        preprocessor=(plan.preprocessor, preprocessor_params),
        classifier=(plan.classifier, classifier_params),
        representation=plan.representation,
        seed=seed,
    )


class PipelineEvaluator:
    """Runs profiling episodes for real: sample hyper-parameters from the
    episode seed, assemble the pipeline, cross-validate on the session
    dataset. Stateless across calls, so safe to run from worker threads."""

    def __init__(self, dataset: Dataset, folds: int):
        self.dataset = dataset
        self.folds = folds

    def episode(self, plan: Plan, seed: int) -> EpisodeOutcome:
        cparams = sample_params(plan.classifier, stable_seed(seed, "clf") % (2 ** 32))
        pparams = sample_params(plan.preprocessor, stable_seed(seed, "prep") % (2 ** 32))
        return self.episode_with_params(plan, cparams, pparams, seed)

    def episode_with_params(self, plan: Plan, classifier_params: dict,
                            preprocessor_params: dict, seed: int) -> EpisodeOutcome:
        outcome = EpisodeOutcome(plan_key=plan.key(), seed=seed,
                                 classifier_params=dict(classifier_params),
                                 preprocessor_params=dict(preprocessor_params))
        started = time.perf_counter()
        try:
            instance = pipeline_from_plan(plan, classifier_params, preprocessor_params, seed)
            result = cross_validate(instance, self.dataset, self.folds)
        except EvaluationError as exc:
            outcome.error = str(exc)
        else:
            outcome.means = dict(result.means)
            outcome.fold_scores = {m: list(v) for m, v in result.fold_scores.items()}
        outcome.wall_clock_seconds = time.perf_counter() - started
        return outcome


class _PhaseHooks(ProfilingHooks):
    """Bridges the profiling loop to a session: feedback polling, event
    emission and store writes."""

    def __init__(self, session: "Session", domain_builder):
        self.session = session
        self.domain_builder = domain_builder

    def control(self) -> ControlDirective:
        return self.session._boundary(self.domain_builder)

    def plan_generated(self, plan, outer_iteration, traversal):
        self.session._on_plan_generated(plan, outer_iteration, traversal)

    def episode_completed(self, plan, outcome):
        self.session._on_episode(plan, outcome)

    def plan_profiled(self, plan, quality, episodes):
        self.session._phase_qualities[plan.key()] = quality


class Session:
    """One training request driven through the three-phase protocol.

    All planning, value updates, store writes and event emission happen
    on the thread that calls run(); submit_feedback may be called from
    any thread and only queues. Events are appended to the journal file
    (when configured) before any subscriber callback sees them.
    """

    def __init__(self, config: SessionConfig, dataset: Dataset | None = None,
                 store: KnowledgeStore | None = None, session_id: str | None = None):
        self.config = config
        self.store = store if store is not None else KnowledgeStore()
        self.dataset = dataset if dataset is not None else self._load_dataset()
        if session_id is None:
            request = json.dumps(config.training_input.to_json_dict(), sort_keys=True)
            session_id = f"session-{stable_seed(request, config.seed):016x}"
        self.session_id = session_id
        self.evaluator = PipelineEvaluator(self.dataset, config.folds)

        self.events: list[PhaseEvent] = []
        self.phase = 0
        self.model: MachineLearningModel | None = None
        self._seq = 1
        self._subscribers: list = []
        self._journal_fh = None
        if config.out_dir is not None:
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            self.journal_path = out / "journal.ndjson"
            self._journal_fh = open(self.journal_path, "w", encoding="utf-8")
        else:
            self.journal_path = None

        self._feedback: deque[FeedbackCommand] = deque()
        self._feedback_lock = threading.Lock()
        self._feedback_counter = 0
        self._stop_phase = False
        self._stop_all = False
        self._cancel_pending = False
        self._restart_selection = False

        ti = config.training_input
        self._classifiers = sorted(set(ti.candidate_models), key=enum_rank)
        self._preprocessors = sorted(set(ti.candidate_preprocessors), key=enum_rank)
        self._overrides: dict[str, FeaturizerOverride] = {}
        for f in ti.fields:
            if f.featurizer_name:
                col = self.dataset.schema.resolve(f.name)
                if col is None:
                    raise ConfigError(f"field {f.name!r} is not a dataset column")
                self._overrides[col.name] = FeaturizerOverride(f.featurizer_name[0])
        self._phase1_queue: list[ClassifierAlgorithm] = []
        self._phase1_means: dict[ClassifierAlgorithm, dict[str, float]] = {}
        self._phase1_counts: dict[ClassifierAlgorithm, int] = {}
        self._phase_qualities: dict[str, float] = {}
        self._phase_best: float | None = None
        self._current_plan_record: str | None = None
        self._current_c0: ClassifierAlgorithm | None = None
        # Best successful evaluation seen anywhere, for early finalization:
        # (criterion mean, enum tie-break, plan, outcome)
        self._best_overall: tuple | None = None
        self._evaluation_total = 0

        self._executor: ThreadPoolExecutor | None = None
        workers = config.worker_count
        if workers is None:
            workers = os.cpu_count() or 1
        if workers > 0:
            self._executor = ThreadPoolExecutor(max_workers=workers)

    def _load_dataset(self) -> Dataset:
        ti = self.config.training_input
        overrides = {f.name: f.type for f in ti.fields if f.type is not None}
        return load_csv(ti.data_input, target_name=ti.target_name,
                        type_overrides=overrides or None)

    # ------------------------------------------------------------------ events

    def subscribe(self, callback) -> None:
        """callback(event) fires after the event is journaled."""
        self._subscribers.append(callback)

    def unsubscribe(self, callback) -> None:
        if callback in self._subscribers:
            self._subscribers.remove(callback)

    def _emit(self, kind: str, payload: dict, phase: int | None = None) -> PhaseEvent:
        event = PhaseEvent(session_id=self.session_id,
                           phase=self.phase if phase is None else phase,
                           kind=kind, payload=payload, seq=self._seq,
                           timestamp=_utc_now())
        self._seq += 1
        self.events.append(event)
        if self._journal_fh is not None:
            # Journal before emit: a subscriber must never see an event
            # that would vanish on crash-restart.
            self._journal_fh.write(json.dumps(event.to_json_dict(), sort_keys=True) + "\n")
            self._journal_fh.flush()
        for callback in list(self._subscribers):
            callback(event)
        return event

    # ---------------------------------------------------------------- feedback

    def submit_feedback(self, command: FeedbackCommand) -> dict:
        """Queue a steering command; it takes effect at the next episode
        boundary. Returns an acknowledgement carrying the feedback id that
        the later feedbackApplied event echoes."""
        with self._feedback_lock:
            self._validate_feedback(command)
            if command.feedback_id is None:
                command.feedback_id = f"fb-{self._feedback_counter}"
            self._feedback_counter += 1
            self._feedback.append(command)
        return {"status": "queued", "feedbackId": command.feedback_id,
                "sessionId": self.session_id}

    def _validate_feedback(self, command: FeedbackCommand) -> None:
        # Validate against the candidate sets as they will stand once the
        # already-queued commands apply.
        classifiers = set(self._classifiers)
        preprocessors = set(self._preprocessors)
        for queued in self._feedback:
            if queued.kind == "addClassifier":
                classifiers.add(queued.classifier)
            elif queued.kind == "removeClassifier":
                classifiers.discard(queued.classifier)
            elif queued.kind == "addPreprocessor":
                preprocessors.add(queued.preprocessor)
            elif queued.kind == "removePreprocessor":
                preprocessors.discard(queued.preprocessor)
        if command.kind == "removeClassifier":
            if command.classifier not in classifiers:
                raise ConfigError(f"classifier {command.classifier.value} is not in the session")
            if len(classifiers) == 1:
                raise ConfigError("cannot remove the last classifier: search space would be empty")
        if command.kind == "removePreprocessor":
            if command.preprocessor not in preprocessors:
                raise ConfigError(f"preprocessor {command.preprocessor.value} is not in the session")
            if len(preprocessors) == 1:
                raise ConfigError("cannot remove the last preprocessor: search space would be empty")
        if command.kind == "overrideFeaturizer":
            col = self.dataset.schema.resolve(command.column)
            if col is None:
                raise ConfigError(f"unknown column {command.column!r}")
            if command.featurizer not in DEFAULT_COMPATIBILITY.compatible[col.ftype]:
                raise ConfigError(
                    f"featurizer {command.featurizer.value} is not compatible with "
                    f"{col.ftype.value} column {col.name}")

    def _apply_feedback(self, command: FeedbackCommand) -> dict:
        diff: dict = {}
        kind = command.kind
        if kind == "addClassifier":
            if command.classifier not in self._classifiers:
                self._classifiers = sorted(set(self._classifiers) | {command.classifier}, key=enum_rank)
                if self.phase == 1 and command.classifier not in self._phase1_means:
                    self._phase1_queue.append(command.classifier)
                diff["addedClassifier"] = command.classifier.value
        elif kind == "removeClassifier":
            if command.classifier in self._classifiers:
                self._classifiers = [c for c in self._classifiers if c != command.classifier]
                self._phase1_queue = [c for c in self._phase1_queue if c != command.classifier]
                diff["removedClassifier"] = command.classifier.value
                if self.phase in (2, 3) and command.classifier == self._current_c0:
                    self._restart_selection = True
                    diff["restartsSelection"] = True
        elif kind == "addPreprocessor":
            if command.preprocessor not in self._preprocessors:
                self._preprocessors = sorted(set(self._preprocessors) | {command.preprocessor}, key=enum_rank)
                diff["addedPreprocessor"] = command.preprocessor.value
        elif kind == "removePreprocessor":
            if command.preprocessor in self._preprocessors:
                self._preprocessors = [p for p in self._preprocessors if p != command.preprocessor]
                diff["removedPreprocessor"] = command.preprocessor.value
        elif kind == "overrideFeaturizer":
            col = self.dataset.schema.resolve(command.column)
            self._overrides[col.name] = FeaturizerOverride(command.featurizer)
            diff["overriddenColumn"] = col.name
            diff["featurizer"] = command.featurizer.value
        elif kind == "cancelCurrentPipeline":
            self._cancel_pending = True
            diff["cancelled"] = True
        elif kind == "stopPhase":
            self._stop_phase = True
            diff["stoppedPhase"] = self.phase
        elif kind == "stopAll":
            self._stop_all = True
            diff["stoppedSession"] = True
        return diff

    def _boundary(self, domain_builder) -> ControlDirective:
        """Episode-boundary check: apply queued feedback, then tell the
        profiling loop how to proceed."""
        directive = ControlDirective()
        with self._feedback_lock:
            commands = list(self._feedback)
            self._feedback.clear()
        structural = False
        for command in commands:
            diff = self._apply_feedback(command)
            self._emit("feedbackApplied", {
                "feedbackId": command.feedback_id,
                "command": command.to_json_dict(),
                "diff": diff,
            })
            structural = structural or command.kind in (
                "addClassifier", "removeClassifier", "addPreprocessor",
                "removePreprocessor", "overrideFeaturizer")
        if structural and domain_builder is not None:
            directive.domain = domain_builder()
        if self._cancel_pending:
            directive.cancel_plan = True
            self._cancel_pending = False
        threshold = self.config.training_input.minimum_accuracy
        reached = (threshold is not None and self._phase_best is not None
                   and self._phase_best >= threshold)
        directive.stop = self._stop_phase or self._stop_all or self._restart_selection or reached
        return directive

    # ------------------------------------------------------------ store writes

    def _on_plan_generated(self, plan: Plan, outer_iteration: int, traversal: int) -> None:
        record = PlanRecord(session_id=self.session_id, plan=plan.to_json_dict(),
                            phase=self.phase, outer_iteration=outer_iteration)
        self._current_plan_record = self.store.record(record)
        self._emit("planGenerated", {
            "planRecordId": self._current_plan_record,
            "plan": plan.to_json_dict(),
            "planKey": plan.key(),
            "outerIteration": outer_iteration,
            "traversal": traversal,
        })

    def _on_episode(self, plan: Plan, outcome: EpisodeOutcome) -> None:
        payload = {
            "planRecordId": self._current_plan_record,
            "planKey": plan.key(),
            "episodeIndex": outcome.episode_index,
            "traversal": outcome.traversal,
            "classifier": plan.classifier.value,
            "preprocessor": plan.preprocessor.value,
            "params": {"classifier": outcome.classifier_params,
                       "preprocessor": outcome.preprocessor_params},
            "means": outcome.means,
            "error": outcome.error,
            "wallClockSeconds": outcome.wall_clock_seconds,
        }
        if outcome.ok:
            record = EvaluationRecord(
                session_id=self.session_id,
                plan_id=self._current_plan_record,
                phase=self.phase,
                classifier=plan.classifier,
                preprocessor=plan.preprocessor,
                features=[FeatureAssignment(col, feat)
                          for col, feat in plan.featurizer_assignment().items()],
                params=payload["params"],
                folds=self.config.folds,
                fold_scores=outcome.fold_scores,
                means=outcome.means,
                wall_clock_seconds=outcome.wall_clock_seconds,
                episode_index=outcome.episode_index,
            )
            payload["evaluationId"] = self.store.record(record)
            self._evaluation_total += 1
            mean = outcome.mean_for(self.config.criterion)
            if self._phase_best is None or mean > self._phase_best:
                self._phase_best = mean
            rank = (-mean, plan.lex_key())
            if self._best_overall is None or rank < self._best_overall[0]:
                self._best_overall = (rank, plan, outcome)
        self._emit("episodeCompleted", payload)

    # ---------------------------------------------------------------- phases

    def _start_phase(self, phase: int) -> None:
        self.phase = phase
        self._phase_best = None
        self._phase_qualities = {}
        self._stop_phase = False
        self._cancel_pending = False

    def _ground(self, classifiers, preprocessors) -> GroundedDomain:
        config = SearchSpaceConfig(
            candidate_classifiers=list(classifiers),
            candidate_preprocessors=list(preprocessors),
            featurizer_overrides=dict(self._overrides),
        )
        return build_domain(self.dataset.schema, config)

    def _run_phase1(self) -> ClassifierAlgorithm:
        """Profile each candidate classifier alone (no preprocessing) and
        keep the best mean validation metric."""
        self._start_phase(1)
        criterion = self.config.criterion
        self._phase1_queue = list(self._classifiers)
        failures: list[str] = []
        while self._phase1_queue:
            if self._stop_phase or self._stop_all:
                break
            classifier = self._phase1_queue.pop(0)
            self._current_c0 = classifier

            def builder(c=classifier):
                if c not in self._classifiers:
                    return self._ground_empty()
                return self._ground([c], [PreprocessorAlgorithm.noop])

            domain = builder()
            if domain.is_empty:
                failures.append(f"{classifier.value}: no grounded pipeline")
                continue
            try:
                result = profile_pipelines(
                    domain, self.evaluator.episode,
                    rl_config=self.config.rl,
                    profiling_episodes=self.config.profiling_episodes,
                    criterion=criterion,
                    sample_seed=stable_seed(self.config.seed, "phase1", classifier.value),
                    max_outer_iterations=self.config.max_outer_iterations,
                    hooks=_PhaseHooks(self, builder),
                    executor=self._executor,
                )
            except EvaluationError as exc:
                failures.append(f"{classifier.value}: {exc}")
                continue
            if classifier not in self._classifiers:
                continue    # removed by feedback mid-profiling
            measured = [p for p in result.profiles.values() if p.outcomes]
            if not measured:
                failures.append(f"{classifier.value}: no successful episodes")
                continue
            profile = measured[0]
            episode_count = len(profile.outcomes)
            self._phase1_means[classifier] = {
                m: sum(o.means[m] for o in profile.outcomes) / episode_count
                for m in profile.outcomes[0].means
            }
            self._phase1_counts[classifier] = episode_count
            self._emit("pipelineConverged", {
                "planKey": profile.plan.key(),
                "classifier": classifier.value,
                "preprocessor": PreprocessorAlgorithm.noop.value,
                "exitReason": result.exit_reason,
                "outerIterations": result.outer_iterations,
                "quality": profile.quality,
            })
            threshold = self.config.training_input.minimum_accuracy
            if threshold is not None and self._phase_best is not None \
                    and self._phase_best >= threshold:
                break
        winner = self._select_classifier()
        if winner is None:
            if not failures:
                raise EvaluationError("phase1", "stopped before any classifier was profiled")
            raise EvaluationError(
                "phase1", "all candidate classifiers failed: " + "; ".join(failures))
        self._emit("phaseCompleted", {
            "phase": 1,
            "table": self._phase1_table(),
            "winner": winner.value,
            "selectionCriteria": criterion.value,
        })
        return winner

    def _ground_empty(self) -> GroundedDomain:
        return GroundedDomain(schema=self.dataset.schema, assignment=(),
                              representation="dense", candidates=())

    def _phase1_table(self) -> list[dict]:
        return [{
            "classifier": c.value,
            "episodes": self._phase1_counts[c],
            "means": dict(self._phase1_means[c]),
        } for c in sorted(self._phase1_means, key=enum_rank)]

    def _select_classifier(self) -> ClassifierAlgorithm | None:
        """Best profiled classifier still in the candidate set; ties go to
        the first in canonical order."""
        criterion = self.config.criterion.value
        best = None
        for c in sorted(self._phase1_means, key=enum_rank):
            if c not in self._classifiers:
                continue
            mean = self._phase1_means[c][criterion]
            if best is None or mean > best[1]:
                best = (c, mean)
        return best[0] if best else None

    def _run_phase2(self, chosen: ClassifierAlgorithm) -> Plan | None:
        """Fix the classifier, search the preprocessor space until the
        generated plan settles. Returns None when the chosen classifier
        was removed mid-phase (selection restarts)."""
        self._start_phase(2)
        self._current_c0 = chosen

        def builder(c=chosen):
            if c not in self._classifiers:
                return self._ground_empty()
            return self._ground([c], self._preprocessors)

        result = profile_pipelines(
            builder(), self.evaluator.episode,
            rl_config=self.config.rl,
            profiling_episodes=self.config.profiling_episodes,
            criterion=self.config.criterion,
            sample_seed=stable_seed(self.config.seed, "phase2", chosen.value),
            max_outer_iterations=self.config.max_outer_iterations,
            hooks=_PhaseHooks(self, builder),
            executor=self._executor,
        )
        if self._restart_selection:
            return None
        if result.plan is None:
            if self._stop_all:
                # stopped before anything was measured this phase; the
                # caller finalizes from the best evidence on record
                return None
            raise EvaluationError("phase2", "no viable pipeline plan survived profiling")
        self._emit("pipelineConverged", {
            "planKey": result.plan.key(),
            "classifier": result.plan.classifier.value,
            "preprocessor": result.plan.preprocessor.value,
            "exitReason": result.exit_reason,
            "outerIterations": result.outer_iterations,
            "quality": self._phase_qualities.get(result.plan.key()),
        })
        table = [{
            "preprocessor": p.plan.preprocessor.value,
            "episodes": len(p.outcomes),
            "means": {m: sum(o.means[m] for o in p.outcomes) / len(p.outcomes)
                      for m in p.outcomes[0].means},
            "quality": p.quality,
        } for p in sorted((p for p in result.profiles.values() if p.outcomes),
                          key=lambda p: p.plan.lex_key())]
        self._emit("phaseCompleted", {
            "phase": 2,
            "table": table,
            "winner": result.plan.preprocessor.value,
            "planKey": result.plan.key(),
            "exitReason": result.exit_reason,
        })
        return result.plan

    def _sweep_settings(self, plan: Plan) -> list[tuple[dict, dict]]:
        """The hyper-parameter settings phase 3 will evaluate, in order."""
        budget = self.config.search_episodes
        if self.config.sweep_mode == "grid":
            settings = [(dict(c), dict(p))
                        for c in grid_points(plan.classifier)
                        for p in grid_points(plan.preprocessor)]
            return settings[:budget]
        settings = []
        for e in range(budget):
            seed = stable_seed(self.config.seed, "phase3", plan.key(), e)
            settings.append((
                sample_params(plan.classifier, stable_seed(seed, "clf") % (2 ** 32)),
                sample_params(plan.preprocessor, stable_seed(seed, "prep") % (2 ** 32)),
            ))
        return settings

    def _run_phase3(self, plan: Plan) -> MachineLearningModel | None:
        """Sweep hyper-parameters on the winning shape, fit the best
        setting on all rows, record the model. Returns None when the
        classifier was removed mid-phase (selection restarts)."""
        self._start_phase(3)
        criterion = self.config.criterion
        self._on_plan_generated(plan, 0, 1)
        plan_record = self._current_plan_record
        best: tuple | None = None   # (mean, order, outcome)
        threshold = self.config.training_input.minimum_accuracy
        for e, (cparams, pparams) in enumerate(self._sweep_settings(plan)):
            directive = self._boundary(None)
            if self._restart_selection:
                return None
            if directive.stop or directive.cancel_plan:
                break
            seed = stable_seed(self.config.seed, "phase3", plan.key(), "episode", e)
            outcome = self.evaluator.episode_with_params(plan, cparams, pparams, seed)
            outcome.episode_index = e
            self._on_episode(plan, outcome)
            if outcome.ok:
                mean = outcome.mean_for(criterion)
                if best is None or mean > best[0]:
                    best = (mean, e, outcome)
                if threshold is not None and mean >= threshold:
                    break
        if self._restart_selection:
            return None
        if best is None:
            # The sweep produced nothing (all settings failed, or a stop
            # arrived first); fall back to the best evidence on record.
            if self._best_overall is None:
                raise EvaluationError("phase3", "no successful parameter evaluation")
            _, plan, outcome = self._best_overall
        else:
            outcome = best[2]
        model = self._fit_and_record(plan, outcome, plan_record)
        self._emit("phaseCompleted", {
            "phase": 3,
            "episodes": sum(1 for ev in self.events
                            if ev.phase == 3 and ev.kind == "episodeCompleted"),
            "best": {"params": {"classifier": outcome.classifier_params,
                                "preprocessor": outcome.preprocessor_params},
                     "means": outcome.means},
            "modelId": model.id,
        })
        return model

    def _fit_and_record(self, plan: Plan, outcome: EpisodeOutcome,
                        plan_record_id: str | None) -> MachineLearningModel:
        """Train the chosen setting on the full dataset, persist the
        artifact and the model record."""
        instance = pipeline_from_plan(plan, outcome.classifier_params,
                                      outcome.preprocessor_params,
                                      stable_seed(self.config.seed, "final") % (2 ** 32))
        started = time.perf_counter()
        artifact = fit_final(instance, self.dataset)
        elapsed = time.perf_counter() - started
        artifact_path = None
        if self.config.out_dir is not None:
            artifact_path = str(Path(self.config.out_dir) / "model.json")
            artifact.save(artifact_path)
        labels = [Label(value=str(v)) for v in artifact.fitted_state["labels"]]
        model = MachineLearningModel(
            algorithm=plan.classifier,
            preprocessor=plan.preprocessor,
            accuracy=outcome.means["accuracy"],
            features=[FeatureAssignment(col, feat)
                      for col, feat in plan.featurizer_assignment().items()],
            hyperparameters={"classifier": outcome.classifier_params,
                             "preprocessor": outcome.preprocessor_params},
            saved=artifact_path is not None,
            time_to_learn_in_seconds=elapsed,
            labels=labels,
            session_id=self.session_id,
            plan_id=plan_record_id,
            artifact_path=artifact_path,
        )
        model.id = self.store.record(model)
        self.artifact = artifact
        return model

    def _finalize_best(self) -> MachineLearningModel:
        """Early completion: train the best evaluation seen so far."""
        if self._best_overall is None:
            raise EvaluationError("session", "stopped before any successful evaluation")
        _, plan, outcome = self._best_overall
        return self._fit_and_record(plan, outcome, self._current_plan_record)

    # ------------------------------------------------------------------ run

    def run(self) -> MachineLearningModel:
        """Drive the session to completion and return the trained model."""
        try:
            self.config.training_input.id = self.store.record(self.config.training_input)
            chosen = self._run_phase1()
            model = None
            if self._stop_all:
                model = self._finalize_best()
            while model is None:
                self._restart_selection = False
                plan = self._run_phase2(chosen)
                if self._stop_all:
                    model = self._finalize_best()
                    break
                if plan is None or self._restart_selection:
                    chosen = self._reselect_or_fail()
                    continue
                model = self._run_phase3(plan)
                if model is None:
                    chosen = self._reselect_or_fail()
                    continue
            self.model = model
            self._emit("sessionCompleted", {
                "modelId": model.id,
                "algorithm": model.algorithm.value,
                "preprocessor": model.preprocessor.value,
                "accuracy": model.accuracy,
                "selectionCriteria": self.config.criterion.value,
                "totalEvaluations": self._evaluation_total,
                "stoppedEarly": self._stop_all,
            }, phase=0)
            return model
        except Exception as exc:
            self._emit("error", {"message": str(exc)}, phase=0)
            raise
        finally:
            self.close()

    def _reselect_or_fail(self) -> ClassifierAlgorithm:
        self._restart_selection = False
        winner = self._select_classifier()
        if winner is None:
            raise EvaluationError("session", "no candidate classifier remains with "
                                             "profiling results to restart from")
        return winner

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=False, cancel_futures=True)
            self._executor = None
        if self._journal_fh is not None:
            self._journal_fh.close()
            self._journal_fh = None


def run_session(config: SessionConfig, dataset: Dataset | None = None,
                store: KnowledgeStore | None = None,
                session_id: str | None = None) -> tuple[Session, MachineLearningModel]:
    """Convenience wrapper: build a session, run it, return both."""
    session = Session(config, dataset=dataset, store=store, session_id=session_id)
    model = session.run()
    return session, model
