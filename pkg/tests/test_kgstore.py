import json

import pytest

from pipesearch.enums import ClassifierAlgorithm, FeaturizerAlgorithm, Metric, PreprocessorAlgorithm
from pipesearch.errors import InvariantViolation, NoEvaluations, UnknownSession
from pipesearch.kgstore import (
    DEFAULT_CANDIDATE_MODELS,
    DEFAULT_CANDIDATE_PREPROCESSORS,
    EvaluationRecord,
    FeatureAssignment,
    FieldInput,
    KnowledgeStore,
    Label,
    MachineLearningModel,
    PlanRecord,
    TrainingInput,
)

C = ClassifierAlgorithm
P = PreprocessorAlgorithm


def plan_record(session="sess-1"):
    return PlanRecord(session_id=session, phase=1,
                      plan={"steps": [], "estimatedQuality": 0.0})


def evaluation(session="sess-1", plan_id="plan-0001", classifier=C.logistic_classifier,
               accuracy=0.91, episode=0, folds=10, preprocessor=P.noop, params=None):
    scores = [accuracy] * folds
    return EvaluationRecord(
        session_id=session,
        plan_id=plan_id,
        phase=1,
        classifier=classifier,
        preprocessor=preprocessor,
        features=[FeatureAssignment("field_age", FeaturizerAlgorithm.min_max_scaler)],
        params=params or {"C": 1.0},
        folds=folds,
        fold_scores={"accuracy": scores},
        means={"accuracy": sum(scores) / folds},
        wall_clock_seconds=0.5,
        episode_index=episode,
    )


class TestRecordAndFetch:
    def test_first_evaluation_gets_ev_0001(self):
        store = KnowledgeStore()
        store.record(plan_record())
        assert store.record(evaluation()) == "ev-0001"

    def test_fold_count_mismatch_rejected(self):
        store = KnowledgeStore()
        store.record(plan_record())
        with pytest.raises(InvariantViolation, match="fold count mismatch"):
            store.record(EvaluationRecord(
                session_id="sess-1", plan_id="plan-0001", phase=1,
                classifier=C.logistic_classifier, preprocessor=P.noop,
                features=[], params={}, folds=10,
                fold_scores={"accuracy": [0.9] * 9},
                means={"accuracy": 0.9},
                wall_clock_seconds=0.1, episode_index=0))

    def test_mean_must_match_fold_average(self):
        with pytest.raises(InvariantViolation, match="mean"):
            EvaluationRecord(
                session_id="sess-1", plan_id="plan-0001", phase=1,
                classifier=C.logistic_classifier, preprocessor=P.noop,
                features=[], params={}, folds=2,
                fold_scores={"accuracy": [0.8, 0.9]},
                means={"accuracy": 0.8},
                wall_clock_seconds=0.1, episode_index=0)

    def test_model_record_round_trips(self):
        store = KnowledgeStore()
        model = MachineLearningModel(
            algorithm=C.logistic_classifier,
            preprocessor=P.noop,
            accuracy=0.927,
            features=[FeatureAssignment("field_w", FeaturizerAlgorithm.hashing_vectorizer)],
            hyperparameters={"norm": "l2", "C": 1.0},
            labels=[Label("spam", 0.98), Label("ham")],
        )
        model_id = store.record(model)
        fetched = store.fetch(model_id)
        assert fetched == model
        assert fetched.accuracy == 0.927

    def test_evaluation_requires_recorded_plan(self):
        store = KnowledgeStore()
        with pytest.raises(InvariantViolation, match="planId"):
            store.record(evaluation(plan_id="plan-9999"))

    def test_accuracy_bounds_enforced(self):
        with pytest.raises(InvariantViolation, match="accuracy"):
            MachineLearningModel(algorithm=C.logistic_classifier,
                                 preprocessor=P.noop, accuracy=1.2)

    def test_negative_learning_time_rejected(self):
        with pytest.raises(InvariantViolation, match="timeToLearnInSeconds"):
            MachineLearningModel(algorithm=C.logistic_classifier, preprocessor=P.noop,
                                 accuracy=0.5, time_to_learn_in_seconds=-1.0)

    def test_label_confidence_bounds(self):
        with pytest.raises(InvariantViolation):
            Label("spam", confidence=1.5)

    def test_round_trip_field_by_field(self):
        store = KnowledgeStore()
        store.record(plan_record())
        record = evaluation(accuracy=0.77, episode=3)
        rid = store.record(record)
        fetched = store.fetch(rid)
        assert fetched.to_json_dict() == record.to_json_dict()


class TestQueries:
    def _seed(self, store):
        pid = store.record(plan_record())
        store.record(evaluation(plan_id=pid, classifier=C.logistic_classifier,
                                accuracy=0.85, episode=0))
        store.record(evaluation(plan_id=pid, classifier=C.random_forest_classifier,
                                accuracy=0.91, episode=1))
        return pid

    def test_best_model_is_argmax(self):
        store = KnowledgeStore()
        self._seed(store)
        best = store.query_best_model("sess-1", Metric.accuracy)
        assert best.algorithm is C.random_forest_classifier
        assert best.accuracy == pytest.approx(0.91)

    def test_ties_break_to_earliest_record(self):
        store = KnowledgeStore()
        pid = store.record(plan_record())
        store.record(evaluation(plan_id=pid, classifier=C.sgd_classifier,
                                accuracy=0.9, episode=0))
        store.record(evaluation(plan_id=pid, classifier=C.gaussian_nb_classifier,
                                accuracy=0.9, episode=1))
        best = store.query_best_model("sess-1", Metric.accuracy)
        assert best.algorithm is C.sgd_classifier

    def test_best_model_equals_brute_force_scan(self):
        store = KnowledgeStore()
        self._seed(store)
        best = store.query_best_model("sess-1", Metric.accuracy)
        scan = max(store.query_evaluations("sess-1"),
                   key=lambda r: r.mean_for(Metric.accuracy))
        assert best.algorithm is scan.classifier
        assert best.accuracy == pytest.approx(scan.mean_for(Metric.accuracy))

    def test_no_evaluations_error(self):
        store = KnowledgeStore()
        store.record(plan_record())   # session known, but no evaluations
        with pytest.raises(NoEvaluations):
            store.query_best_model("sess-1", Metric.accuracy)

    def test_recorded_model_enriches_best(self):
        store = KnowledgeStore()
        pid = store.record(plan_record())
        store.record(evaluation(plan_id=pid, classifier=C.logistic_classifier,
                                accuracy=0.91, episode=0, params={"C": 2.0}))
        model = MachineLearningModel(
            algorithm=C.logistic_classifier, preprocessor=P.noop, accuracy=0.91,
            hyperparameters={"C": 2.0}, saved=True, session_id="sess-1",
            artifact_path="/tmp/model.json")
        store.record(model)
        best = store.query_best_model("sess-1", Metric.accuracy)
        assert best.saved is True
        assert best.artifact_path == "/tmp/model.json"

    def test_query_evaluations_filters_and_orders(self):
        store = KnowledgeStore()
        pid = store.record(plan_record())
        store.record(evaluation(plan_id=pid, classifier=C.sgd_classifier, episode=2))
        store.record(evaluation(plan_id=pid, classifier=C.sgd_classifier, episode=0))
        store.record(evaluation(plan_id=pid, classifier=C.logistic_classifier, episode=1))
        got = store.query_evaluations("sess-1", classifier=C.sgd_classifier)
        assert [r.episode_index for r in got] == [0, 2]
        assert store.query_evaluations("sess-1", classifier=C.linear_svc_classifier) == []
        assert len(store.query_evaluations("sess-1")) == 3

    def test_unknown_session_raises(self):
        store = KnowledgeStore()
        with pytest.raises(UnknownSession):
            store.query_evaluations("nope")


class TestJournal:
    def test_persists_and_replays(self, tmp_path):
        path = tmp_path / "journal.ndjson"
        store = KnowledgeStore(path)
        pid = store.record(plan_record())
        eid = store.record(evaluation(plan_id=pid))

        lines = [json.loads(l) for l in path.read_text().splitlines()]
        assert {l["kind"] for l in lines} == {"plan", "evaluation"}

        reloaded = KnowledgeStore(path)
        assert reloaded.fetch(eid).to_json_dict() == store.fetch(eid).to_json_dict()
        assert reloaded.query_best_model("sess-1", Metric.accuracy).accuracy == pytest.approx(0.91)

    def test_id_counters_continue_after_replay(self, tmp_path):
        path = tmp_path / "journal.ndjson"
        store = KnowledgeStore(path)
        store.record(plan_record())
        reloaded = KnowledgeStore(path)
        assert reloaded.record(plan_record()) == "plan-0002"

    def test_rerecord_same_id_appends_new_version(self, tmp_path):
        path = tmp_path / "journal.ndjson"
        store = KnowledgeStore(path)
        model = MachineLearningModel(algorithm=C.logistic_classifier,
                                     preprocessor=P.noop, accuracy=0.5)
        mid = store.record(model)
        updated = MachineLearningModel(algorithm=C.logistic_classifier,
                                       preprocessor=P.noop, accuracy=0.6,
                                       saved=True, id=mid)
        store.record(updated)
        assert store.fetch(mid).accuracy == 0.6
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        versions = [json.loads(l)["version"] for l in lines]
        assert versions == [1, 2]
        reloaded = KnowledgeStore(path)
        assert reloaded.fetch(mid).saved is True


class TestTrainingInput:
    def test_candidates_default_when_omitted(self):
        ti = TrainingInput(target_name="y", data_input="d.csv")
        assert ti.candidate_models == DEFAULT_CANDIDATE_MODELS
        assert ti.candidate_preprocessors == DEFAULT_CANDIDATE_PREPROCESSORS

    def test_explicit_empty_candidates_rejected(self):
        with pytest.raises(InvariantViolation, match="candidateModels"):
            TrainingInput(target_name="y", data_input="d.csv", candidate_models=[])
        with pytest.raises(InvariantViolation, match="candidatePreprocessors"):
            TrainingInput(target_name="y", data_input="d.csv",
                          candidate_preprocessors=[])

    def test_minimum_accuracy_bounds(self):
        with pytest.raises(InvariantViolation, match="minimumAccuracy"):
            TrainingInput(target_name="y", data_input="d.csv", minimum_accuracy=2.0)

    def test_field_override_length_rule(self):
        with pytest.raises(InvariantViolation, match="featurizerName"):
            FieldInput(name="age", featurizer_name=[
                FeaturizerAlgorithm.std_scaler, FeaturizerAlgorithm.robust_scaler])

    def test_json_round_trip(self):
        ti = TrainingInput(
            target_name="salary",
            data_input="adult.csv",
            fields=[FieldInput("age", featurizer_name=[FeaturizerAlgorithm.robust_scaler])],
            folds=5,
            selection_criteria=Metric.f1,
            candidate_models=[C.logistic_classifier],
            candidate_preprocessors=[P.noop, P.pca],
            minimum_accuracy=0.9,
        )
        restored = TrainingInput.from_json_dict(ti.to_json_dict())
        assert restored.to_json_dict() == ti.to_json_dict()
