"""Steer a live search: veto the leading classifier mid-run and watch the pivot.

The dataset is built so that the two candidate classifiers disagree
strongly: the label depends on the difference of two highly correlated
columns, which a linear model separates cleanly while a
diagonal-covariance generative model sits near chance. Phase 1 therefore
picks the logistic classifier; the moment phase 2 proposes its first
plan, this script submits removeClassifier for it, and the session pivots
to the runner-up without re-profiling.

    python3 demos/steering.py
"""

import random
import tempfile
from pathlib import Path

from pipesearch.enums import ClassifierAlgorithm, PreprocessorAlgorithm
from pipesearch.kgstore import TrainingInput
from pipesearch.orchestrator import FeedbackCommand, Session, SessionConfig


def write_correlated(path: Path, rows: int = 160, seed: int = 11) -> Path:
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x1,x2,label\n")
        for _ in range(rows):
            base = rng.gauss(0, 1.0)
            x1 = base + rng.gauss(0, 0.15)
            x2 = base + rng.gauss(0, 0.15)
            label = "hi" if x1 - x2 > 0 else "lo"
            fh.write("%.4f,%.4f,%s\n" % (x1, x2, label))
    return path


def main() -> None:
    out = Path(tempfile.mkdtemp(prefix="steering-"))
    csv_path = write_correlated(out / "corr.csv")

    training = TrainingInput(
        target_name="label",
        data_input=str(csv_path),
        folds=3,
        candidate_models=[ClassifierAlgorithm.gaussian_nb_classifier,
                          ClassifierAlgorithm.logistic_classifier],
        candidate_preprocessors=[PreprocessorAlgorithm.noop,
                                 PreprocessorAlgorithm.pca],
        model_profiling_episode=3,
        model_search_episode=4,
    )
    config = SessionConfig(training_input=training, seed=3, worker_count=0,
                           out_dir=out / "run")
    session = Session(config)
    vetoed = []

    def watch(event):
        if event.kind == "phaseCompleted" and event.payload["phase"] == 1:
            print(f"phase 1 winner: {event.payload['winner']}")
        if event.kind == "planGenerated" and event.phase == 2 and not vetoed:
            leader = event.payload["plan"]["classifier"]
            vetoed.append(leader)
            print(f"phase 2 proposes {leader}; submitting removeClassifier")
            session.submit_feedback(FeedbackCommand(
                "removeClassifier", classifier=ClassifierAlgorithm(leader)))
        if event.kind == "feedbackApplied":
            print(f"feedback applied: {event.payload['diff']}")

    session.subscribe(watch)
    model = session.run()
    print(f"\nfinal model: {model.algorithm.value} "
          f"(accuracy {model.accuracy:.4f}) despite "
          f"{vetoed[0]} leading phase 1")


if __name__ == "__main__":
    main()
