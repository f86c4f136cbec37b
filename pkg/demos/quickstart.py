"""Smallest end-to-end run: synthesize a toy table, search it, print the report.

Generates 200 rows of two gaussian blobs, runs the three-phase search with
two candidate classifiers, and prints the rendered markdown report plus the
location of the saved model artifact. Finishes in a few seconds.

    python3 demos/quickstart.py
"""

import random
import tempfile
from pathlib import Path

from pipesearch.enums import ClassifierAlgorithm, PreprocessorAlgorithm
from pipesearch.kgstore import TrainingInput
from pipesearch.orchestrator import SessionConfig, load_journal, run_session
from pipesearch.report import build_report, render_markdown


def write_blobs(path: Path, rows: int = 200, seed: int = 5) -> Path:
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x1,x2,label\n")
        for i in range(rows):
            label = "pos" if i % 2 == 0 else "neg"
            c = 2.0 if label == "pos" else -2.0
            fh.write("%.4f,%.4f,%s\n" % (c + rng.gauss(0, 0.6),
                                         c + rng.gauss(0, 0.6), label))
    return path


def main() -> None:
    out = Path(tempfile.mkdtemp(prefix="quickstart-"))
    csv_path = write_blobs(out / "blobs.csv")

    training = TrainingInput(
        target_name="label",
        data_input=str(csv_path),
        folds=3,
        candidate_models=[ClassifierAlgorithm.gaussian_nb_classifier,
                          ClassifierAlgorithm.logistic_classifier],
        candidate_preprocessors=[PreprocessorAlgorithm.noop],
        model_profiling_episode=3,
        model_search_episode=5,
    )
    config = SessionConfig(training_input=training, seed=7, out_dir=out / "run")
    session, model = run_session(config)

    report = build_report(load_journal(session.journal_path), model)
    print(render_markdown(report))
    print(f"\nmodel artifact: {model.artifact_path}")
    print(f"journal:        {session.journal_path}")


if __name__ == "__main__":
    main()
