"""Drive the HTTP interface in-process: train, stream events, classify.

Uses the test client so no port is needed; to serve for real run
`uvicorn pipesearch.api:create_app --factory --port 8000` and point any
HTTP client at the same routes.

    python3 demos/http_service.py
"""

import json
import random
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from pipesearch.api import TrainingService, create_app


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
    out = Path(tempfile.mkdtemp(prefix="http-demo-"))
    csv_path = write_blobs(out / "blobs.csv")
    client = TestClient(create_app(TrainingService(journal_dir=out / "journal")))

    handle = client.post("/mutation/trainClassifier", json={
        "targetName": "label",
        "dataInput": str(csv_path),
        "folds": 3,
        "candidateModels": ["gaussian_nb_classifier", "logistic_classifier"],
        "candidatePreprocessors": ["noop"],
        "modelProfilingEpisode": 3,
        "modelSearchEpisode": 5,
        "seed": 7,
    }).json()
    print(f"job accepted: {handle['jobId']} (state {handle['state']})")

    done = client.get(f"/query/awaitJob/{handle['jobId']}",
                      params={"timeoutSeconds": 120}).json()
    print(f"job finished: state {done['state']}")

    kinds = {}
    with client.stream("GET", f"/subscription/events/{handle['jobId']}") as resp:
        for line in resp.iter_lines():
            if line.startswith("data: "):
                kinds.setdefault(json.loads(line[6:])["kind"], 0)
                kinds[json.loads(line[6:])["kind"]] += 1
    print(f"event stream: {kinds}")

    best = client.get(f"/query/bestModel/{handle['sessionId']}").json()
    print(f"best model: {best['algorithm']} accuracy {best['accuracy']:.4f}")

    scored = client.post("/query/classifyInstances", json={
        "modelId": best["id"],
        "data": [{"x1": 2.1, "x2": 1.9}, {"x1": -2.0, "x2": -2.2}],
    }).json()
    for row, label in zip([(2.1, 1.9), (-2.0, -2.2)], scored["labels"]):
        print(f"classify {row}: {label['value']} "
              f"(confidence {label['confidence']:.3f})")


if __name__ == "__main__":
    main()
