"""Tests for report assembly, determinism and rendering."""

import json

import pytest

from pipesearch.orchestrator import Session
from pipesearch.report import build_report, render_markdown, write_report

from test_orchestrator import make_config, write_blob_csv


def run_blob_session(tmp_path, name="out"):
    csv_path = tmp_path / "blob.csv"
    if not csv_path.exists():
        write_blob_csv(csv_path)
    config = make_config(csv_path, out_dir=tmp_path / name)
    events = []
    session = Session(config)
    session.subscribe(events.append)
    model = session.run()
    return events, model


@pytest.fixture(scope="module")
def finished(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("report")
    events, model = run_blob_session(tmp)
    report = build_report(events, model)
    return tmp, events, model, report


class TestBuildReport:
    def test_structure(self, finished):
        _, events, model, report = finished
        assert set(report["phases"]) == {"1", "2", "3"}
        for phase in ("1", "2"):
            block = report["phases"][phase]
            assert block["summary"] is not None
            assert block["episodes"]
        assert report["outcome"]["totalEvaluations"] > 0
        assert report["model"]["algorithm"] == model.algorithm.value
        assert report["sessionId"] == events[0].session_id

    def test_volatile_fields_stripped(self, finished):
        tmp, _, _, report = finished
        text = json.dumps(report)
        assert "wallClockSeconds" not in text
        assert "timestamp" not in text
        assert "modelId" not in report.get("outcome", {})
        assert str(tmp) not in text

    def test_same_seed_rebuild_is_byte_identical(self, finished):
        # same dataset path and seed: the report must not differ by a byte
        tmp, _, _, report = finished
        events, model = run_blob_session(tmp, "again")
        again = build_report(events, model)
        assert json.dumps(report, sort_keys=True) == \
            json.dumps(again, sort_keys=True)


class TestRender:
    def test_markdown_sections(self, finished):
        _, _, model, report = finished
        md = render_markdown(report)
        assert "## Phase 1: classifier selection" in md
        assert "## Phase 2: preprocessor search" in md
        assert "## Phase 3: hyper-parameter sweep" in md
        assert "Winner: `" in md
        assert f"Final model: `{model.algorithm.value}`" in md

    def test_handles_empty_session(self):
        report = build_report([], None)
        md = render_markdown(report)
        assert "No phase 1 results recorded." in md
        assert "No final model was produced." in md

    def test_write_report_round_trip(self, finished, tmp_path):
        _, _, _, report = finished
        json_path, md_path = write_report(report, tmp_path / "written")
        assert json.loads(json_path.read_text()) == report
        assert md_path.read_text() == render_markdown(report)
