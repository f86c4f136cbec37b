"""Deterministic session reports.

The JSON report is rebuilt purely from journaled events plus the final
model record, with every volatile field (timestamps, wall-clock timings,
filesystem paths) stripped, so two runs with the same configuration and
seed produce byte-identical files. The Markdown rendering shows the three
phase tables and ends with one line naming the winning pipeline and its
mean cross-validation accuracy.
"""

from __future__ import annotations

import json
from pathlib import Path

from .kgstore import MachineLearningModel
from .orchestrator import PhaseEvent

__all__ = ["build_report", "render_markdown", "write_report"]


def _episode_rows(events: list[PhaseEvent], phase: int) -> list[dict]:
    rows = []
    for event in events:
        if event.phase != phase or event.kind != "episodeCompleted":
            continue
        p = event.payload
        rows.append({
            "planKey": p.get("planKey"),
            "classifier": p.get("classifier"),
            "preprocessor": p.get("preprocessor"),
            "episodeIndex": p.get("episodeIndex"),
            "traversal": p.get("traversal"),
            "means": p.get("means"),
            "error": p.get("error"),
        })
    return rows


def _phase_summary(events: list[PhaseEvent], phase: int) -> dict | None:
    for event in events:
        if event.kind == "phaseCompleted" and event.payload.get("phase") == phase:
            payload = dict(event.payload)
            payload.pop("modelId", None)
            return payload
    return None


def build_report(events: list[PhaseEvent], model: MachineLearningModel | None) -> dict:
    """Assemble the session report from journaled events and the model."""
    session_ids = {e.session_id for e in events}
    completed = next((e for e in events if e.kind == "sessionCompleted"), None)
    report: dict = {
        "sessionId": sorted(session_ids)[0] if session_ids else None,
        "phases": {},
    }
    for phase in (1, 2, 3):
        summary = _phase_summary(events, phase)
        episodes = _episode_rows(events, phase)
        if summary is None and not episodes:
            continue
        report["phases"][str(phase)] = {
            "summary": summary,
            "episodes": episodes,
        }
    if completed is not None:
        payload = dict(completed.payload)
        payload.pop("modelId", None)
        report["outcome"] = payload
    if model is not None:
        report["model"] = {
            "algorithm": model.algorithm.value,
            "preprocessor": model.preprocessor.value,
            "hyperparameters": model.hyperparameters,
            "accuracy": model.accuracy,
            "features": [f.to_json_dict() for f in model.features],
            "labels": [l.value for l in model.labels],
            "saved": model.saved,
        }
    return report


def _means_columns(rows: list[dict]) -> list[str]:
    names: list[str] = []
    for row in rows:
        for m in row.get("means", {}) or {}:
            if m not in names:
                names.append(m)
    return names


def _table(headers: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(headers) + " |",
             "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def render_markdown(report: dict) -> str:
    """Human-readable report: one table per phase plus the final verdict."""
    out = ["# Pipeline search report", ""]
    phases = report.get("phases", {})

    p1 = phases.get("1", {}).get("summary")
    out.append("## Phase 1: classifier selection")
    out.append("")
    if p1 and p1.get("table"):
        metric_names = _means_columns(p1["table"])
        rows = [[row["classifier"], str(row["episodes"])] +
                [_fmt(row["means"].get(m)) for m in metric_names]
                for row in p1["table"]]
        out.append(_table(["classifier", "episodes"] + metric_names, rows))
        out.append("")
        out.append(f"Winner: `{p1['winner']}` by {p1.get('selectionCriteria', 'accuracy')}.")
    else:
        out.append("No phase 1 results recorded.")
    out.append("")

    p2 = phases.get("2", {}).get("summary")
    out.append("## Phase 2: preprocessor search")
    out.append("")
    if p2 and p2.get("table"):
        metric_names = _means_columns(p2["table"])
        rows = [[row["preprocessor"], str(row["episodes"])] +
                [_fmt(row["means"].get(m)) for m in metric_names] +
                [_fmt(row.get("quality"))]
                for row in p2["table"]]
        out.append(_table(["preprocessor", "episodes"] + metric_names + ["quality"], rows))
        out.append("")
        out.append(f"Winning preprocessor: `{p2['winner']}`.")
    else:
        out.append("No phase 2 results recorded.")
    out.append("")

    p3 = phases.get("3", {}).get("summary")
    out.append("## Phase 3: hyper-parameter sweep")
    out.append("")
    if p3:
        out.append(f"Evaluated {p3.get('episodes', 0)} parameter settings.")
        best = p3.get("best") or {}
        if best.get("means"):
            metric_names = sorted(best["means"])
            out.append("")
            out.append(_table(["setting"] + metric_names,
                              [["best"] + [_fmt(best["means"][m]) for m in metric_names]]))
            out.append("")
            out.append("Best parameters: `" + json.dumps(best.get("params", {}), sort_keys=True) + "`")
    else:
        out.append("No phase 3 results recorded.")
    out.append("")

    model = report.get("model")
    if model is not None:
        out.append(
            f"Final model: `{model['algorithm']}` with `{model['preprocessor']}` "
            f"preprocessing. Mean cross-validation accuracy: {model['accuracy']:.4f}.")
    else:
        out.append("No final model was produced.")
    out.append("")
    return "\n".join(out)


def write_report(report: dict, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.json (stable key order) and report.md; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    md_path = out / "report.md"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    with open(md_path, "w", encoding="utf-8") as fh:
        fh.write(render_markdown(report))
    return json_path, md_path
