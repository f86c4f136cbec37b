"""Deterministic synthetic benchmark datasets.

Offline stand-ins for two classic tabular benchmarks, matched in shape
and difficulty so end-to-end runs exercise realistic sizes without
network access: a spam-detection table (4601 rows, 57 numeric word/char
frequency columns, binary label) and a car-rating table (the full 1728-row
cartesian product of 6 categorical attributes with a rule-based label).

Generation is seeded and reproducible: the same seed always writes the
same bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["make_spam_dataset", "make_car_dataset"]

SPAM_ROWS = 4601
SPAM_FEATURES = 57
_SPAM_INFORMATIVE = 35


def make_spam_dataset(path: str | Path, seed: int = 20240611) -> Path:
    """Write a 4601x57 numeric table with a binary spam/ham label.

    The label is a noisy linear signal over 35 correlated frequency
    columns (a shared topic factor makes them correlated, which an
    independence-assuming classifier handles poorly); the remaining 22
    columns are sparse nuisance frequencies. Roughly 40% of rows are
    spam.
    """
    rng = np.random.default_rng(seed)
    n, d, k = SPAM_ROWS, SPAM_FEATURES, _SPAM_INFORMATIVE

    # shared factor rho=0.5 induces equicorrelation among informative cols
    factor = rng.standard_normal((n, 1))
    Z = np.sqrt(0.5) * factor + np.sqrt(0.5) * rng.standard_normal((n, k))

    # few strong positive weights, many weak negative ones: marginal
    # correlations with the label are then positive for every column,
    # which misleads models that ignore the correlation structure
    w = np.where(np.arange(k) < 8, 2.6, -0.7)
    score = Z @ w / np.sqrt(float(k))
    noise = rng.normal(0.0, 0.15, n)
    threshold = np.quantile(score + noise, 0.6)    # ~40% spam like the original
    y = (score + noise > threshold).astype(int)

    X = np.empty((n, d))
    X[:, :k] = Z + 3.0
    # nuisance frequencies are sparse and heavy tailed (rare huge bursts),
    # like raw token counts
    nuisance = np.abs(rng.standard_normal((n, d - k)))
    nuisance *= np.where(rng.random((n, d - k)) < 0.01, 100.0, 1.0)
    X[:, k:] = nuisance * (rng.random((n, d - k)) < 0.4)

    names = [f"wf_{i:02d}" for i in range(k)] + [f"cf_{i:02d}" for i in range(d - k)]
    lines = [",".join(names + ["label"])]
    for i in range(n):
        row = ",".join(f"{v:.4f}" for v in X[i])
        lines.append(f"{row},{'spam' if y[i] else 'ham'}")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


_CAR_LEVELS = {
    "buying": ["vhigh", "high", "med", "low"],
    "maint": ["vhigh", "high", "med", "low"],
    "doors": ["2", "3", "4", "5more"],
    "persons": ["2", "4", "more"],
    "lug_boot": ["small", "med", "big"],
    "safety": ["low", "med", "high"],
}


def _car_rating(buying: str, maint: str, doors: str, persons: str,
                lug_boot: str, safety: str) -> str:
    """Hierarchical deterministic rating rule over the six attributes."""
    if safety == "low" or persons == "2":
        return "unacc"
    cost = {"vhigh": 0, "high": 1, "med": 2, "low": 3}
    price = cost[buying] + cost[maint]
    comfort = (
        {"2": 0, "3": 1, "4": 2, "5more": 2}[doors]
        + {"4": 1, "more": 2}[persons]
        + {"small": 0, "med": 1, "big": 2}[lug_boot]
    )
    tech = comfort + {"med": 0, "high": 2}[safety]
    if price <= 1:
        return "unacc" if tech <= 2 else "acc"
    if price <= 3:
        return "unacc" if tech <= 1 else "acc"
    # cheap to buy and maintain: can reach the premium ratings
    if tech >= 7:
        return "vgood" if safety == "high" and price >= 5 else "good"
    if tech >= 4:
        return "acc" if price == 4 else "good"
    return "acc" if tech >= 2 else "unacc"


def make_car_dataset(path: str | Path) -> Path:
    """Write the full 1728-row product of six categorical attributes with
    a deterministic acceptability rating (unacc/acc/good/vgood)."""
    names = list(_CAR_LEVELS)
    lines = [",".join(names + ["rating"])]
    for buying in _CAR_LEVELS["buying"]:
        for maint in _CAR_LEVELS["maint"]:
            for doors in _CAR_LEVELS["doors"]:
                for persons in _CAR_LEVELS["persons"]:
                    for lug_boot in _CAR_LEVELS["lug_boot"]:
                        for safety in _CAR_LEVELS["safety"]:
                            rating = _car_rating(buying, maint, doors, persons,
                                                 lug_boot, safety)
                            lines.append(",".join(
                                [buying, maint, doors, persons, lug_boot, safety, rating]))
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out
