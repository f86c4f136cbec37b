"""Average-reward R-learning over plan-step transitions.

Maintains two tables per (state, action) pair: a relative action value R
and a gain estimate rho. Both are updated from observed transition
rewards; rho summed along a plan's steps is the plan's measured quality,
which feeds back into plan generation as the bar a new plan must beat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .errors import InvariantViolation

__all__ = ["RLConfig", "ValueTable", "plan_quality"]


@dataclass
class RLConfig:
    """Learning rates for the two value updates plus the reward scale
    applied to mean cross-validation scores.

    alpha and beta must lie in (0, 1]. reward_scale multiplies the mean
    CV metric when a cross-validation step is rewarded; featurizer and
    preprocessor steps always receive reward -1 regardless of scale.
    """

    alpha: float = 0.5
    beta: float = 0.5
    reward_scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise InvariantViolation("alpha", f"must be in (0,1], got {self.alpha}")
        if not (0.0 < self.beta <= 1.0):
            raise InvariantViolation("beta", f"must be in (0,1], got {self.beta}")
        if not (self.reward_scale > 0.0 and math.isfinite(self.reward_scale)):
            raise InvariantViolation("rewardScale", f"must be a positive real, got {self.reward_scale}")


@dataclass
class ValueTable:
    """Learned R(s,a) and rho(s,a) estimates keyed by canonical
    state/action strings. Absent keys mean "unexplored"."""

    r: dict[str, dict[str, float]] = field(default_factory=dict)
    rho: dict[str, dict[str, float]] = field(default_factory=dict)

    def r_value(self, state: str, action: str, default: float = 0.0) -> float:
        return self.r.get(state, {}).get(action, default)

    def rho_value(self, state: str, action: str, default: float = 0.0) -> float:
        return self.rho.get(state, {}).get(action, default)

    def has_rho(self, state: str, action: str) -> bool:
        return action in self.rho.get(state, {})

    def max_r(self, state: str) -> float:
        """max over explored actions at `state`; 0.0 when none explored."""
        actions = self.r.get(state)
        if not actions:
            return 0.0
        return max(actions.values())

    def update(self, state: str, action: str, next_state: str, reward: float, cfg: RLConfig) -> "ValueTable":
        """One R-learning value iteration for the transition (state, action, next_state).

        Both targets are computed from the pre-update tables, then written:

            R(s,a)   <- (1-alpha) R(s,a)   + alpha (r - rho(s,a) + max_a' R(s',a'))
            rho(s,a) <- (1-beta)  rho(s,a) + beta  (r + max_a' R(s',a') - max_a' R(s,a'))

        Only the (state, action) entry is touched. Returns self.
        """
        if not math.isfinite(reward):
            raise InvariantViolation("reward", f"must be finite, got {reward}")
        r_old = self.r_value(state, action)
        rho_old = self.rho_value(state, action)
        max_next = self.max_r(next_state)
        max_cur = self.max_r(state)
        r_target = reward - rho_old + max_next
        rho_target = reward + max_next - max_cur
        self.r.setdefault(state, {})[action] = (1.0 - cfg.alpha) * r_old + cfg.alpha * r_target
        self.rho.setdefault(state, {})[action] = (1.0 - cfg.beta) * rho_old + cfg.beta * rho_target
        return self

    def copy(self) -> "ValueTable":
        return ValueTable(
            r={s: dict(a) for s, a in self.r.items()},
            rho={s: dict(a) for s, a in self.rho.items()},
        )

    def to_json_dict(self) -> dict:
        return {"r": {s: dict(a) for s, a in self.r.items()},
                "rho": {s: dict(a) for s, a in self.rho.items()}}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ValueTable":
        return cls(r={s: dict(a) for s, a in d.get("r", {}).items()},
                   rho={s: dict(a) for s, a in d.get("rho", {}).items()})


def plan_quality(plan, values: ValueTable) -> float:
    """Sum of learned rho over a plan's contributing transitions.

    Contributing steps are featurizer, preprocessor and cross-validation
    steps; import and train contribute nothing. Unexplored entries count
    as 0. `plan` must expose value_transitions() yielding (state, action)
    canonical-string pairs for its contributing steps.
    """
    transitions: Iterable[tuple[str, str]] = plan.value_transitions()
    return sum(values.rho_value(s, a) for s, a in transitions)
