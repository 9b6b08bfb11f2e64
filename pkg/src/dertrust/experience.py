"""Experience dynamics between a trustor and a trustee.

An experience value moves in three ways depending on the feedback score of
the latest transaction: it increases after a cooperative transaction, drops
after an uncooperative one and decays when there is no transaction (or the
feedback is neutral). All functions here are pure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class ConfigError(ValueError):
    """Invalid model parameters or out-of-domain inputs."""


class FeedbackClass(enum.Enum):
    COOPERATIVE = "cooperative"
    UNCOOPERATIVE = "uncooperative"
    NEUTRAL_OR_ABSENT = "neutral_or_absent"


@dataclass(frozen=True)
class ExperienceParams:
    exp0: float = 0.5
    min_exp: float = 0.0
    max_exp: float = 1.0
    theta_co: float = 0.7
    theta_unco: float = 0.5
    alpha: float = 0.05
    beta: float = 1.6
    delta: float = 0.005
    gamma: float = 0.005

    def __post_init__(self):
        values = (self.exp0, self.min_exp, self.max_exp, self.theta_co,
                  self.theta_unco, self.alpha, self.beta, self.delta, self.gamma)
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("experience parameters must be finite")
        if not 0 <= self.min_exp < self.exp0 < self.max_exp:
            raise ConfigError(
                f"need 0 <= min_exp < exp0 < max_exp, got "
                f"{self.min_exp}, {self.exp0}, {self.max_exp}")
        if not 0 < self.theta_unco < self.theta_co < 1:
            raise ConfigError(
                f"need 0 < theta_unco < theta_co < 1, got "
                f"{self.theta_unco}, {self.theta_co}")
        if not 0 < self.alpha < self.max_exp:
            raise ConfigError(f"alpha must lie in (0, max_exp), got {self.alpha}")
        if not self.beta > 1:
            raise ConfigError(f"beta must be > 1, got {self.beta}")
        if not (self.delta > 0 and self.gamma > 0):
            raise ConfigError("delta and gamma must be positive")


@dataclass(frozen=True)
class ExperienceState:
    """Two-step memory of an experience relationship.

    ``current`` is the latest value and ``previous`` the one before it; the
    decay step reads ``previous``. ``last_update_block`` is the block height
    the edge's decay clock is anchored at.
    """

    current: float
    previous: float
    last_update_block: int = 0

    @classmethod
    def bootstrap(cls, params: ExperienceParams, block: int = 0) -> ExperienceState:
        return cls(params.exp0, params.exp0, block)

    def check(self, params: ExperienceParams) -> None:
        lo, hi = params.min_exp, params.max_exp
        if not (lo <= self.current <= hi and lo <= self.previous <= hi):
            raise ConfigError(
                f"experience state ({self.current}, {self.previous}) "
                f"outside [{lo}, {hi}]")
        if self.last_update_block < 0:
            raise ConfigError("last_update_block must be non-negative")


def classify_feedback(score: float, params: ExperienceParams) -> FeedbackClass:
    if score >= params.theta_co:
        return FeedbackClass.COOPERATIVE
    if 0 < score <= params.theta_unco:
        return FeedbackClass.UNCOOPERATIVE
    return FeedbackClass.NEUTRAL_OR_ABSENT


def increment(current: float, params: ExperienceParams) -> float:
    """Maximum increase step available from ``current``."""
    return params.alpha * (1 - current / params.max_exp)


def decay_amount(previous: float, params: ExperienceParams) -> float:
    """Size of one decay step; larger for weaker ties."""
    return params.delta * (1 + params.gamma - previous / params.max_exp)


def _check_score(score: float) -> None:
    if not (0.0 <= score <= 1.0):
        raise ConfigError(f"feedback score must lie in [0, 1], got {score!r}")


def _decay_value(state: ExperienceState, params: ExperienceParams) -> float:
    # clamp at min_exp, not exp0 (see README: decay floor)
    return max(params.min_exp, state.current - decay_amount(state.previous, params))


def update_experience(state: ExperienceState, score: float,
                      params: ExperienceParams) -> ExperienceState:
    """Apply one feedback score to ``state`` and return the new state.

    A score of 0 means no transaction happened and triggers the decay model,
    as does a neutral score strictly between the two thresholds.
    """
    _check_score(score)
    branch = classify_feedback(score, params)
    cur = state.current
    if branch is FeedbackClass.COOPERATIVE:
        new = cur + score * increment(cur, params)
        new = min(new, params.max_exp)
    elif branch is FeedbackClass.UNCOOPERATIVE:
        new = max(params.min_exp,
                  cur - params.beta * (1 - score) * increment(cur, params))
    else:
        new = _decay_value(state, params)
    return replace(state, current=new, previous=cur)


def apply_decay_epochs(state: ExperienceState, n_epochs: int,
                       params: ExperienceParams) -> ExperienceState:
    """Run ``n_epochs`` consecutive decay steps (no transactions)."""
    if n_epochs < 0:
        raise ConfigError(f"n_epochs must be non-negative, got {n_epochs}")
    for _ in range(n_epochs):
        state = replace(state, current=_decay_value(state, params),
                        previous=state.current)
    return state
