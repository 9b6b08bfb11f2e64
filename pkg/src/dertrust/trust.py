"""Pairwise trust from experience and reputation."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import GraphError, TrustGraph
from .reputation import ReputationVector


class Basis(enum.Enum):
    EXPERIENCE_AND_REPUTATION = "ExperienceAndReputation"
    REPUTATION_ONLY = "ReputationOnly"


@dataclass(frozen=True)
class TrustQuery:
    trustor: str
    trustee: str
    w1: float = 0.5
    w2: float = 0.5

    def __post_init__(self):
        check_weights(self.w1, self.w2)


@dataclass(frozen=True)
class TrustScore:
    value: float
    basis: Basis
    rep_scale: str = "minmax"


def check_weights(w1: float, w2: float) -> None:
    if w1 < 0 or w2 < 0 or abs(w1 + w2 - 1.0) > 1e-12:
        raise ValueError(f"weights must be non-negative and sum to 1, got ({w1}, {w2})")


def normalize_reputation(values: np.ndarray) -> np.ndarray:
    """Min-max scale reputation onto [0, 1].

    A constant vector has no spread to rescale; it is clipped to [0, 1]
    instead.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    lo, hi = values.min(), values.max()
    if hi > lo:
        return (values - lo) / (hi - lo)
    return np.clip(values, 0.0, 1.0)


def reputation_scale(graph: TrustGraph,
                     rep: ReputationVector | np.ndarray) -> tuple[np.ndarray, str]:
    """Per-user reputation on the scale used for aggregation.

    A ReputationVector is padded with the 1/N bootstrap value for users it
    has never seen, then min-max normalised. A plain array is taken to be on
    the aggregation scale already.
    """
    if isinstance(rep, ReputationVector):
        raw = rep.rep
        if len(raw) > graph.n:
            raise GraphError(f"reputation has {len(raw)} entries for {graph.n} users")
        if len(raw) < graph.n:
            raw = np.concatenate([raw, np.full(graph.n - len(raw), 1.0 / graph.n)])
        return normalize_reputation(raw), "minmax"
    values = np.asarray(rep, dtype=np.float64)
    if len(values) != graph.n:
        raise GraphError(f"reputation has {len(values)} entries for {graph.n} users")
    return values, "raw"


def _score(graph: TrustGraph, scaled: np.ndarray, scale: str, trustor: str,
           trustee: str, w1: float, w2: float) -> TrustScore:
    j = graph.idx(trustee)
    graph.idx(trustor)
    state = graph.get(trustor, trustee)
    if state is None:
        return TrustScore(float(scaled[j]), Basis.REPUTATION_ONLY, scale)
    value = w1 * scaled[j] + w2 * state.current
    return TrustScore(float(value), Basis.EXPERIENCE_AND_REPUTATION, scale)


def trust(graph: TrustGraph, rep: ReputationVector | np.ndarray,
          query: TrustQuery) -> TrustScore:
    scaled, scale = reputation_scale(graph, rep)
    return _score(graph, scaled, scale, query.trustor, query.trustee,
                  query.w1, query.w2)


def trust_row(graph: TrustGraph, scaled_rep: np.ndarray, trustor: int,
              w1: float, w2: float) -> np.ndarray:
    """Trust from one trustor toward every user, given already-scaled reputation."""
    out = np.array(scaled_rep, dtype=np.float64, copy=True)
    for j in graph.out_neighbors(trustor):
        out[j] = w1 * scaled_rep[j] + w2 * graph.edges[(trustor, j)].current
    return out


def rank_counterparts(graph: TrustGraph, rep: ReputationVector | np.ndarray,
                      trustor: str, candidates: Sequence[str],
                      weights: tuple[float, float] = (0.5, 0.5)
                      ) -> list[tuple[str, TrustScore]]:
    check_weights(*weights)
    scaled, scale = reputation_scale(graph, rep)
    scored = [(c, _score(graph, scaled, scale, trustor, c, *weights))
              for c in candidates]
    scored.sort(key=lambda item: (-item[1].value, graph.idx(item[0])))
    return scored
