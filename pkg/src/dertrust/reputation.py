"""Positive/negative reputation by simultaneous power iteration.

Both vectors follow the damped update ``x <- d * A @ x + (1 - d) / N`` and
share one stopping rule: the sum of the Euclidean norms of the two step
differences must drop below ``tol``. The sparse mat-vec is scipy's
sequential CSR kernel, so results are bit-reproducible for a given input.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .graph import TrustGraph, build_transition_matrices

logger = logging.getLogger(__name__)


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class ReputationParams:
    d: float = 0.85
    tol: float = 1e-5
    max_iters: int = 1000
    w1: float = 0.5
    w2: float = 0.5

    def __post_init__(self):
        if not 0 < self.d < 1:
            raise SolverError(f"damping d must lie in (0, 1), got {self.d}")
        if not self.tol > 0:
            raise SolverError(f"tol must be positive, got {self.tol}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise SolverError(f"max_iters must be a positive integer, got {self.max_iters}")
        if self.w1 < 0 or self.w2 < 0 or abs(self.w1 + self.w2 - 1) > 1e-12:
            raise SolverError(f"weights must be non-negative and sum to 1, got "
                              f"({self.w1}, {self.w2})")


@dataclass
class ReputationVector:
    rep_pos: np.ndarray
    rep_neg: np.ndarray
    rep: np.ndarray = None
    iterations: int = 0
    final_residual: float = math.nan
    converged: bool = True
    residual_trace: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.rep_pos = np.asarray(self.rep_pos, dtype=np.float64)
        self.rep_neg = np.asarray(self.rep_neg, dtype=np.float64)
        if self.rep_pos.shape != self.rep_neg.shape or self.rep_pos.ndim != 1:
            raise SolverError("rep_pos and rep_neg must be 1-D and the same length")
        if self.rep is None:
            self.rep = overall_reputation(self.rep_pos, self.rep_neg)

    def __len__(self) -> int:
        return len(self.rep_pos)

    @classmethod
    def uniform(cls, n: int) -> ReputationVector:
        v = np.full(n, 1.0 / n)
        return cls(v, v.copy())


def overall_reputation(rep_pos: np.ndarray, rep_neg: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, rep_pos - rep_neg)


def _check_matrices(a_pos, a_neg) -> int:
    if a_pos.ndim != 2 or a_pos.shape[0] != a_pos.shape[1]:
        raise SolverError(f"a_pos must be square, got shape {a_pos.shape}")
    if a_neg.shape != a_pos.shape:
        raise SolverError(f"a_pos {a_pos.shape} and a_neg {a_neg.shape} differ")
    n = a_pos.shape[0]
    if n < 1:
        raise SolverError("need at least one user")
    return n


def solve(a_pos: sparse.spmatrix, a_neg: sparse.spmatrix,
          params: ReputationParams = ReputationParams(),
          init: ReputationVector | None = None,
          record_trace: bool = False) -> ReputationVector:
    """Iterate both reputation vectors to the shared fixed point.

    Returns the last iterate. If ``max_iters`` runs out first the result is
    flagged ``converged=False`` and a warning is logged.
    """
    n = _check_matrices(a_pos, a_neg)
    a_pos = sparse.csr_matrix(a_pos)
    a_neg = sparse.csr_matrix(a_neg)
    if init is None:
        init = ReputationVector.uniform(n)
    elif len(init) != n:
        raise SolverError(f"init has length {len(init)}, expected {n}")
    d = params.d
    teleport = (1.0 - d) / n
    pos = init.rep_pos.copy()
    neg = init.rep_neg.copy()
    trace = []
    err = math.inf
    it = 0
    while it < params.max_iters:
        new_pos = d * (a_pos @ pos) + teleport
        new_neg = d * (a_neg @ neg) + teleport
        err = float(np.linalg.norm(new_pos - pos) + np.linalg.norm(new_neg - neg))
        pos, neg = new_pos, new_neg
        it += 1
        if record_trace:
            trace.append(err)
        if err < params.tol:
            break
    converged = err < params.tol
    if not converged:
        logger.warning("reputation solver stopped after %d iterations, err=%.3g",
                       it, err)
    return ReputationVector(pos, neg, iterations=it, final_residual=err,
                            converged=converged, residual_trace=trace)


def compute_reputation(graph: TrustGraph, params: ReputationParams = ReputationParams(),
                       **kwargs) -> ReputationVector:
    """Split ``graph``, build the transition matrices and solve."""
    a_pos, a_neg = build_transition_matrices(graph.split())
    return solve(a_pos, a_neg, params, **kwargs)


def residual(a_pos, a_neg, vec: ReputationVector,
             params: ReputationParams = ReputationParams()) -> float:
    """Fixed-point defect of ``vec`` summed over the two vectors."""
    n = _check_matrices(a_pos, a_neg)
    if len(vec) != n:
        raise SolverError(f"vector has length {len(vec)}, expected {n}")
    t = (1.0 - params.d) / n
    r_pos = vec.rep_pos - (params.d * (a_pos @ vec.rep_pos) + t)
    r_neg = vec.rep_neg - (params.d * (a_neg @ vec.rep_neg) + t)
    return float(np.linalg.norm(r_pos) + np.linalg.norm(r_neg))


def rank(vec: ReputationVector | np.ndarray,
         users: Sequence[str] | None = None) -> list[tuple]:
    """Users by descending overall reputation, ties in interning order."""
    values = vec.rep if isinstance(vec, ReputationVector) else np.asarray(vec)
    order = np.argsort(-values, kind="stable")
    labels = range(len(values)) if users is None else users
    return [(labels[i], float(values[i])) for i in order]


def is_monotone(trace: Sequence[float], skip: int = 2) -> bool:
    """True if the residual trace never increases after ``skip`` steps."""
    tail = list(trace[skip:])
    return all(b <= a for a, b in zip(tail, tail[1:]))
