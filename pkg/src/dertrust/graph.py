"""Directed experience graph and its positive/negative split."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from scipy import sparse

from .experience import ExperienceState


class GraphError(ValueError):
    pass


@dataclass
class SplitMatrices:
    pe: sparse.csr_matrix
    ne: sparse.csr_matrix  # stores 1 - E for negative edges
    c_pos: np.ndarray
    c_neg: np.ndarray


class TrustGraph:
    """Experience relationships between interned users.

    Users are interned in first-seen order; that order is the tie-break for
    every ranking. Edges map ``(i, j)`` index pairs to an ExperienceState.
    A missing edge means experience 0.
    """

    def __init__(self, theta: float = 0.5, users: Iterable[str] = ()):
        if not 0 < theta < 1:
            raise GraphError(f"theta must lie in (0, 1), got {theta}")
        self.theta = theta
        self.users: list[str] = []
        self.index: dict[str, int] = {}
        self.edges: dict[tuple[int, int], ExperienceState] = {}
        self._out: dict[int, set[int]] = {}
        for u in users:
            self.intern(u)

    @property
    def n(self) -> int:
        return len(self.users)

    def intern(self, user: str) -> int:
        idx = self.index.get(user)
        if idx is None:
            idx = len(self.users)
            self.users.append(user)
            self.index[user] = idx
        return idx

    def idx(self, user: str) -> int:
        try:
            return self.index[user]
        except KeyError:
            raise GraphError(f"unknown user {user!r}") from None

    def upsert_edge(self, source: str, target: str,
                    state: ExperienceState) -> TrustGraph:
        if source == target:
            raise GraphError(f"self-edge {source!r} -> {target!r} not allowed")
        if not (0.0 <= state.current <= 1.0 and 0.0 <= state.previous <= 1.0):
            raise GraphError(f"experience outside [0, 1]: {state}")
        i, j = self.intern(source), self.intern(target)
        self.edges[(i, j)] = state
        self._out.setdefault(i, set()).add(j)
        return self

    def out_neighbors(self, i: int) -> list[int]:
        return sorted(self._out.get(i, ()))

    def get(self, source: str, target: str) -> ExperienceState | None:
        i, j = self.index.get(source), self.index.get(target)
        if i is None or j is None:
            return None
        return self.edges.get((i, j))

    def exp(self, source: str, target: str) -> float:
        state = self.get(source, target)
        return 0.0 if state is None else state.current

    def has_edge(self, source: str, target: str) -> bool:
        return self.get(source, target) is not None

    def copy(self) -> TrustGraph:
        g = TrustGraph(self.theta, self.users)
        g.edges = dict(self.edges)
        g._out = {i: set(js) for i, js in self._out.items()}
        return g

    def _coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        keys = sorted(self.edges)
        rows = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        cols = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        vals = np.fromiter((self.edges[k].current for k in keys),
                           dtype=np.float64, count=len(keys))
        return rows, cols, vals

    def experience_matrix(self) -> sparse.csr_matrix:
        rows, cols, vals = self._coo()
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def split(self) -> SplitMatrices:
        return split_experience(self.experience_matrix(), self.theta)

    # snapshot I/O -------------------------------------------------------

    def iter_records(self) -> Iterator[dict]:
        for (i, j) in sorted(self.edges):
            s = self.edges[(i, j)]
            yield {"from": self.users[i], "to": self.users[j],
                   "exp": s.current, "prev": s.previous,
                   "block": s.last_update_block}

    def dumps(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.iter_records())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str, theta: float = 0.5) -> TrustGraph:
        g = cls(theta)
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                state = ExperienceState(float(rec["exp"]), float(rec["prev"]),
                                        int(rec["block"]))
                g.upsert_edge(str(rec["from"]), str(rec["to"]), state)
            except (ValueError, KeyError, TypeError) as exc:
                raise GraphError(f"line {lineno}: bad graph record: {exc}") from exc
        return g

    @classmethod
    def load(cls, path: str | Path, theta: float = 0.5) -> TrustGraph:
        return cls.loads(Path(path).read_text(encoding="utf-8"), theta)


def split_experience(e: sparse.spmatrix, theta: float = 0.5) -> SplitMatrices:
    """Split an experience matrix at ``theta``.

    Entries ``>= theta`` go to ``pe`` unchanged; entries in ``(0, theta)`` go
    to ``ne`` as ``1 - E``.
    """
    e = sparse.coo_matrix(e)
    rows, cols, vals = e.row, e.col, e.data
    pos = vals >= theta
    neg = (vals > 0) & ~pos
    pe = sparse.csr_matrix((vals[pos], (rows[pos], cols[pos])), shape=e.shape)
    ne = sparse.csr_matrix((1.0 - vals[neg], (rows[neg], cols[neg])), shape=e.shape)
    c_pos = np.asarray(pe.sum(axis=1)).ravel()
    c_neg = np.asarray(ne.sum(axis=1)).ravel()
    return SplitMatrices(pe, ne, c_pos, c_neg)


def build_transition_matrices(split: SplitMatrices
                              ) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Column-normalised, transposed transition matrices.

    ``a_pos[i, j] = pe[j, i] / c_pos[j]``. Users without positive (negative)
    out-edges get an all-zero column; no teleport column is added.
    """
    return _normalize(split.pe, split.c_pos), _normalize(split.ne, split.c_neg)


def _normalize(m: sparse.csr_matrix, out_sum: np.ndarray) -> sparse.csr_matrix:
    inv = np.zeros_like(out_sum)
    nz = out_sum > 0
    inv[nz] = 1.0 / out_sum[nz]
    return (sparse.diags(inv) @ m).T.tocsr()
