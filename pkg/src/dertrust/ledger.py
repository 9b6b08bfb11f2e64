"""Append-only feedback ledger and deterministic replay.

File format (JSONL, UTF-8). The first line is a header::

    {"schema_version": 1, "decay_epoch": 100, "head_block": null, "users": []}

followed by one event per line::

    {"block": 3, "from": "A", "to": "B", "score": 0.8, "tx_id": "t1"}

``users`` lists identities registered before any event (interned first, in
that order). ``head_block`` is the chain height the ledger was cut at; when
null the last event's block is used. A file without a header is accepted and
gets default header values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .experience import ExperienceParams, ExperienceState, apply_decay_epochs, update_experience
from .graph import TrustGraph

SCHEMA_VERSION = 1
DEFAULT_DECAY_EPOCH = 100

_EVENT_KEYS = ("block", "from", "to", "score", "tx_id")
_HEADER_KEYS = ("schema_version", "decay_epoch", "head_block", "users")


class LedgerError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class FeedbackEvent:
    block: int
    source: str
    target: str
    score: float
    tx_id: str = ""

    def __post_init__(self):
        if isinstance(self.block, bool) or not isinstance(self.block, int) or self.block < 0:
            raise LedgerError(f"block must be a non-negative integer, got {self.block!r}")
        if self.source == self.target:
            raise LedgerError(f"self-feedback {self.source!r} -> {self.target!r}")
        if not (0.0 < self.score <= 1.0):
            raise LedgerError(f"score must lie in (0, 1], got {self.score!r}")

    def to_record(self) -> dict:
        return {"block": self.block, "from": self.source, "to": self.target,
                "score": self.score, "tx_id": self.tx_id}

    @classmethod
    def from_record(cls, rec: dict) -> FeedbackEvent:
        missing = [k for k in _EVENT_KEYS if k not in rec]
        if missing:
            raise LedgerError(f"event missing field(s) {', '.join(missing)}")
        extra = set(rec) - set(_EVENT_KEYS)
        if extra:
            raise LedgerError(f"unknown event field(s) {', '.join(sorted(extra))}")
        score = rec["score"]
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise LedgerError(f"score must be a number, got {score!r}")
        return cls(rec["block"], str(rec["from"]), str(rec["to"]), float(score),
                   str(rec["tx_id"]))


@dataclass
class Ledger:
    events: list[FeedbackEvent] = field(default_factory=list)
    decay_epoch: int = DEFAULT_DECAY_EPOCH
    head_block: int | None = None
    users: list[str] = field(default_factory=list)
    path: Path | None = None
    fsync: bool = False

    def __post_init__(self):
        if isinstance(self.decay_epoch, bool) or not isinstance(self.decay_epoch, int) \
                or self.decay_epoch < 1:
            raise LedgerError(f"decay_epoch must be a positive integer, got {self.decay_epoch!r}")
        for k in range(1, len(self.events)):
            if self.events[k].block < self.events[k - 1].block:
                raise LedgerError(f"event {k} goes back in block height")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def last_block(self) -> int:
        return self.events[-1].block if self.events else 0

    @property
    def final_block(self) -> int:
        if self.head_block is None:
            return self.last_block
        return max(self.head_block, self.last_block)

    def append(self, event: FeedbackEvent) -> Ledger:
        """Add ``event`` at the tail; also writes it through if file-backed."""
        if self.events and event.block < self.last_block:
            raise LedgerError(f"event at block {event.block} is older than the "
                              f"ledger tail at block {self.last_block}")
        self.events.append(event)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(_dump_line(event.to_record()))
                if self.fsync:
                    fh.flush()
                    os.fsync(fh.fileno())
        return self

    def header(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "decay_epoch": self.decay_epoch,
                "head_block": self.head_block, "users": list(self.users)}

    def prefix(self, k: int, head_block: int | None = None) -> Ledger:
        return Ledger(self.events[:k], self.decay_epoch, head_block, list(self.users))

    def before_block(self, block: int) -> Ledger:
        """Events strictly below ``block``, cut at head ``block``."""
        events = [e for e in self.events if e.block < block]
        return Ledger(events, self.decay_epoch, block, list(self.users))

    def dumps(self) -> str:
        lines = [_dump_line(self.header())]
        lines.extend(_dump_line(e.to_record()) for e in self.events)
        return "".join(lines)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str, decay_epoch: int = DEFAULT_DECAY_EPOCH) -> Ledger:
        ledger = cls(decay_epoch=decay_epoch)
        first = True
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LedgerError(f"invalid JSON: {exc.msg}", lineno) from None
            if not isinstance(rec, dict):
                raise LedgerError("record is not a JSON object", lineno)
            if first and "schema_version" in rec:
                first = False
                try:
                    _apply_header(ledger, rec)
                except LedgerError as exc:
                    raise LedgerError(str(exc), lineno) from None
                continue
            first = False
            try:
                event = FeedbackEvent.from_record(rec)
                ledger.append(event)
            except LedgerError as exc:
                raise LedgerError(str(exc), lineno) from None
        return ledger

    @classmethod
    def load(cls, path: str | Path, decay_epoch: int = DEFAULT_DECAY_EPOCH) -> Ledger:
        return cls.loads(Path(path).read_text(encoding="utf-8"), decay_epoch)


def _dump_line(rec: dict) -> str:
    return json.dumps(rec, ensure_ascii=False) + "\n"


def _apply_header(ledger: Ledger, rec: dict) -> None:
    if rec["schema_version"] != SCHEMA_VERSION:
        raise LedgerError(f"unsupported schema_version {rec['schema_version']!r}, "
                          f"expected {SCHEMA_VERSION}")
    extra = set(rec) - set(_HEADER_KEYS)
    if extra:
        raise LedgerError(f"unknown header field(s) {', '.join(sorted(extra))}")
    epoch = rec.get("decay_epoch", ledger.decay_epoch)
    if isinstance(epoch, bool) or not isinstance(epoch, int) or epoch < 1:
        raise LedgerError(f"decay_epoch must be a positive integer, got {epoch!r}")
    head = rec.get("head_block")
    if head is not None and (isinstance(head, bool) or not isinstance(head, int) or head < 0):
        raise LedgerError(f"head_block must be a non-negative integer, got {head!r}")
    users = rec.get("users", [])
    if not isinstance(users, list):
        raise LedgerError("users must be a list")
    ledger.decay_epoch = epoch
    ledger.head_block = head
    ledger.users = [str(u) for u in users]


class Replayer:
    """Incrementally folds feedback events into a TrustGraph.

    Every edge keeps its own decay clock in ``last_update_block``. Advancing
    to block ``b`` applies ``(b - clock) // decay_epoch`` decay steps and moves
    the clock forward by that many whole epochs, so advancing in several hops
    gives bit-identical results to advancing once.
    """

    def __init__(self, params: ExperienceParams = ExperienceParams(),
                 decay_epoch: int = DEFAULT_DECAY_EPOCH,
                 graph: TrustGraph | None = None, theta: float = 0.5):
        if decay_epoch < 1:
            raise LedgerError(f"decay_epoch must be positive, got {decay_epoch}")
        self.params = params
        self.decay_epoch = decay_epoch
        self.graph = graph if graph is not None else TrustGraph(theta)
        self.block = max((s.last_update_block for s in self.graph.edges.values()),
                         default=0)

    def _catch_up(self, state: ExperienceState, block: int) -> ExperienceState:
        n = (block - state.last_update_block) // self.decay_epoch
        if n <= 0:
            return state
        state = apply_decay_epochs(state, n, self.params)
        return ExperienceState(state.current, state.previous,
                               state.last_update_block + n * self.decay_epoch)

    def apply(self, event: FeedbackEvent) -> ExperienceState:
        if event.block < self.block:
            raise LedgerError(f"event at block {event.block} precedes replay "
                              f"position {self.block}")
        self.block = event.block
        g = self.graph
        state = g.get(event.source, event.target)
        if state is None:
            state = ExperienceState.bootstrap(self.params, event.block)
        else:
            state = self._catch_up(state, event.block)
        state = update_experience(state, event.score, self.params)
        state = ExperienceState(state.current, state.previous, event.block)
        g.upsert_edge(event.source, event.target, state)
        return state

    def apply_all(self, events: Iterable[FeedbackEvent]) -> None:
        for e in events:
            self.apply(e)

    def advance_to(self, block: int) -> None:
        """Decay every idle edge up to ``block``."""
        if block < self.block:
            raise LedgerError(f"cannot advance backwards from {self.block} to {block}")
        self.block = block
        edges = self.graph.edges
        for key in sorted(edges):
            edges[key] = self._catch_up(edges[key], block)


def replay(ledger: Ledger, params: ExperienceParams = ExperienceParams(),
           theta: float = 0.5, decay_epoch: int | None = None) -> TrustGraph:
    """Rebuild the experience graph from ``ledger``, cut at its final block."""
    epoch = ledger.decay_epoch if decay_epoch is None else decay_epoch
    r = Replayer(params, epoch, TrustGraph(theta, ledger.users))
    r.apply_all(ledger.events)
    r.advance_to(ledger.final_block)
    return r.graph
