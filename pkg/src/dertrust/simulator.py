"""Seeded ecosystem simulator.

The population is split into providers and clients. Clients transact with
providers and rate them; the score distribution depends on the provider's
behaviour class. Reputation is recomputed at every multiple of the decay
epoch, and the recorded snapshots can be reproduced exactly by replaying the
emitted ledger.

Randomness: a single ``numpy.random.PCG64`` stream seeded from the scenario
seed. Only ``Generator.random()`` (53-bit uniform doubles) is drawn; every
other variate is derived from it by inverse transform, which keeps the
stream identical across platforms.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse, special

from .experience import (ConfigError, ExperienceParams, ExperienceState,
                         update_experience)
from .graph import TrustGraph, build_transition_matrices, split_experience
from .ledger import FeedbackEvent, Ledger, Replayer, replay
from .reputation import (ReputationParams, ReputationVector, compute_reputation,
                         solve)
from .trust import normalize_reputation, trust_row

BEHAVIOR_CLASSES = ("Honest", "LowQuality", "Sybil", "BadMouther", "Whitewasher")
PROVIDER_CLASSES = ("Honest", "LowQuality", "Whitewasher")
ATTACK_KINDS = ("sybil", "endorse", "badmouth")


class ScenarioError(ConfigError):
    pass


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))


def fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class ScoreDist:
    """Normal(mean, sd) truncated to [0, 1]."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ScenarioError(f"score sd must be positive, got {self.sd}")

    def ppf(self, u: float) -> float:
        lo = special.ndtr((0.0 - self.mean) / self.sd)
        hi = special.ndtr((1.0 - self.mean) / self.sd)
        x = self.mean + self.sd * float(special.ndtri(lo + u * (hi - lo)))
        return min(1.0, max(0.0, x))


def _default_scores() -> dict:
    return {"Honest": ScoreDist(0.85, 0.1), "LowQuality": ScoreDist(0.3, 0.1),
            "Whitewasher": ScoreDist(0.3, 0.1)}


@dataclass(frozen=True)
class Workload:
    tx_rate: float = 2.0
    provider_fraction: float = 0.2
    selection: str = "trust"
    exploration: float = 0.05
    scores: dict = field(default_factory=_default_scores)

    def __post_init__(self):
        if self.tx_rate < 0:
            raise ScenarioError("tx_rate must be non-negative")
        if not 0 < self.provider_fraction < 1:
            raise ScenarioError("provider_fraction must lie in (0, 1)")
        if self.selection not in ("trust", "uniform"):
            raise ScenarioError(f"selection must be 'trust' or 'uniform', got {self.selection!r}")
        if self.exploration <= 0:
            raise ScenarioError("exploration must be positive")


@dataclass(frozen=True)
class Attack:
    kind: str
    target: str = "auto"
    attackers: int = 20
    ratings_per_attacker: int = 1
    score: float = 1.0
    onset_block: int = 0
    origin: str = "fresh"

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ScenarioError(f"attack kind must be one of {ATTACK_KINDS}, got {self.kind!r}")
        if self.origin not in ("fresh", "established"):
            raise ScenarioError(f"attack origin must be 'fresh' or 'established'")
        if self.attackers < 1 or self.ratings_per_attacker < 1:
            raise ScenarioError("attackers and ratings_per_attacker must be >= 1")
        if not 0 < self.score <= 1:
            raise ScenarioError("attack score must lie in (0, 1]")

    @property
    def total_ratings(self) -> int:
        return self.attackers * self.ratings_per_attacker


@dataclass(frozen=True)
class Scenario:
    seed: int = 0
    n_users: int = 100
    n_blocks: int = 1000
    decay_epoch: int = 100
    classes: dict = field(default_factory=lambda: {"Honest": 0.9, "LowQuality": 0.1})
    n_reserved: int = 0
    workload: Workload = field(default_factory=Workload)
    attack: Attack | None = None
    experience: ExperienceParams = field(default_factory=ExperienceParams)
    reputation: ReputationParams = field(default_factory=ReputationParams)
    theta: float = 0.5
    tracked_users: tuple = ()
    tracked_edges: tuple = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ScenarioError("seed must be a 64-bit unsigned integer")
        if self.n_users < 2:
            raise ScenarioError("n_users must be >= 2")
        if self.n_blocks < 1 or self.decay_epoch < 1:
            raise ScenarioError("n_blocks and decay_epoch must be positive")
        bad = set(self.classes) - set(PROVIDER_CLASSES)
        if bad:
            raise ScenarioError(f"class fractions only apply to provider classes "
                                f"{PROVIDER_CLASSES}; got {sorted(bad)}")
        if any(v < 0 for v in self.classes.values()) or \
                abs(sum(self.classes.values()) - 1.0) > 1e-9:
            raise ScenarioError("class fractions must be non-negative and sum to 1")
        missing = [c for c, f in self.classes.items() if f > 0 and c not in self.workload.scores]
        if missing:
            raise ScenarioError(f"no score distribution for class(es) {missing}")
        if self.n_reserved < 0:
            raise ScenarioError("n_reserved must be >= 0")
        if self.attack is not None and self.attack.onset_block >= self.n_blocks:
            raise ScenarioError("attack onset must fall inside the horizon")

    # (de)serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed, "n_users": self.n_users, "n_blocks": self.n_blocks,
            "decay_epoch": self.decay_epoch, "classes": dict(self.classes),
            "n_reserved": self.n_reserved,
            "workload": {**{k: getattr(self.workload, k) for k in
                            ("tx_rate", "provider_fraction", "selection", "exploration")},
                         "scores": {c: asdict(s) for c, s in self.workload.scores.items()}},
            "attack": None if self.attack is None else asdict(self.attack),
            "experience": asdict(self.experience),
            "reputation": asdict(self.reputation),
            "theta": self.theta,
            "tracked_users": list(self.tracked_users),
            "tracked_edges": [list(e) for e in self.tracked_edges],
        }
        return d

    @classmethod
    def from_dict(cls, data: dict) -> Scenario:
        data = dict(data)
        _reject_unknown(data, {f.name for f in fields(cls)}, "scenario")
        try:
            if "workload" in data:
                w = dict(data["workload"])
                _reject_unknown(w, {f.name for f in fields(Workload)}, "workload")
                if "scores" in w:
                    w["scores"] = {c: ScoreDist(**s) for c, s in w["scores"].items()}
                data["workload"] = Workload(**w)
            if data.get("attack") is not None:
                a = data["attack"]
                _reject_unknown(a, {f.name for f in fields(Attack)}, "attack")
                data["attack"] = Attack(**a)
            if "experience" in data:
                data["experience"] = ExperienceParams(**data["experience"])
            if "reputation" in data:
                data["reputation"] = ReputationParams(**data["reputation"])
            if "tracked_users" in data:
                data["tracked_users"] = tuple(data["tracked_users"])
            if "tracked_edges" in data:
                data["tracked_edges"] = tuple(tuple(e) for e in data["tracked_edges"])
            return cls(**data)
        except TypeError as exc:
            raise ScenarioError(f"invalid scenario: {exc}") from None
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> Scenario:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ScenarioError(f"{path}: scenario must be a JSON object")
        return cls.from_dict(data)


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    if not isinstance(data, dict):
        raise ScenarioError(f"{where} must be an object")
    unknown = set(data) - allowed
    if unknown:
        raise ScenarioError(f"unknown {where} key(s): {', '.join(sorted(unknown))}")


@dataclass
class Snapshot:
    epoch: int
    block: int
    vec: ReputationVector
    ranks: np.ndarray  # 1-based rank per user index


@dataclass
class MetricsReport:
    users: list[str]
    classes: dict[str, str]
    providers: list[str]
    bootstrap: float
    snapshots: list[Snapshot] = field(default_factory=list)
    edge_traces: list[tuple[int, str, str, float]] = field(default_factory=list)
    attack: dict = field(default_factory=dict)
    whitewash: list[dict] = field(default_factory=list)
    tracked_users: tuple = ()

    def index(self, user: str) -> int:
        return self.users.index(user)

    def snapshot_at(self, block: int) -> Snapshot:
        for s in self.snapshots:
            if s.block == block:
                return s
        raise KeyError(f"no snapshot at block {block}")

    def value(self, user: str, block: int, field_name: str = "rep") -> float:
        return float(getattr(self.snapshot_at(block).vec, field_name)[self.index(user)])

    def rank_of(self, user: str, block: int) -> int:
        return int(self.snapshot_at(block).ranks[self.index(user)])

    def metrics_csv(self) -> str:
        tracked = self.tracked_users or tuple(self.users)
        idx = [self.index(u) for u in tracked]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "user", "rep_pos", "rep_neg", "rep", "rank"])
        for s in self.snapshots:
            for u, i in zip(tracked, idx):
                w.writerow([s.epoch, u, fmt(s.vec.rep_pos[i]), fmt(s.vec.rep_neg[i]),
                            fmt(s.vec.rep[i]), int(s.ranks[i])])
        return buf.getvalue()

    def iterations_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "block", "iterations", "residual"])
        for s in self.snapshots:
            w.writerow([s.epoch, s.block, s.vec.iterations, fmt(s.vec.final_residual)])
        return buf.getvalue()

    def edges_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["block", "from", "to", "exp"])
        for block, a, b, v in self.edge_traces:
            w.writerow([block, a, b, fmt(v)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"users": len(self.users), "providers": len(self.providers),
                "bootstrap": self.bootstrap,
                "epochs": [s.block for s in self.snapshots],
                "attack": self.attack, "whitewash": self.whitewash}


def ranks_of(values: np.ndarray) -> np.ndarray:
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(len(values), dtype=np.int64)
    ranks[order] = np.arange(1, len(values) + 1)
    return ranks


def _counts(fractions: dict, total: int) -> dict:
    """Largest-remainder apportionment, ties broken by class order."""
    names = [c for c in PROVIDER_CLASSES if c in fractions]
    raw = {c: fractions[c] * total for c in names}
    counts = {c: int(math.floor(raw[c])) for c in names}
    left = total - sum(counts.values())
    by_rem = sorted(names, key=lambda c: (-(raw[c] - counts[c]), names.index(c)))
    for c in by_rem[:left]:
        counts[c] += 1
    return counts


class _Run:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.rng = make_rng(sc.seed)
        width = len(str(max(sc.n_users, sc.n_reserved, 1) - 1))
        self.population = [f"u{i:0{width}d}" for i in range(sc.n_users)]
        self.reserved = [f"x{i:0{width}d}" for i in range(sc.n_reserved)]
        self.users = self.population + self.reserved
        self.n = len(self.users)
        self.bootstrap = (1.0 - sc.reputation.d) / self.n

        n_prov = min(sc.n_users - 1, max(1, round(sc.workload.provider_fraction * sc.n_users)))
        perm = self._permutation(sc.n_users)
        prov_idx = sorted(perm[:n_prov])
        self.clients = [self.population[i] for i in sorted(perm[n_prov:])]
        providers = [self.population[i] for i in prov_idx]
        counts = _counts(sc.classes, n_prov)
        order = self._permutation(n_prov)
        self.classes = {u: "Honest" for u in self.users}
        k = 0
        for c in PROVIDER_CLASSES:
            for _ in range(counts.get(c, 0)):
                self.classes[providers[order[k]]] = c
                k += 1
        self.providers = providers
        # provider slot -> identity currently used by that slot
        self.active = list(providers)
        self.reserve_ptr = 0

        self.ledger = Ledger(decay_epoch=sc.decay_epoch, head_block=sc.n_blocks,
                             users=list(self.users))
        self.replayer = Replayer(sc.experience, sc.decay_epoch,
                                 TrustGraph(sc.theta, self.users))
        self.report = MetricsReport(self.users, self.classes, providers, self.bootstrap,
                                    tracked_users=tuple(sc.tracked_users))
        self.tracked_edges = {tuple(e) for e in sc.tracked_edges}
        self.tx_counter = 0
        self.scaled = None
        self.whitewash_open: list[dict] = []

    def _permutation(self, n: int) -> list[int]:
        keys = self.rng.random(n)
        return [int(i) for i in np.argsort(keys, kind="stable")]

    def _fresh_identity(self) -> str:
        if self.reserve_ptr >= len(self.reserved):
            raise ScenarioError("scenario ran out of reserved identities; raise n_reserved")
        u = self.reserved[self.reserve_ptr]
        self.reserve_ptr += 1
        return u

    def emit(self, block: int, source: str, target: str, score: float, prefix="tx"):
        event = FeedbackEvent(block, source, target, score, f"{prefix}{self.tx_counter:07d}")
        self.tx_counter += 1
        self.ledger.append(event)
        state = self.replayer.apply(event)
        if (source, target) in self.tracked_edges:
            self.report.edge_traces.append((block, source, target, state.current))

    def snapshot(self, block: int) -> Snapshot:
        self.replayer.advance_to(block)
        vec = compute_reputation(self.replayer.graph, self.sc.reputation)
        snap = Snapshot(len(self.report.snapshots), block, vec, ranks_of(vec.rep))
        self.report.snapshots.append(snap)
        self.scaled = normalize_reputation(vec.rep)
        return snap

    # behaviour ------------------------------------------------------------

    def pick_provider(self, client: str) -> str:
        wl = self.sc.workload
        slots = self.active
        if wl.selection == "uniform":
            weights = np.ones(len(slots))
        else:
            g = self.replayer.graph
            row = trust_row(g, self.scaled, g.idx(client),
                            self.sc.reputation.w1, self.sc.reputation.w2)
            weights = np.array([row[g.idx(u)] for u in slots]) + wl.exploration
        cum = np.cumsum(weights)
        u = self.rng.random() * cum[-1]
        k = int(np.searchsorted(cum, u, side="right"))
        return slots[min(k, len(slots) - 1)]

    def provider_class(self, identity: str) -> str:
        return self.classes[identity]

    def draw_score(self, provider: str) -> float:
        dist = self.sc.workload.scores[self.provider_class(provider)]
        x = round(dist.ppf(self.rng.random()), 4)
        return min(1.0, max(1e-4, x))

    def honest_traffic(self, block: int) -> None:
        rate = self.sc.workload.tx_rate
        count = int(rate) + (1 if self.rng.random() < rate - int(rate) else 0)
        for _ in range(count):
            client = self.clients[int(self.rng.random() * len(self.clients))]
            provider = self.pick_provider(client)
            self.emit(block, client, provider, self.draw_score(provider))

    def launch_attack(self, block: int) -> None:
        atk = self.sc.attack
        vec = self.report.snapshots[-1].vec
        g = self.replayer.graph
        honest = [u for u in self.active if self.classes[u] == "Honest"]
        if atk.target != "auto":
            target = atk.target
            if target not in g.index:
                raise ScenarioError(f"attack target {target!r} is not a known user")
        else:
            ranked = sorted(honest, key=lambda u: (-vec.rep[g.idx(u)], g.idx(u)))
            target = ranked[0] if atk.kind == "badmouth" else ranked[-1]
        info = {"kind": atk.kind, "target": target, "onset_block": block,
                "origin": atk.origin, "raters": []}
        if atk.kind == "endorse":
            candidates = [u for u in self.population if u != target]
            rater = min(candidates, key=lambda u: (-vec.rep_pos[g.idx(u)], g.idx(u)))
            info["raters"] = [rater]
            info["rater_rep_pos"] = float(vec.rep_pos[g.idx(rater)])
            for _ in range(atk.total_ratings):
                self.emit(block, rater, target, atk.score, prefix="atk")
        else:
            if atk.kind == "sybil" or atk.origin == "fresh":
                raters = [self._fresh_identity() for _ in range(atk.attackers)]
                tag = "Sybil" if atk.kind == "sybil" else "BadMouther"
                for r in raters:
                    self.classes[r] = tag
            else:
                # long-standing identities with the highest overall reputation
                pool = [u for u in self.population if u != target]
                pool.sort(key=lambda u: (-vec.rep[g.idx(u)], g.idx(u)))
                raters = pool[:atk.attackers]
            info["raters"] = raters
            for r in raters:
                for _ in range(atk.ratings_per_attacker):
                    self.emit(block, r, target, atk.score, prefix="atk")
        self.report.attack = info

    def whitewash_check(self, snap: Snapshot) -> None:
        g = self.replayer.graph
        vec = snap.vec
        for rec in self.whitewash_open:
            if rec["epochs_to_exceed"] is None and \
                    vec.rep[g.idx(rec["new"])] > rec["abandoned_rep"]:
                rec["epochs_to_exceed"] = snap.epoch - rec["epoch"]
        for slot, ident in enumerate(self.active):
            if self.classes[ident] != "Whitewasher":
                continue
            i = g.idx(ident)
            rated = any(True for (a, b) in g.edges if b == i)
            if rated and vec.rep[i] < self.bootstrap and vec.rep_neg[i] > self.bootstrap:
                if self.reserve_ptr >= len(self.reserved):
                    continue
                new = self._fresh_identity()
                self.classes[new] = "Whitewasher"
                self.active[slot] = new
                rec = {"abandoned": ident, "new": new, "epoch": snap.epoch,
                       "block": snap.block, "abandoned_rep": float(vec.rep[i]),
                       "epochs_to_exceed": None}
                self.whitewash_open.append(rec)
                self.report.whitewash.append(rec)

    def run(self) -> tuple[Ledger, MetricsReport]:
        sc = self.sc
        for block in range(sc.n_blocks):
            if block % sc.decay_epoch == 0:
                snap = self.snapshot(block)
                self.whitewash_check(snap)
            if sc.attack is not None and block == sc.attack.onset_block:
                self.launch_attack(block)
            self.honest_traffic(block)
        self.whitewash_check(self.snapshot(sc.n_blocks))
        return self.ledger, self.report


def run(scenario: Scenario) -> tuple[Ledger, MetricsReport]:
    """Simulate ``scenario``; deterministic in the scenario (including seed)."""
    return _Run(scenario).run()


def attack_effect(base: Scenario, attack: Attack,
                  baseline: tuple[Ledger, MetricsReport] | None = None) -> dict:
    """Run ``base`` with and without ``attack`` and compare the target.

    Both runs share the seed, so honest traffic is identical up to the first
    reputation recomputation after the onset, which is where the comparison
    is taken.
    """
    if base.attack is not None:
        raise ScenarioError("base scenario must not carry an attack")
    _, ref = baseline if baseline is not None else run(base)
    _, rep = run(replace(base, attack=attack))
    block = min(s.block for s in rep.snapshots if s.block > attack.onset_block)
    target = rep.attack["target"]
    out = {"target": target, "block": block, "raters": rep.attack["raters"],
           "bootstrap": rep.bootstrap}
    for name in ("rep_pos", "rep_neg", "rep"):
        out[f"{name}_gain"] = rep.value(target, block, name) - ref.value(target, block, name)
    out["rank_baseline"] = ref.rank_of(target, block)
    out["rank_attacked"] = rep.rank_of(target, block)
    out["rank_shift"] = out["rank_attacked"] - out["rank_baseline"]
    if "rater_rep_pos" in rep.attack:
        out["rater_rep_pos"] = rep.attack["rater_rep_pos"]
    return out


def recompute_snapshot(ledger: Ledger, block: int, scenario: Scenario) -> ReputationVector:
    """Reputation at ``block`` rebuilt from the ledger alone."""
    graph = replay(ledger.before_block(block), scenario.experience, scenario.theta)
    return compute_reputation(graph, scenario.reputation)


def write_outputs(ledger: Ledger, report: MetricsReport, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ledger.save(out / "ledger.jsonl")
    (out / "metrics.csv").write_text(report.metrics_csv(), encoding="utf-8")
    (out / "iterations.csv").write_text(report.iterations_csv(), encoding="utf-8")
    (out / "edges.csv").write_text(report.edges_csv(), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2) + "\n",
                                      encoding="utf-8")


# experience curves ---------------------------------------------------------

def exp_curve(params: ExperienceParams, schedule: Sequence[float]) -> list[float]:
    """Experience value after each score of ``schedule``, from bootstrap."""
    if len(schedule) == 0:
        raise ConfigError("schedule must be non-empty")
    state = ExperienceState.bootstrap(params)
    out = []
    for score in schedule:
        state = update_experience(state, score, params)
        out.append(state.current)
    return out


def steps_to_reach(trace: Sequence[float], level: float) -> int | None:
    """1-based step at which ``trace`` first reaches ``level``."""
    for t, v in enumerate(trace, start=1):
        if v >= level:
            return t
    return None


# convergence benchmark -----------------------------------------------------

def random_experience_matrix(n: int, seed: int = 0, out_degree: float = 10.0
                             ) -> sparse.csr_matrix:
    """Directed Erdos-Renyi graph with uniform (0, 1) experience weights.

    Each ordered pair ``(i, j)``, ``i != j``, is an edge with probability
    ``out_degree / (n - 1)``.
    """
    if n < 1:
        raise ConfigError("n must be positive")
    if n == 1:
        return sparse.csr_matrix((1, 1))
    rng = make_rng(seed, n)
    p = min(1.0, out_degree / (n - 1))
    rows, cols = [], []
    for i in range(n):
        mask = np.flatnonzero(rng.random(n - 1) < p)
        targets = mask + (mask >= i)
        rows.append(np.full(len(targets), i, dtype=np.int64))
        cols.append(targets)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = rng.random(len(rows))
    vals[vals == 0.0] = 0.5  # keep weights strictly inside (0, 1)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass
class BenchRow:
    n: int
    iterations: int
    residuals: list[float]
    converged: bool


def convergence_bench(sizes: Sequence[int], seed: int = 0, out_degree: float = 10.0,
                      params: ReputationParams = ReputationParams(),
                      theta: float = 0.5) -> list[BenchRow]:
    rows = []
    for n in sizes:
        e = random_experience_matrix(n, seed, out_degree)
        a_pos, a_neg = build_transition_matrices(split_experience(e, theta))
        vec = solve(a_pos, a_neg, params, record_trace=True)
        rows.append(BenchRow(n, vec.iterations, vec.residual_trace, vec.converged))
    return rows


def bench_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "iteration", "residual"])
    for r in rows:
        for k, res in enumerate(r.residuals, start=1):
            w.writerow([r.n, k, fmt(res)])
    return buf.getvalue()
