"""Command-line front end.

Data goes to stdout (or ``--out``), diagnostics to stderr. Exit codes: 0 on
success, 1 on usage errors, 2 on data or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import simulator
from .config import EngineConfig
from .experience import ConfigError
from .graph import GraphError, TrustGraph
from .ledger import Ledger, LedgerError, replay
from .reputation import ReputationVector, SolverError, compute_reputation, rank
from .trust import rank_counterparts

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

DATA_ERRORS = (ConfigError, GraphError, LedgerError, SolverError, OSError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _engine_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("engine parameters (override the config file)")
    g.add_argument("--config", type=Path, help="engine config JSON (see `init`)")
    for name, typ in [("exp0", float), ("min-exp", float), ("max-exp", float),
                      ("theta-co", float), ("theta-unco", float), ("alpha", float),
                      ("beta", float), ("delta", float), ("gamma", float),
                      ("d", float), ("tol", float), ("max-iters", int),
                      ("w1", float), ("theta", float), ("decay-epoch", int)]:
        g.add_argument(f"--{name}", type=typ, default=None)
    return p


def _config(args) -> EngineConfig:
    cfg = EngineConfig.load(args.config) if args.config else EngineConfig()
    keys = ["exp0", "min_exp", "max_exp", "theta_co", "theta_unco", "alpha", "beta",
            "delta", "gamma", "d", "tol", "max_iters", "w1", "theta", "decay_epoch"]
    return cfg.override(**{k: getattr(args, k) for k in keys})


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _histogram(graph: TrustGraph) -> list[int]:
    values = np.array([s.current for s in graph.edges.values()])
    counts, _ = np.histogram(values, bins=10, range=(0.0, 1.0))
    return [int(c) for c in counts]


def _load_ledger(path: Path, cfg: EngineConfig, flag_epoch) -> tuple[Ledger, int]:
    ledger = Ledger.load(path, decay_epoch=cfg.decay_epoch)
    return ledger, (flag_epoch if flag_epoch is not None else ledger.decay_epoch)


def cmd_init(args) -> int:
    _emit(EngineConfig().dumps(), args.out)
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = _config(args)
    ledger, epoch = _load_ledger(args.ledger, cfg, args.decay_epoch)
    graph = replay(ledger, cfg.experience, cfg.theta, decay_epoch=epoch)
    _emit(graph.dumps(), args.out)
    hist = _histogram(graph)
    print(f"users: {graph.n}", file=sys.stderr)
    print(f"edges: {len(graph.edges)}", file=sys.stderr)
    print(f"events: {len(ledger)}  final block: {ledger.final_block}  "
          f"decay epoch: {epoch}", file=sys.stderr)
    print("exp histogram (10 bins over [0,1]): " + " ".join(map(str, hist)),
          file=sys.stderr)
    return EXIT_OK


def read_reputation_csv(path: Path, graph: TrustGraph) -> ReputationVector:
    """Reputation CSV aligned to ``graph``; unseen users get 1/N."""
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"user_id", "rep_pos", "rep_neg", "rep"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(need)}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                rows[rec["user_id"]] = (float(rec["rep_pos"]), float(rec["rep_neg"]),
                                        float(rec["rep"]))
            except (TypeError, ValueError):
                raise ValueError(f"{path}: line {lineno}: bad number") from None
    for user in rows:
        graph.intern(user)
    default = 1.0 / graph.n
    vals = np.array([rows.get(u, (default, 0.0, default)) for u in graph.users])
    return ReputationVector(vals[:, 0], vals[:, 1], rep=vals[:, 2])


def cmd_rank(args) -> int:
    cfg = _config(args)
    if args.ledger is not None:
        ledger, epoch = _load_ledger(args.ledger, cfg, args.decay_epoch)
        graph = replay(ledger, cfg.experience, cfg.theta, decay_epoch=epoch)
    else:
        graph = TrustGraph.load(args.graph, cfg.theta)
    if args.reputation is not None:
        vec = read_reputation_csv(args.reputation, graph)
    elif graph.n == 0:
        vec = ReputationVector(np.zeros(0), np.zeros(0))
    else:
        vec = compute_reputation(graph, cfg.reputation)
        print(f"solver: {vec.iterations} iterations, residual {vec.final_residual:.3g}"
              + ("" if vec.converged else " (NOT converged)"), file=sys.stderr)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.trustor is None:
        w.writerow(["user_id", "rep_pos", "rep_neg", "rep"])
        for user, _ in rank(vec, graph.users):
            i = graph.index[user]
            w.writerow([user, fmt(vec.rep_pos[i]), fmt(vec.rep_neg[i]), fmt(vec.rep[i])])
    else:
        graph.idx(args.trustor)
        cands = args.candidates or [u for u in graph.users if u != args.trustor]
        w.writerow(["trustor", "trustee", "trust", "basis"])
        for user, score in rank_counterparts(graph, vec, args.trustor, cands, cfg.weights):
            w.writerow([args.trustor, user, fmt(score.value), score.basis.value])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def read_schedule(path: Path) -> list[float]:
    scores = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for tok in line.replace(",", " ").split():
            try:
                scores.append(float(tok))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: not a number: {tok!r}") from None
    return scores


def cmd_trace_exp(args) -> int:
    cfg = _config(args)
    trace = simulator.exp_curve(cfg.experience, read_schedule(args.schedule))
    lines = ["step,exp\n"] + [f"{t},{fmt(v)}\n" for t, v in enumerate(trace, start=1)]
    _emit("".join(lines), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = simulator.Scenario.load(args.scenario)
    if args.seed is not None:
        scenario = simulator.Scenario.from_dict({**scenario.to_dict(), "seed": args.seed})
    ledger, report = simulator.run(scenario)
    simulator.write_outputs(ledger, report, args.out)
    print(f"wrote {len(ledger)} events and {len(report.snapshots)} snapshots to {args.out}",
          file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    rows = simulator.convergence_bench(args.sizes, seed=args.seed,
                                       out_degree=args.out_degree,
                                       params=cfg.reputation, theta=cfg.theta)
    for r in rows:
        print(f"N={r.n}: {r.iterations} iterations"
              + ("" if r.converged else " (NOT converged)"), file=sys.stderr)
    _emit(simulator.bench_csv(rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _engine_flags()
    p = _Parser(prog="dertrust", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("init", help="print the default engine config")
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_init)

    s = sub.add_parser("replay", parents=[common], help="replay a ledger into a graph snapshot")
    s.add_argument("ledger", type=Path)
    s.add_argument("--out", type=Path, help="snapshot JSONL path (default stdout)")
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("rank", parents=[common], help="rank users by reputation or trust")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--ledger", type=Path)
    src.add_argument("--graph", type=Path)
    s.add_argument("--reputation", type=Path,
                   help="precomputed reputation CSV instead of solving")
    s.add_argument("--trustor", help="rank counterparts by trust from this user")
    s.add_argument("--candidates", nargs="+", help="restrict the trust ranking to these users")
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_rank)

    s = sub.add_parser("trace-exp", parents=[common], help="experience trace for a score schedule")
    s.add_argument("--schedule", type=Path, required=True)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_trace_exp)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("scenario", type=Path)
    s.add_argument("--out", type=Path, required=True, help="output directory")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("bench", parents=[common], help="solver convergence vs population size")
    s.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000, 8000, 16000])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-degree", type=float, default=10.0)
    s.add_argument("--out", type=Path)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        print(f"dertrust {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
