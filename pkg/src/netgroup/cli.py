"""Command-line front end: ``netgroup {analytic,simulate,communities,optimize,verify}``.

Every command writes a CSV (to ``--out`` or stdout) whose first lines are
``#`` comments echoing the resolved configuration.  Human-readable notes go
to stderr when the CSV occupies stdout.

Exit codes: 0 success, 1 parameter error, 2 input-file error, 3 property
violation (``verify`` only).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from contextlib import contextmanager
from importlib import resources
from typing import List, Optional, Sequence

import numpy as np

from . import analytics, epidemic, netgen
from .errors import InputError, NetgroupError, ParameterError
from .params import ModelParams, calibrate_alpha, validate

EXIT_OK, EXIT_PARAM, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2, 3

STANDIN = dict(N=310, m=28, p=0.18, q=0.01, seed=310)

# execution-only flags: they never change results, so they stay out of the echo
_NOT_ECHOED = {"func", "command", "workers", "out", "replicates_out", "gnuplot"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    """Shortest round-trip text for numbers; ints stay ints."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def parse_range(text: str) -> List[int]:
    """``"10"``, ``"2..40"`` (inclusive) or ``"5,10,20"``."""
    out: List[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise ParameterError(f"bad group-size range {text!r}") from None
    if not out:
        raise ParameterError(f"empty group-size range {text!r}")
    return out


def _split(text: str) -> List[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


@contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _note(args, msg: str) -> None:
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    print(msg, file=stream)


def _echo(fh, args, extra: Optional[dict] = None) -> None:
    fh.write(f"# netgroup {args.command}\n")
    items = {k: v for k, v in vars(args).items() if k not in _NOT_ECHOED}
    if extra:
        items.update(extra)
    for key in sorted(items):
        value = items[key]
        fh.write(f"# {key}={fmt(value) if not isinstance(value, str) else value}\n")


def _write_rows(fh, header: Sequence[str], rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])


def _gnuplot(path: str, data: str, xcol: int, ycol: int, groupcol: int, groups, title: str) -> None:
    plots = ", ".join(
        f"'{data}' using {xcol}:(stringcolumn({groupcol}) eq '{g}' ? ${ycol} : 1/0) "
        f"with linespoints title '{g}'"
        for g in groups
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("set datafile separator ','\nset key autotitle columnhead\n")
        fh.write(f"set title '{title}'\nset xlabel 'group size n'\nset ylabel 'tests'\n")
        fh.write(f"plot {plots}\n")


def _seed(args) -> int:
    if args.seed is None:
        print("notice: no --seed given, using seed 0", file=sys.stderr)
        args.seed = 0
    return args.seed


# -- analytic --------------------------------------------------------------------


def _model(args, n: int) -> ModelParams:
    """Params from flags; ``m``/``p``/``q`` default to a structureless stand-in."""
    has_net = args.m is not None and args.p is not None and args.q is not None
    if args.alpha is not None:
        if not has_net:
            raise ParameterError("--alpha needs --m, --p and --q")
        return ModelParams.from_alpha(args.N, n, args.m, args.p, args.q, args.alpha)
    if args.v is None:
        raise ParameterError("give --v or --alpha")
    if has_net:
        return ModelParams(args.N, n, args.m, args.p, args.q, args.v)
    # Dorfman and lower bound do not depend on the network; q = p makes the
    # placeholder network structureless so validation still applies.
    return ModelParams(args.N, n, 2 if args.N > 2 else 1, 1.0, 1.0, args.v)


def cmd_analytic(args) -> int:
    ns = parse_range(args.n)
    has_net = args.m is not None and args.p is not None and args.q is not None
    strategies = _split(args.strategies) if args.strategies else (
        ["dorfman", "network", "lower-bound"] if has_net else ["dorfman", "lower-bound"])
    for s in strategies:
        if s not in analytics.STRATEGIES:
            raise ParameterError(f"unknown strategy {s!r}")
        if s == "network" and not has_net:
            raise ParameterError("network strategy needs --m, --p and --q")
    rows = []
    for n in ns:
        params = _model(args, n)
        report = validate(params)
        if not report.ok:
            raise ParameterError("invalid parameters: " + "; ".join(report.violations))
        for s in strategies:
            value = analytics.expected_tests(params, s)
            exact = report.exact if s == "network" else report.N_divisible_by_n
            rows.append((s, n, value, exact))
    with _output(args.out) as fh:
        _echo(fh, args)
        _write_rows(fh, ["strategy", "n", "value", "exact"], rows)
    for s, n, value, _ in rows:
        shown = f"{value:.2f}"
        if s == "lower-bound":
            shown += f"  displayed {math.ceil(value - 1e-9)} (ceil)"
        _note(args, f"{s:>12} n={n}: {shown}")
    if args.gnuplot and args.out not in (None, "-"):
        _gnuplot(args.gnuplot, args.out, 2, 3, 1, strategies, "expected tests")
    return EXIT_OK


# -- networks --------------------------------------------------------------------


def standin_network() -> netgen.Network:
    """The shipped synthetic SBM (N=310, m=28, p=0.18, q=0.01)."""
    data = resources.files("netgroup").joinpath("data/standin_sbm310.edges").read_bytes()
    return netgen.load_edge_list(data)


def standin_partition(network: netgen.Network) -> netgen.Partition:
    data = resources.files("netgroup").joinpath("data/standin_sbm310_partition.csv").read_bytes()
    return netgen.read_partition(network, data)


def _sbm_spec(text: str):
    parts = _split(text)
    if len(parts) != 4:
        raise ParameterError("--sbm expects N,m,p,q")
    try:
        return int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
    except ValueError:
        raise ParameterError(f"bad --sbm value {text!r}") from None


def _load_network(args):
    """Return ``(network, ground_truth_partition_or_None)``."""
    sources = [bool(args.edge_list), bool(args.sbm), bool(args.standin)]
    if sum(sources) != 1:
        raise ParameterError("choose exactly one of --edge-list, --sbm, --standin")
    if args.edge_list:
        try:
            return netgen.read_edge_list(args.edge_list), None
        except OSError as exc:
            raise InputError(str(exc)) from None
    if args.standin:
        net = standin_network()
        return net, standin_partition(net)
    N, m, p, q = _sbm_spec(args.sbm)
    net_seed = args.network_seed if args.network_seed is not None else args.seed
    return netgen.generate_sbm(N, m, p, q, seed=net_seed)


def _resolve_partition(args, network, truth):
    if args.partition:
        try:
            with open(args.partition, "rb") as fh:
                return netgen.read_partition(network, fh), "file"
        except OSError as exc:
            raise InputError(str(exc)) from None
    if getattr(args, "louvain", False) or truth is None:
        return netgen.louvain(network, seed=args.seed, resolution=args.resolution), "louvain"
    return truth, "ground-truth"


def cmd_communities(args) -> int:
    _seed(args)
    network, truth = _load_network(args)
    if args.partition:
        partition, source = _resolve_partition(args, network, truth)
    else:
        partition = netgen.louvain(network, seed=args.seed, resolution=args.resolution)
        source = "louvain"
    stats = netgen.partition_stats(partition)
    p_hat, q_hat = netgen.estimate_pq(network, partition)
    summary = dict(nodes=network.node_count, edges=network.edge_count, source=source,
                   communities=stats.communities, mean_size=stats.mean_size,
                   min_size=stats.min_size, max_size=stats.max_size,
                   modularity=partition.modularity, p_hat=p_hat, q_hat=q_hat)
    with _output(args.out) as fh:
        _echo(fh, args, {f"result.{k}": v for k, v in summary.items()})
        netgen.write_partition(network, partition, fh)
    _note(args, " ".join(f"{k}={fmt(v)}" for k, v in summary.items()))
    return EXIT_OK


# -- simulate --------------------------------------------------------------------


def cmd_simulate(args) -> int:
    _seed(args)
    ns = parse_range(args.n)
    strategies = _split(args.strategy)
    for s in strategies:
        if s not in epidemic.SIM_STRATEGIES:
            raise ParameterError(f"unknown strategy {s!r}")
    if args.reps < 1:
        raise ParameterError("--reps must be >= 1")
    extra = {}
    if args.ensemble:
        if not args.sbm:
            raise ParameterError("--ensemble needs --sbm")
        N, m, p, q = _sbm_spec(args.sbm)
        alpha = args.alpha
        if alpha is None:
            if args.v is None:
                raise ParameterError("give --alpha or --v")
            alpha = calibrate_alpha(N, m, p, q, args.v)
        extra["resolved.alpha"] = alpha

        def run(s, n):
            return epidemic.monte_carlo_sbm(N, m, p, q, alpha, n, s, args.reps, args.seed,
                                            args.workers)
    else:
        network, truth = _load_network(args)
        partition = None
        if "network" in strategies or args.alpha is None:
            partition, source = _resolve_partition(args, network, truth)
            extra["resolved.partition"] = source
        alpha = args.alpha
        if alpha is None:
            if args.v is None:
                raise ParameterError("give --alpha or --v")
            p_hat, q_hat = netgen.estimate_pq(network, partition)
            alpha = calibrate_alpha(network.node_count, partition.effective_m(), p_hat,
                                    q_hat or 0.0, args.v)
        if not 0.0 <= alpha <= 1.0:
            raise ParameterError("--alpha must lie in [0, 1]")
        extra["resolved.alpha"] = alpha
        extra["resolved.nodes"] = network.node_count
        extra["resolved.edges"] = network.edge_count

        def run(s, n):
            return epidemic.monte_carlo(network, partition, alpha, n, s, args.reps, args.seed,
                                        args.workers)

    results = [run(s, n) for n in ns for s in strategies]
    summary = [(st.strategy, st.n, st.mean, st.std_error, st.replicates) for st in results]
    with _output(args.out) as fh:
        _echo(fh, args, extra)
        _write_rows(fh, ["strategy", "n", "mean", "std_error", "reps"], summary)
    if args.replicates_out:
        with _output(args.replicates_out) as fh:
            _echo(fh, args, extra)
            rows = (
                (st.strategy, st.n, r, st.seed_nodes[r], st.infected_counts[r],
                 st.positive_groups[r], st.replicate_tests[r])
                for st in results for r in range(st.replicates)
            )
            _write_rows(fh, ["strategy", "n", "replicate", "seed_node", "infected",
                             "positive_groups", "tests"], rows)
    for row in summary:
        _note(args, f"{row[0]:>8} n={row[1]}: mean={row[2]:.3f} se={row[3]:.3f}")
    if args.gnuplot and args.out not in (None, "-"):
        _gnuplot(args.gnuplot, args.out, 2, 3, 1, strategies, "mean tests per replicate")
    return EXIT_OK


# -- optimize --------------------------------------------------------------------


def cmd_optimize(args) -> int:
    lo_hi = parse_range(args.range)
    lo, hi = min(lo_hi), max(lo_hi)
    strategies = _split(args.strategy)
    rows = []
    for s in strategies:
        if s not in analytics.STRATEGIES:
            raise ParameterError(f"unknown strategy {s!r}")
        if s == "network" and None in (args.m, args.p, args.q):
            raise ParameterError("network strategy needs --m, --p and --q")
        base = _model(args, max(1, min(lo, args.N)))
        if args.alpha is None and s == "network":
            base = base.calibrated()
        n_star, value = analytics.optimal_group_size(base, s, (lo, hi))
        rows.append((s, n_star, value))
    with _output(args.out) as fh:
        _echo(fh, args)
        _write_rows(fh, ["strategy", "n_star", "expected_tests"], rows)
    for s, n_star, value in rows:
        _note(args, f"{s:>12}: n*={n_star} expected tests {value:.4f}")
    return EXIT_OK


# -- verify ----------------------------------------------------------------------


def cmd_verify(args) -> int:
    _seed(args)
    pts, sweeps = analytics.theorem_grid(args.points, args.sweeps, args.sweep_points,
                                    args.boundary, args.seed)
    report = analytics.verify_theorem1(pts, sweeps)
    rows = []
    for res in report.points:
        pr = res.params
        rows.append((pr.N, pr.n, pr.m, pr.p, pr.q, pr.v, pr.alpha, res.lower, res.network,
                     res.dorfman, res.status))
    with _output(args.out) as fh:
        _echo(fh, args)
        _write_rows(fh, ["N", "n", "m", "p", "q", "v", "alpha", "T_LB", "E_TNG", "E_TD",
                         "status"], rows)
    counts = {}
    for res in report.points:
        key = res.status.split(":")[0]
        counts[key] = counts.get(key, 0) + 1
    _note(args, f"checked {len(report.points)} points in {len(sweeps)} sweeps + "
                f"{len(pts)} singles; " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
          + f"; monotonicity violations={len(report.monotonicity_violations)}")
    return EXIT_OK if report.ok else EXIT_VIOLATION


# -- parser ----------------------------------------------------------------------


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, required=True, help="population size")
    p.add_argument("--v", type=float, help="prevalence")
    p.add_argument("--alpha", type=float, help="transmission probability (implies v)")
    p.add_argument("--m", type=int, help="community size")
    p.add_argument("--p", type=float, help="within-community edge probability")
    p.add_argument("--q", type=float, help="between-community edge probability")


def _network_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--edge-list", help="edge-list file")
    p.add_argument("--sbm", help="generate an SBM: N,m,p,q")
    p.add_argument("--standin", action="store_true",
                   help="use the shipped synthetic 310-node network")
    p.add_argument("--network-seed", type=int, help="SBM generation seed (default: --seed)")
    p.add_argument("--partition", help="node,community CSV; skips detection")
    p.add_argument("--resolution", type=float, default=1.0, help="Louvain resolution")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netgroup", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analytic", help="closed-form expected tests over group sizes")
    _model_flags(a)
    a.add_argument("--n", required=True, help="group sizes: 10, 2..40 or 5,10,20")
    a.add_argument("--strategies", help="comma list of dorfman,network,lower-bound")
    a.add_argument("--out")
    a.add_argument("--gnuplot", help="also write a gnuplot script here")
    a.set_defaults(func=cmd_analytic)

    s = sub.add_parser("simulate", help="Monte Carlo epidemics and two-stage testing")
    _network_flags(s)
    s.add_argument("--louvain", action="store_true",
                   help="detect communities even when ground truth is known")
    s.add_argument("--ensemble", action="store_true",
                   help="with --sbm: draw a fresh network every replicate")
    s.add_argument("--strategy", default="dorfman,network,perfect")
    s.add_argument("--n", required=True)
    s.add_argument("--alpha", type=float)
    s.add_argument("--v", type=float, help="prevalence; alpha is calibrated from it")
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--replicates-out", help="per-replicate CSV")
    s.add_argument("--gnuplot")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("communities", help="Louvain communities and p/q estimates")
    _network_flags(c)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.set_defaults(func=cmd_communities)

    o = sub.add_parser("optimize", help="group size minimising expected tests")
    _model_flags(o)
    o.add_argument("--strategy", default="dorfman")
    o.add_argument("--range", default="1..100", help="inclusive range, e.g. 2..50")
    o.add_argument("--out")
    o.set_defaults(func=cmd_optimize)

    v = sub.add_parser("verify", help="numerical check of the dominance theorem")
    v.add_argument("--points", type=int, default=1000)
    v.add_argument("--sweeps", type=int, default=20)
    v.add_argument("--sweep-points", type=int, default=50)
    v.add_argument("--boundary", type=int, default=100)
    v.add_argument("--seed", type=int)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ParameterError, NetgroupError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())


__all__ = ["main", "build_parser", "fmt", "parse_range", "standin_network", "standin_partition"]
