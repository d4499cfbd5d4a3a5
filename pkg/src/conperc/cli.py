"""Command-line entry point: ``conperc <subcommand> [options]``.

Every subcommand produces a table (columns + rows) emitted as CSV (default)
or as JSON with a metadata block.  Without ``--output`` the table goes to
stdout, or to ``$CONPERC_OUTPUT_DIR/<subcommand>.<format>`` when that
variable is set.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import os
import sys
from importlib import resources

from . import __version__
from . import asymptotics, detour, flower, reduction, strength
from .connectivity import Calculus
from .weights import DomainError, c_to_theta, p_to_theta

OUTPUT_DIR_ENV = "CONPERC_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


# -- parsing helpers --------------------------------------------------------

def parse_sweep(text: str) -> list[float]:
    """'a:b:s' -> [a, a+s, ..., b], b included when within half a step."""
    try:
        a, b, s = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"sweep must look like start:stop:step, got {text!r}") from None
    if s <= 0 or b < a:
        raise ConfigError("sweep needs step > 0 and stop >= start")
    count = int(math.floor((b - a) / s + 0.5))
    return [round(a + i * s, 12) for i in range(count + 1)]


def parse_int_range(text: str) -> list[int]:
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"range must look like A:B, got {text!r}") from None
    if b < a:
        raise ConfigError("range needs B >= A")
    return list(range(a, b + 1))


def _calculi(choice: str) -> list[Calculus]:
    if choice == "both":
        return [Calculus.CLASSICAL, Calculus.QUANTUM]
    return [Calculus.parse(choice)]


def _theta(calc: Calculus, w: float) -> float:
    return p_to_theta(w) if calc is Calculus.CLASSICAL else c_to_theta(w)


def _uv(args):
    if args.uv is None:
        raise ConfigError("--uv U V is required")
    U, V = args.uv
    if U < 1 or V < U:
        raise DomainError(f"need 1 <= U <= V, got U={U}, V={V}")
    return U, V


# -- subcommands ------------------------------------------------------------

def cmd_threshold(args):
    U, V = _uv(args)
    ns = [args.n] if args.n is not None else (parse_int_range(args.nrange) if args.nrange else [])
    rows = []
    for calc in _calculi(args.calculus):
        w = flower.threshold_exact(calc, U, V)
        rows.append([calc.value, U, V, None, None, w, _theta(calc, w)])
        for n in ns:
            w_n = flower.finite_size_threshold(calc, U, V, n, args.target)
            rows.append([calc.value, U, V, n, args.target, w_n, _theta(calc, w_n)])
    return ["calculus", "U", "V", "n", "target", "w_th", "theta_th"], rows, {}


def cmd_exponents(args):
    U, V = _uv(args)
    n_range = parse_int_range(args.nrange) if args.nrange else list(range(1, 14))
    rows = []
    for calc in _calculi(args.calculus):
        c = calc.value
        fit = flower.nu_fit(calc, U, V, n_range, args.target)
        ratio = strength.critical_ratio(calc, U, V)
        df_fit = strength.fractal_dimension_fit(calc, U, V)
        b_op = strength.beta_fit(calc, U, V, "order_parameter")
        b_sl = strength.beta_fit(calc, U, V, "slope")
        rows += [
            [c, "nu", "exact", flower.nu_exact(calc, U, V), None],
            [c, "nu", "fit", fit.exponent, fit.stderr],
            [c, "d_f", "ratio", strength.fractal_dimension_from_ratio(U, V, ratio), None],
            [c, "d_f", "fit", df_fit.exponent, df_fit.stderr],
            [c, "beta", "order_parameter", b_op.exponent, b_op.stderr],
            [c, "beta", "slope", b_sl.exponent, b_sl.stderr],
            [c, "hyperscaling_residual", "slope", strength.hyperscaling_residual(calc, U, V), None],
        ]
    return ["calculus", "quantity", "method", "value", "stderr"], rows, {"d": flower.dimension(U, V)}


def cmd_strength(args):
    U, V = _uv(args)
    ws = parse_sweep(args.sweep) if args.sweep else [round(0.05 * k, 12) for k in range(21)]
    n = args.n if args.n is not None else 150
    rows = []
    for calc in _calculi(args.calculus):
        for w, val, used in strength.strength_curve(calc, U, V, n, ws).points:
            rows.append([calc.value, w, val, used])
    return ["calculus", "w", "ln_strength", "n"], rows, {}


def cmd_asymptotics(args):
    if args.u is not None:
        U = args.u
        V = None
    else:
        U, V = _uv(args)
    if args.lnv is None and V is None:
        raise ConfigError("give --lnv X (with --u) or --uv U V")
    rep = asymptotics.table1_exponents(U, V, lnV=args.lnv) if V is None else asymptotics.table1_exponents(U, V)
    summary = rep.as_dict()
    rows = [[k, v] for k, v in _flatten(summary)]
    return ["quantity", "value"], rows, summary


def _flatten(d, prefix=""):
    for k, v in d.items():
        if isinstance(v, (tuple, list)):
            for i, x in enumerate(v):
                yield f"{prefix}{k}[{i}]", x
        else:
            yield f"{prefix}{k}", v


def cmd_detour(args):
    q_range = parse_int_range(args.q) if args.q else list(range(2, 9))
    if args.input:
        graph = detour.load_edge_list(args.input)
        curve = detour.real_network_resilience(
            graph, q_range, target=args.target, seed=args.seed, min_degree=args.min_degree,
            count=args.pairs, samples=args.samples, budget=args.budget,
            disjoint=args.disjoint, full_reduction=args.full_reduction,
            calculi=[c.value for c in _calculi(args.calculus)],
        )
        rows = [[r.q, r.calculus, r.theta_mean, r.theta_stderr, r.A, r.samples] for r in curve.rows]
        summary = {"pairs": [list(p) for p in curve.pairs], "omitted_q": curve.omitted,
                   "nodes": graph.node_count, "edges": graph.edge_count}
        return list(detour.ResilienceCurve.HEADER), rows, summary
    U, V = _uv(args)
    rows = []
    for calc in _calculi(args.calculus):
        for q in q_range:
            a_p, a_c = asymptotics.resilience_theory(U, V, q) if U >= 2 else (None, None)
            theory = a_p if calc is Calculus.CLASSICAL else a_c
            rows.append([q, calc.value, detour.flower_resilience(calc, U, V, q), theory])
    return ["q", "calculus", "A", "A_theory"], rows, {}


def cmd_decompose(args):
    U, V = _uv(args)
    n = args.n if args.n is not None else 3
    q = args.scale
    ens = flower.decompose_paths(U, V, n) if q == 1 else detour.flower_detour_ensemble(U, V, n, q)
    rows = [[length, count] for length, count in ens]
    return ["length", "count"], rows, {"total_paths": ens.total_paths}


def cmd_reduce(args):
    if not args.input or args.terminals is None:
        raise ConfigError("reduce needs --input PATH and --terminals A B")
    graph = detour.load_edge_list(args.input)
    A, B = args.terminals
    for t in (A, B):
        if t not in graph.adj:
            raise ConfigError(f"terminal {t} is not in the graph")
    rows = []
    for calc in _calculi(args.calculus):
        net = reduction.TwoTerminalNetwork([(u, v, args.weight) for u, v in graph.edges()], A, B)
        rows.append([calc.value, args.weight, reduction.reduce_two_terminal(calc, net)])
    return ["calculus", "weight", "value"], rows, {}


COMMANDS = {
    "threshold": cmd_threshold,
    "exponents": cmd_exponents,
    "strength": cmd_strength,
    "asymptotics": cmd_asymptotics,
    "detour": cmd_detour,
    "decompose": cmd_decompose,
    "reduce": cmd_reduce,
}


def _add_common(p, target=None):
    p.add_argument("--calculus", choices=["classical", "quantum", "both"], default="both")
    p.add_argument("--uv", nargs=2, type=int, metavar=("U", "V"))
    p.add_argument("--n", type=int)
    p.add_argument("--nrange", metavar="A:B")
    p.add_argument("--target", type=float, default=target)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", metavar="PATH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conperc", description="Classical and concurrence percolation on flowers and networks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("threshold", help="exact and finite-size thresholds"), 0.8)
    _add_common(sub.add_parser("exponents", help="nu, d_f, beta and the hyperscaling residual"), 0.8)
    p = _add_common(sub.add_parser("strength", help="percolating strength curves"))
    p.add_argument("--sweep", metavar="a:b:s")
    p = _add_common(sub.add_parser("asymptotics", help="large-V closed forms"))
    p.add_argument("--u", type=int)
    p.add_argument("--lnv", type=float)
    p = _add_common(sub.add_parser("detour", help="resilience factors"), 0.99)
    p.add_argument("--input", metavar="PATH")
    p.add_argument("--q", metavar="a:b")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--min-degree", type=int, default=7)
    p.add_argument("--budget", type=int, default=detour.DEFAULT_BUDGET)
    p.add_argument("--disjoint", choices=["edge", "vertex"], default="edge")
    p.add_argument("--full-reduction", action="store_true")
    p = _add_common(sub.add_parser("decompose", help="flower path decomposition"))
    p.add_argument("--scale", type=int, default=1, help="stretch factor q for the long arm")
    p = _add_common(sub.add_parser("reduce", help="reduce an edge-list network between two terminals"))
    p.add_argument("--input", metavar="PATH")
    p.add_argument("--terminals", nargs=2, type=int, metavar=("A", "B"))
    p.add_argument("--weight", type=float, default=0.5)
    return parser


# -- output -----------------------------------------------------------------

def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def render(command, config, columns, rows, summary, fmt) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        return buf.getvalue()
    doc = {
        "metadata": {
            "command": command,
            "config": config,
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        },
        "columns": list(columns),
        "rows": _clean([list(r) for r in rows]),
        "summary": _clean(summary),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def schema() -> dict:
    text = resources.files("conperc").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def _destination(args):
    if args.output:
        return args.output
    out_dir = os.environ.get(OUTPUT_DIR_ENV)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        return os.path.join(out_dir, f"{args.command}.{args.format}")
    return None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = {k: v for k, v in sorted(vars(args).items()) if k != "verbose"}
    try:
        columns, rows, summary = COMMANDS[args.command](args)
    except (ConfigError, DomainError, detour.EdgeListParseError, OSError) as exc:
        print(f"conperc {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, reduction.SolverError, detour.InfeasibleError) as exc:
        print(f"conperc {args.command}: computation failed: {exc}", file=sys.stderr)
        return 1
    text = render(args.command, config, columns, rows, summary, args.format)
    dest = _destination(args)
    if dest is None:
        sys.stdout.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
