"""Command-line front end: figure data as CSV/JSON and the protocol-script oracle.

Exit codes: 0 success, 2 usage or parse error, 3 empty post-selection branch,
4 infeasible optimization.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable, Optional, Sequence

import numpy as np

from . import concentration as conc
from . import purification as pur
from .core import EmptyBranchError, PureState, to_pure
from .jc import LT_MAX
from .measures import BELL_STATES, PHI_PLUS, BellDiagonal, bell_decompose, espp, fidelity, linear_entropy, negativity
from .oracle import ScriptError, expand_symbolic, parse_script, run
from .oracle.script import evaluate_expression

EXIT_OK, EXIT_USAGE, EXIT_EMPTY, EXIT_INFEASIBLE = 0, 2, 3, 4


class UsageError(Exception):
    pass


class Infeasible(Exception):
    pass


# -- value parsing


def _number(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return float(evaluate_expression(text))
    except (ValueError, SyntaxError, ZeroDivisionError):
        raise UsageError(f"cannot read number {text!r}") from None


def parse_grid(text: str) -> list[float]:
    """``a,b,c`` lists values; ``start:stop:num`` is a linspace including stop;
    ``start:stop:num:open`` excludes stop. Entries may use ``pi`` and ``sqrt``."""
    text = text.strip()
    if not text:
        raise UsageError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "open"):
            raise UsageError(f"bad range {text!r}; use start:stop:num[:open]")
        lo, hi = _number(parts[0]), _number(parts[1])
        try:
            num = int(parts[2])
        except ValueError:
            raise UsageError(f"bad point count {parts[2]!r}") from None
        if num < 1:
            raise UsageError("a grid needs at least one point")
        return [float(x) for x in np.linspace(lo, hi, num, endpoint=len(parts) == 3)]
    vals = [_number(t) for t in text.split(",") if t.strip()]
    if not vals:
        raise UsageError("empty grid")
    return vals


def parse_int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None
    if not vals:
        raise UsageError("empty integer list")
    return vals


def read_config(path: str) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment; keys use the long-flag names."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


# -- output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(f"{float(x):.12g}")
        return x if math.isfinite(x) else None
    return x


def render(columns: Sequence[str], rows: list[Sequence], fmt: str, meta: dict) -> str:
    if fmt == "json":
        payload = {
            "meta": {k: _jsonable(v) for k, v in meta.items()},
            "rows": [{c: _jsonable(v) for c, v in zip(columns, r)} for r in rows],
        }
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# -- commands; each returns (columns, rows)


def cmd_concentrate_figure(args) -> tuple[list[str], list[list]]:
    alphas = parse_grid(args.alpha_grid)
    bounds = parse_grid(args.bounds)
    if any(b <= 0 for b in bounds):
        raise UsageError("bounds must be positive")
    if any(b > args.lt_max for b in bounds):
        raise UsageError(f"bounds exceed the feasibility limit lt-max = {args.lt_max:.6g}")
    if any(not 0 <= a < conc.ALPHA_SYMMETRIC_MAX + 1e-12 for a in alphas):
        raise UsageError("alpha values must lie in [0, 1/sqrt(2)]")
    rows = []
    for b in bounds:
        for a in alphas:
            pair = conc.InputPair(min(a, conc.ALPHA_SYMMETRIC_MAX))
            r = conc.optimal_time(pair, b, epsilon=args.epsilon)
            rows.append([b, a, pair.espp, r.p_max, r.lambda_t_star, r.condition_residual, r.branch_espp, r.feasible])
    if rows and not any(r[-1] for r in rows):
        raise Infeasible("no feasible interaction time for any grid point")
    return ["bound", "alpha", "E_S", "P_max", "lambda_t_star", "residual", "branch_espp", "feasible"], rows


def cmd_trig_circle(args) -> tuple[list[str], list[list]]:
    table = conc.trig_circle(args.k_max)
    return ["k", "theta", "cos", "sin"], [[int(r[0]), r[1], r[2], r[3]] for r in table]


def cmd_purify_surface(args) -> tuple[list[str], list[list]]:
    ps = parse_grid(args.p_grid)
    if any(not 0 < p <= 1 for p in ps):
        raise UsageError("P values must lie in (0, 1]")
    if args.n:
        rows = []
        for n in parse_int_list(args.n):
            if n < 2:
                raise UsageError("photon numbers must be >= 2")
            for p in ps:
                d = BellDiagonal(p, 0.0, 1 - p, 0.0)
                out = pur.exact_round(n, d, d)
                ideal = (2 * p - 1) / (p * p + (1 - p) ** 2)
                rows.append([p, n, negativity(out.post_state), ideal, 1 - out.ideal_fidelity,
                             out.field_projection_probability, out.cumulative_probability])
        return ["P", "n", "E_N_exact", "E_N_ideal", "infidelity_to_ideal", "field_probability",
                "cumulative_probability"], rows
    if args.q_max < 1:
        raise UsageError("q-max must be >= 1")
    rows = []
    for p in ps:
        stages = pur.iterate_stages(p, args.q_max)
        for q in range(1, args.q_max + 1):
            d, printed = pur.iterate_ideal(p, q)
            rows.append([p, q, d.a_plus, float(np.sum(d.weights**2)), printed, stages[q - 1].cumulative_probability])
    return ["P", "q", "A_plus", "purity", "probability_printed", "probability_stages"], rows


def cmd_werner(args) -> tuple[list[str], list[list]]:
    ps = parse_grid(args.p_grid)
    if any(not 0.5 < p <= 1 for p in ps):
        raise UsageError("Werner P values must lie in (1/2, 1]")
    rows = []
    for p in ps:
        w0 = pur.werner_state(p)
        w1 = pur.werner_round(p, 1)
        w2 = pur.werner_round(p, 2)
        d1, _ = bell_decompose(w1)
        printed = pur.werner_round1_printed(p)
        rows.append([
            p, (1 - p) / 3,
            negativity(w0), negativity(w1), negativity(w2),
            1 - fidelity(PHI_PLUS, w2),
            negativity(pur.naive_reiteration(p, second_copy_round1=True)),
            negativity(pur.naive_reiteration(p, second_copy_round1=False)),
            *d1.weights, *printed,
        ])
    cols = ["P", "Q", "E_N_in", "E_N_round1", "E_N_round2", "infidelity_round2", "E_N_naive_r1r1",
            "E_N_naive_w_r1", "r1_phi_plus", "r1_phi_minus", "r1_psi_plus", "r1_psi_minus",
            "r1_printed_phi_plus", "r1_printed_phi_minus", "r1_printed_psi_plus", "r1_printed_psi_minus"]
    return cols, rows


def cmd_mems_curve(args) -> tuple[list[str], list[list]]:
    gs = parse_grid(args.g_grid)
    if any(not 0 <= g <= 1 for g in gs):
        raise UsageError("g values must lie in [0, 1]")
    rows = []
    for g in gs:
        m = pur.MemsParam(g)
        rin, rout = pur.mems_state(m), pur.mems_purify(m)
        rsim, psim = pur.mems_purify_simulated(m)
        rows.append([g, negativity(rin), linear_entropy(rin), negativity(rout), linear_entropy(rout),
                     negativity(rsim), linear_entropy(rsim), psim])
    return ["g", "E_N_in", "S_l_in", "E_N_out", "S_l_out", "E_N_sim", "S_l_sim", "probability_sim"], rows


def cmd_simplified(args) -> tuple[list[str], list[list]]:
    depth = args.m_depth
    if depth < 0:
        raise UsageError("m-depth must be non-negative")
    rows = []
    for m1 in range(depth + 1):
        for m2 in range(depth + 1):
            sp = pur.SimplifiedParams(m1, m2)
            _, _, _, f = pur.simplified_round(sp, args.p)
            _, phi_x, _, _ = pur.simplified_round_exact(sp, args.p)
            best_exact = max(fidelity(b, phi_x) for b in BELL_STATES) if phi_x is not None else 0.0
            rows.append([m1, m2, sp.theta1, sp.theta2, abs(math.cos(sp.theta1)), abs(math.cos(sp.theta2)),
                         abs(math.sin(math.sqrt(3) * sp.theta2)), 1 - f, 1 - best_exact])
    return ["m1", "m2", "theta1", "theta2", "abs_cos_theta1", "abs_cos_theta2", "three_photon_amplitude",
            "infidelity_phi_minus", "infidelity_exact_nearest_bell"], rows


def _state_summary(result, keep: Optional[str]) -> dict:
    state = result.state
    labels = list(result.labels)
    if keep:
        names = [s.strip() for s in keep.split(",") if s.strip()]
        try:
            state = result.reduced(names)
        except ValueError:
            raise UsageError(f"cannot keep {keep!r}; remaining subsystems are {labels}") from None
        labels = [lb for lb in labels if lb in names]
    rho = state.density() if isinstance(state, PureState) else state
    summary = {
        "labels": labels,
        "dims": list(state.space.dims),
        "purity": rho.purity(),
        "populations": [float(x) for x in np.real(np.diag(rho.matrix))],
    }
    if len(labels) == 2:
        summary["negativity"] = negativity(rho, (0,))
        if abs(rho.purity() - 1) < 1e-10:
            summary["espp"] = espp(to_pure(rho), (0,))
        if state.space.dims == (2, 2):
            d, resid = bell_decompose(rho)
            summary["bell_weights"] = [float(x) for x in d.weights]
            summary["bell_residual"] = resid
    return summary


def cmd_oracle(args, out) -> int:
    try:
        with open(args.script, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise UsageError(str(err)) from None
    if args.expand_symbolic:
        text = expand_symbolic(text)
    protocol = parse_script(text)
    result = run(protocol, lt_max=args.lt_max)
    payload = {
        "script": args.script,
        "probability": result.probability,
        "log": [{"line": e.line, "step": e.step, "probability": e.probability} for e in result.log],
        "state": _state_summary(result, args.keep),
    }

    def clean(x):
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, list):
            return [clean(v) for v in x]
        return _jsonable(x)

    out.write(json.dumps(clean(payload), indent=2) + "\n")
    return EXIT_OK


COMMANDS: dict[str, Callable] = {
    "concentrate-figure": cmd_concentrate_figure,
    "trig-circle": cmd_trig_circle,
    "purify-surface": cmd_purify_surface,
    "werner": cmd_werner,
    "mems-curve": cmd_mems_curve,
    "simplified": cmd_simplified,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--lt-max", type=_number, default=LT_MAX, help="feasibility bound on lambda t")
    common.add_argument("--config", help="file of key=value defaults; flags override it")

    p = _Parser(prog="cavitydistill", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("concentrate-figure", parents=[common], help="P_max against E_S for several bounds")
    s.add_argument("--alpha-grid", default="0:sqrt(0.5):101:open")
    s.add_argument("--bounds", default="pi,5*pi,20*pi")
    s.add_argument("--epsilon", type=_number, default=1e-3)

    s = sub.add_parser("trig-circle", parents=[common], help="k pi/sqrt2 on the unit circle")
    s.add_argument("--k-max", type=int, default=50)

    s = sub.add_parser("purify-surface", parents=[common], help="iterated purification; with --n, exact rounds")
    s.add_argument("--p-grid", default="0.5:1:11")
    s.add_argument("--q-max", type=int, default=10)
    s.add_argument("--n", help="comma-separated photon numbers for exact single rounds")

    s = sub.add_parser("werner", parents=[common], help="two-round Werner purification")
    s.add_argument("--p-grid", default="0.55:0.95:9")

    s = sub.add_parser("mems-curve", parents=[common], help="MEMS before and after purification")
    s.add_argument("--g-grid", default="0:1:11")

    s = sub.add_parser("simplified", parents=[common], help="single-photon variant over (m1, m2)")
    s.add_argument("--m-depth", type=int, default=8)
    s.add_argument("--p", type=_number, default=0.9, help="input Phi+ weight")

    s = sub.add_parser("oracle", parents=[common], help="run a .qps protocol script")
    s.add_argument("script")
    s.add_argument("--expand-symbolic", action="store_true", help="evaluate pi/sqrt expressions after lt/angle/alpha")
    s.add_argument("--keep", help="comma-separated subsystems to keep in the state summary")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        conf = read_config(args.config)
    except OSError as err:
        raise UsageError(str(err)) from None
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for k, v in conf.items():
        if k not in known or k in ("help", "config"):
            raise UsageError(f"unknown config key {k!r} for {args.command}")
        act = known[k]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        else:
            defaults[k] = act.type(v) if act.type else v
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        if args.lt_max <= 0:
            raise UsageError("lt-max must be positive")
        out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
        try:
            if args.command == "oracle":
                return cmd_oracle(args, out)
            columns, rows = COMMANDS[args.command](args)
            meta = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config")}
            out.write(render(columns, rows, args.format, meta))
        finally:
            if out is not sys.stdout:
                out.close()
    except (UsageError, ScriptError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyBranchError as err:
        print(f"empty branch: {err}", file=sys.stderr)
        return EXIT_EMPTY
    except Infeasible as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
