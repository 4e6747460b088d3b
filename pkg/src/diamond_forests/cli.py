"""Command-line entry point: expansions, model evaluations, solver, MC, verify.

Output is a versioned JSON envelope (schema "diamond-forests/1") with sorted
keys, so identical invocations produce byte-identical reports.  Exact rational
quantities are serialized as "p/q" strings; floats use the shortest decimal
that round-trips.  Exit codes: 0 success, 1 verify ran but a check failed,
2 usage error, 3 numeric-domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .affine import (
    ForwardVarianceCurve,
    KernelSpec,
    mgf_value,
    riccati_residual,
    solve_riccati,
)
from .algebra import Tree, parse_poly
from .errors import DomainError
from .expansions import g_expansion, k_expansion, spx_g_expansion, specialize
from .mc import SimConfig, empirical_cumulants, empirical_mgf, simulate
from .models.bessel import bessel_laplace, bessel_laplace_series
from .models.chaos2 import (
    Chaos2State,
    chaos2_cumulants,
    constant_kernel,
    eigenvalue_cumulants,
)
from .models.levy import levy_alpha, levy_cgf
from .models.signature import (
    cameron_martin_cgf,
    cameron_martin_cgf_coeffs,
    cameron_martin_q,
    diamond_ito,
    diamond_strat,
    fawcett_sigma,
)
from .verification import SUITES, run_suite

SCHEMA_ID = "diamond-forests/1"


class UsageError(Exception):
    """Bad arguments or malformed input files (exit code 2)."""


# ---------------------------------------------------------------------------
# serialization


def _jsonable(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(
            value.numerator
        )
    if isinstance(value, Tree):
        return value.diamond_text()
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def render_json(envelope: dict) -> str:
    return json.dumps(_jsonable(envelope), sort_keys=True, indent=2) + "\n"


def _flatten(prefix: str, value, rows: List[Tuple[str, object]]) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, value))


def render_csv(envelope: dict) -> str:
    result = _jsonable(envelope["result"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    table = _tabular(result)
    if table is not None:
        header, rows = table
        writer.writerow(header)
        writer.writerows(rows)
    else:
        writer.writerow(["key", "value"])
        flat: List[Tuple[str, object]] = []
        _flatten("", result, flat)
        writer.writerows(flat)
    return buf.getvalue()


def _tabular(result: dict) -> Optional[Tuple[List[str], List[list]]]:
    """A natural table for results that are mostly one list of records."""
    if "grid" in result and "g" in result:
        return ["tau", "g"], [list(p) for p in zip(result["grid"], result["g"])]
    for key in ("estimates", "checks", "terms"):
        records = result.get(key)
        if isinstance(records, list) and records and all(
            isinstance(r, dict) for r in records
        ):
            header = sorted({k for r in records for k in r})
            return header, [[r.get(h, "") for h in header] for r in records]
    return None


def render_text(envelope: dict) -> str:
    flat: List[Tuple[str, object]] = []
    _flatten("", _jsonable(envelope["result"]), flat)
    width = max((len(k) for k, _ in flat), default=0)
    lines = [f"{envelope['command']}  [{envelope['schema']}]"]
    lines += [f"  {k.ljust(width)}  {v}" for k, v in flat]
    return "\n".join(lines) + "\n"


RENDERERS = {"json": render_json, "csv": render_csv, "text": render_text}


# ---------------------------------------------------------------------------
# input files


def read_config_file(path: str) -> List[Tuple[str, str]]:
    """key=value lines; '#' starts a comment; repeated keys are kept in order."""
    pairs: List[Tuple[str, str]] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{ln}: expected key=value, got {raw.strip()!r}")
                key, val = line.split("=", 1)
                pairs.append((key.strip(), val.strip()))
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return pairs


def read_kernel_csv(path: str, T: float) -> Chaos2State:
    """Rows (w, v, f(w, v)) sampled at the left points of a uniform grid."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read kernel file {path}: {exc}") from exc
    triples: List[Tuple[float, float, float]] = []
    for i, row in enumerate(rows, 1):
        if [c.strip().lower() for c in row[:2]] == ["w", "v"]:
            continue  # header
        if len(row) != 3:
            raise UsageError(f"{path}:{i}: expected 3 columns (w, v, value)")
        try:
            triples.append(tuple(float(c) for c in row))  # type: ignore[arg-type]
        except ValueError as exc:
            raise UsageError(f"{path}:{i}: non-numeric entry {row!r}") from exc
    if not triples:
        raise UsageError(f"{path}: no kernel samples found")
    coords = sorted({w for w, _, _ in triples} | {v for _, v, _ in triples})
    M = len(coords)
    h = T / M
    index = {}
    for c in coords:
        k = round(c / h)
        if not math.isclose(c, k * h, rel_tol=0.0, abs_tol=1e-9 * max(T, 1.0)):
            raise UsageError(
                f"{path}: coordinate {c!r} is not on a uniform left-point grid of step {h!r}"
            )
        index[c] = k
    kernel = np.zeros((M, M))
    for w, v, f in triples:
        r, s = index[w], index[v]
        if max(r, s) >= M:
            raise UsageError(f"{path}: coordinate beyond the horizon {T}")
        if r < s:
            kernel[r, s] = f
        elif r > s:
            kernel[s, r] = f
        elif f != 0.0:
            raise UsageError(f"{path}: diagonal sample at w=v={w!r} must be 0")
    return Chaos2State(kernel=kernel, scalar=0.0, T=T)


def read_curve_csv(path: str) -> ForwardVarianceCurve:
    """Rows (u, forward variance at u)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read curve file {path}: {exc}") from exc
    times: List[float] = []
    values: List[float] = []
    for i, row in enumerate(rows, 1):
        if [c.strip().lower() for c in row[:1]] == ["u"]:
            continue
        if len(row) != 2:
            raise UsageError(f"{path}:{i}: expected 2 columns (u, xi)")
        try:
            times.append(float(row[0]))
            values.append(float(row[1]))
        except ValueError as exc:
            raise UsageError(f"{path}:{i}: non-numeric entry {row!r}") from exc
    if not times:
        raise UsageError(f"{path}: no curve samples found")
    try:
        return ForwardVarianceCurve.sampled(times, values)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommand implementations (each returns a result dict)


def cmd_expand(args) -> dict:
    builders = {"K": k_expansion, "G": g_expansion, "SPX": spx_g_expansion}
    result = builders[args.kind](args.order)
    if args.bind:
        bindings = {}
        for spec in args.bind:
            if "=" not in spec:
                raise UsageError(f"--bind expects SYMBOL=EXPR, got {spec!r}")
            sym, expr = spec.split("=", 1)
            try:
                bindings[sym.strip()] = parse_poly(expr.strip())
            except ValueError as exc:
                raise UsageError(f"cannot parse binding {spec!r}: {exc}") from exc
        try:
            result = specialize(result, bindings)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    orders = {
        str(n): [{"tree": t, "coeff": str(p)} for t, p in forest]
        for n, forest in result.orders.items()
    }
    return {
        "kind": result.kind,
        "orders": orders,
        "shape_counts": {str(n): len(f) for n, f in result.orders.items()},
        "all_zero": result.is_zero(),
    }


def cmd_levy(args) -> dict:
    alphas = levy_alpha(args.order)
    partial = levy_cgf(args.T, args.order)
    closed = -math.log(math.cos(args.T))
    return {
        "alpha": {str(n): a for n, a in alphas.items()},
        "cgf_partial": partial,
        "closed_form": closed,
        "gap": abs(partial - closed),
    }


def cmd_cameron_martin(args) -> dict:
    result = {
        "q": {str(n): v for n, v in cameron_martin_q(args.order).items()},
        "cgf_coefficients": {
            str(n): v for n, v in cameron_martin_cgf_coeffs(args.order).items()
        },
    }
    if args.lam is not None:
        result["cgf_value"] = cameron_martin_cgf(args.lam, args.order)
        result["closed_form"] = -0.5 * math.log(math.cosh(math.sqrt(2 * args.lam)))
    return result


def cmd_bessel(args) -> dict:
    closed = bessel_laplace(args.x, args.delta, args.lam, args.T)
    series = bessel_laplace_series(args.x, args.delta, args.lam, args.T, args.order)
    return {
        "closed_form": closed,
        "series": series,
        "gap": abs(closed - series),
    }


def cmd_chaos2(args) -> dict:
    if (args.kernel is None) == (args.flat is None):
        raise UsageError("provide exactly one of --kernel FILE or --flat VALUE")
    if args.kernel is not None:
        state = read_kernel_csv(args.kernel, args.T)
    else:
        if args.grid is None:
            raise UsageError("--flat needs --grid M")
        state = constant_kernel(args.T, args.grid, args.flat)
    recursion = chaos2_cumulants(state, args.order)
    spectral = eigenvalue_cumulants(state, args.order)
    return {
        "grid_points": state.M,
        "cumulants": {str(n + 1): v for n, v in enumerate(recursion)},
        "eigenvalue_cumulants": {str(n + 1): v for n, v in enumerate(spectral)},
    }


def cmd_signature(args) -> dict:
    for w in (args.left, args.right):
        if not w or not w.isdigit():
            raise UsageError(f"words must be nonempty digit strings, got {w!r}")
    op = diamond_ito if args.mode == "ito" else diamond_strat
    expr = op(args.left[:-1], args.left[-1], args.right[:-1], args.right[-1])
    result = {
        "mode": args.mode,
        "expr": str(expr),
        "terms": expr.to_json_list(),
        "sigma_left": fawcett_sigma(args.left),
        "sigma_right": fawcett_sigma(args.right),
    }
    if args.T is not None:
        result["time_zero_value"] = expr.evaluate(args.T)
    return result


def cmd_riccati(args) -> dict:
    if args.kernel == "exp":
        if args.lam is None:
            raise UsageError("exponential kernel needs --lambda")
        kern = KernelSpec.exponential(nu=args.nu, lam=args.lam)
    else:
        if args.alpha is None:
            raise UsageError("power-law kernel needs --alpha")
        kern = KernelSpec.power_law(nu=args.nu, alpha=args.alpha)
    sol = solve_riccati(
        kern, args.rho, args.a, args.b, args.c, args.delta,
        horizon=args.T, n_steps=args.steps,
    )
    curve = read_curve_csv(args.curve) if args.curve else ForwardVarianceCurve.flat(args.xi0)
    return {
        "grid": sol.grid,
        "g": sol.g,
        "boundary": sol.g[0],
        "mgf": mgf_value(sol, args.x, curve, args.zeta, 0.0, args.T),
        "residual": riccati_residual(sol),
        "solver_tolerance": sol.solver_tolerance,
    }


def cmd_mc(args) -> dict:
    params: Dict[str, object] = {}
    for spec in args.param or []:
        if "=" not in spec:
            raise UsageError(f"--param expects NAME=VALUE, got {spec!r}")
        key, val = spec.split("=", 1)
        try:
            params[key.strip()] = float(val)
        except ValueError as exc:
            raise UsageError(f"--param {spec!r}: value must be numeric") from exc
    if args.kernel is not None:
        params["kernel"] = read_kernel_csv(args.kernel, args.T).kernel
    try:
        cfg = SimConfig(args.model, params, args.paths, args.steps, args.T, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    samples = simulate(cfg)
    result: Dict[str, object] = {
        "columns": sorted(samples.columns),
        "n_paths": samples.n,
    }
    column = args.column
    if column is None and len(samples.columns) == 1:
        column = next(iter(samples.columns))
    if column is not None:
        estimates = empirical_cumulants(samples, args.max_order, column=column)
        result["estimates"] = [
            {
                "order": e.order,
                "value": e.value,
                "std_error": e.std_error,
                "method": e.method,
            }
            for e in estimates
        ]
    if args.mgf is not None:
        try:
            a, b, c = (float(p) for p in args.mgf.split(","))
        except ValueError as exc:
            raise UsageError("--mgf expects three comma-separated numbers a,b,c") from exc
        est = empirical_mgf(samples, (a, b, c))
        result["mgf"] = {
            "value": est.value,
            "std_error": est.std_error,
            "log_value": math.log(est.value),
            "tail_share": est.tail_share,
            "tail_warning": est.tail_warning,
        }
    return result


def cmd_verify(args) -> Tuple[dict, int]:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    kwargs = {}
    if args.suite == "reorder" and args.order is not None:
        kwargs["order"] = args.order
    if args.suite == "cameron-martin" and args.order is not None:
        kwargs["order"] = args.order
    if args.suite == "levy":
        if args.order is not None:
            kwargs["order"] = args.order
        kwargs.update({"mc_paths": args.paths, "mc_steps": args.steps, "seed": args.seed})
    if args.suite == "bessel":
        kwargs.update({"mc_paths": args.paths, "seed": args.seed})
    if args.suite == "mc-cross":
        kwargs.update(
            {"paths": args.paths or 200_000, "steps": args.steps, "seed": args.seed}
        )
    if args.suite == "heston-riccati" and args.steps:
        kwargs["n_steps"] = max(args.steps, 8)
    report = run_suite(args.suite, **kwargs)
    return {
        "suite": report.suite,
        "passed": report.passed,
        "checks": [c.to_dict() for c in report.checks],
    }, (0 if report.passed else 1)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diamond-forests",
        description="Tree expansions of conditional cumulants, model evaluators, "
        "a convolution Riccati solver, and Monte Carlo verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value file of defaults (flags win)")
        p.add_argument(
            "--output", choices=("json", "csv", "text"), default="json",
            help="output format (default json)",
        )

    p = sub.add_parser("expand", help="cumulant / joint-exponent forests")
    p.add_argument("--kind", choices=("K", "G", "SPX"), default="K")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--bind", action="append", metavar="SYM=EXPR",
                   help="substitute a symbol, e.g. b=-a^2/2 (repeatable)")
    common(p)

    p = sub.add_parser("levy", help="planar-area coefficients and CGF")
    p.add_argument("--order", type=int, default=20)
    p.add_argument("--T", type=float, default=0.5)
    common(p)

    p = sub.add_parser("cameron-martin", help="squared-norm exponent series")
    p.add_argument("--order", type=int, default=10)
    p.add_argument("--lam", type=float, default=None)
    common(p)

    p = sub.add_parser("bessel", help="squared-radius Laplace transform")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--order", type=int, default=80, help="series truncation")
    common(p)

    p = sub.add_parser("chaos2", help="second-chaos cumulants on a grid")
    p.add_argument("--kernel", help="CSV of rows (w, v, f(w,v))")
    p.add_argument("--flat", type=float, default=None, help="constant kernel value")
    p.add_argument("--grid", type=int, default=None, help="grid points for --flat")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--order", type=int, default=4)
    common(p)

    p = sub.add_parser("signature", help="diamond of two iterated-integral words")
    p.add_argument("--left", required=True, help="word as a digit string, e.g. 112")
    p.add_argument("--right", required=True)
    p.add_argument("--mode", choices=("ito", "strat"), default="ito")
    p.add_argument("--T", type=float, default=None,
                   help="evaluate at time 0 with this horizon")
    common(p)

    p = sub.add_parser("riccati", help="convolution Riccati solve")
    p.add_argument("--kernel", choices=("exp", "power"), required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.1, help="swap window length")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--xi0", type=float, default=0.04, help="flat forward variance")
    p.add_argument("--curve", help="CSV of rows (u, xi(u)) overriding --xi0")
    p.add_argument("--x", type=float, default=0.0, help="current log-price state")
    p.add_argument("--zeta", type=float, default=0.0, help="current swap state")
    common(p)

    p = sub.add_parser("mc", help="Monte Carlo simulators and estimators")
    p.add_argument("--model", required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="model parameter (repeatable)")
    p.add_argument("--kernel", help="CSV kernel for the second-chaos model")
    p.add_argument("--column", default=None, help="column for cumulant estimates")
    p.add_argument("--max-order", type=int, default=4)
    p.add_argument("--mgf", default=None, metavar="A,B,C",
                   help="also report the empirical MGF at these weights")
    common(p)

    p = sub.add_parser("verify", help="named cross-check suites")
    p.add_argument("suite", help=f"one of {sorted(SUITES)}")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--paths", type=int, default=0)
    p.add_argument("--steps", type=int, default=256)
    common(p)

    return parser


_CONFIG_SKIP = {"command", "config", "output"}


def _merge_config_tokens(argv: Sequence[str]) -> List[str]:
    """Insert config-file pairs as flags right after the subcommand token."""
    argv = list(argv)
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file path")
            path = argv[i + 1]
            break
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            break
    if path is None or not argv:
        return argv
    inserted: List[str] = []
    for key, val in read_config_file(path):
        if key in ("suite",):
            raise UsageError("the verify suite must be given on the command line")
        flag = f"--{key}"
        if val.lower() in ("true", "false"):
            if val.lower() == "true":
                inserted.append(flag)
        else:
            inserted.extend([flag, val])
    return [argv[0], *inserted, *argv[1:]]


def _resolved_config(args) -> dict:
    cfg = {}
    for key, val in sorted(vars(args).items()):
        if key in _CONFIG_SKIP or val is None:
            continue
        if isinstance(val, np.ndarray):
            continue
        cfg[key.replace("_", "-")] = val
    return cfg


DISPATCH = {
    "expand": cmd_expand,
    "levy": cmd_levy,
    "cameron-martin": cmd_cameron_martin,
    "bessel": cmd_bessel,
    "chaos2": cmd_chaos2,
    "signature": cmd_signature,
    "riccati": cmd_riccati,
    "mc": cmd_mc,
}


def run(argv: Sequence[str]) -> Tuple[str, int]:
    """Execute one invocation; returns (rendered output, exit code)."""
    parser = build_parser()
    argv = _merge_config_tokens(list(argv))
    args = parser.parse_args(argv)
    exit_code = 0
    if args.command == "verify":
        result, exit_code = cmd_verify(args)
    else:
        result = DISPATCH[args.command](args)
    envelope = {
        "schema": SCHEMA_ID,
        "command": args.command,
        "config": _resolved_config(args),
        "result": result,
    }
    return RENDERERS[args.output](envelope), exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        out, code = run(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
