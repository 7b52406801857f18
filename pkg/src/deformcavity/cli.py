"""Command-line interface.

    deformcavity coeffs      --shape superegg --param n=1.7
    deformcavity spectrum    --shape stadium --param R=1 --param d=0.25 --bc neumann --levels 16
    deformcavity compare     --shape pear --param C2=0.119 ... --bc neumann --gate 5
    deformcavity wavefunction --shape superegg --param n=1.7 --mode 1,0,0 --order 1 --boundary
    deformcavity diagnostics --shape sphere --mode 1,1,0

Settings come from flags, then from a ``--config`` file of ``key = value``
lines, then from defaults.  Keys in the config file that are not run
settings are shape parameters.

Exit status: 0 success, 1 compare gate failed, 2 usage or input error,
3 computation error, 4 partial result (degenerate second-order
wavefunction without B coefficients).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .perturb.energy import RESONANCE_THRESHOLD, mode_energy
from .perturb.types import BC, ModeIndex, NearResonance, PartialResultWarning
from .shapes import (
    MAX_AMAX,
    QuadratureError,
    ShapeError,
    TruncationWarning,
    _number,
    expand,
    make_shape,
    parse_config,
    reconstruction_residual,
)
from .specfun import BesselZeroError
from .spectrum import (
    CATALOG,
    LevelRow,
    LevelTable,
    SpectrumRequest,
    WindowTooSmallError,
    compare,
    compute_spectrum,
    load_reference,
    read_reference,
)

EXIT_OK = 0
EXIT_GATE = 1
EXIT_USAGE = 2
EXIT_ERROR = 3
EXIT_PARTIAL = 4

DEFAULTS = {
    "bc": "dirichlet",
    "levels": 17,
    "amax": 30,
    "quad": 64,
    "format": "csv",
    "out": None,
    "reference": None,
    "column": "Ns",
    "computed": None,
    "gate": None,
    "decimals": 3,
    "mode": "1,0,0",
    "order": 2,
    "threshold": RESONANCE_THRESHOLD,
    "nmax": 6,
    "lmax": 8,
    "radii": None,
    "theta": "0:pi:7",
    "phi": "0",
    "coordinates": "mapped",
    "points": 20,
    "seed": 0,
}
_INT_KEYS = ("levels", "amax", "quad", "order", "nmax", "lmax", "decimals", "points", "seed")
_FLOAT_KEYS = ("gate", "threshold")


class UsageError(ValueError):
    pass


class PartialResult(Exception):
    def __init__(self, text):
        super().__init__("partial result")
        self.text = text


# ------------------------------------------------------------------ config

def _settings(args) -> dict:
    """Merge flags > config file > defaults into one dict."""
    cfg = {}
    if args.config:
        try:
            cfg = parse_config(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    run = dict(DEFAULTS)
    shape_params = {}
    kind = cfg.pop("shape", None) or cfg.pop("kind", None)
    for key, value in cfg.items():
        norm = key.strip().replace("-", "_")
        if norm in DEFAULTS:
            run[norm] = value
        else:
            shape_params[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    if args.shape:
        kind = args.shape
    for item in args.param or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        shape_params[k] = v
    if kind is None:
        raise UsageError("no shape given (--shape or 'shape =' in --config)")
    try:
        for key in _INT_KEYS:
            if run[key] is not None:
                run[key] = int(run[key])
        for key in _FLOAT_KEYS:
            if run[key] is not None:
                run[key] = float(run[key])
        run["bc"] = BC.parse(run["bc"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for key in ("levels", "amax", "quad", "nmax", "points"):
        if run[key] < 1:
            raise UsageError(f"{key} must be positive")
    if run["amax"] > MAX_AMAX:
        raise UsageError(f"amax must not exceed {MAX_AMAX}")
    if run["threshold"] <= 0:
        raise UsageError("threshold must be positive")
    if run["gate"] is not None and run["gate"] <= 0:
        raise UsageError("gate must be positive")
    if run["order"] not in (0, 1, 2):
        raise UsageError(f"order must be 0, 1 or 2, got {run['order']}")
    if run["format"] not in ("csv", "json", "pretty"):
        raise UsageError(f"unknown format {run['format']!r}")
    run["shape"] = make_shape(kind, shape_params)
    return run


def _mode(run) -> ModeIndex:
    try:
        n, l, m = (int(s) for s in str(run["mode"]).split(","))
        return ModeIndex(n, l, m, run["bc"])
    except ValueError as exc:
        raise UsageError(f"bad --mode {run['mode']!r}: expected n,l,m ({exc})") from None


def _expansion(run):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        exp = expand(run["shape"], a_max=run["amax"], quad_order=run["quad"])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return exp


def _fmt(v):
    return f"{v + 0.0:.15g}"


def _csv(header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _grid_values(spec: str, R0: float) -> np.ndarray:
    """``start:stop:count`` (inclusive linspace) or a comma list; accepts pi and R0."""
    text = str(spec).replace("R0", repr(R0))
    try:
        if ":" in text:
            a, b, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError("count must be positive")
            return np.linspace(_number(a), _number(b), n)
        return np.array([_number(s) for s in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad grid spec {spec!r}: {exc}") from None


# ---------------------------------------------------------------- commands

def cmd_coeffs(run, args) -> str:
    shape = run["shape"]
    fmt = run["format"]
    if args.long:
        sizes = sorted({a for a in (10, 20, 30, 40) if a < run["amax"]} | {run["amax"]})
        rows = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            for amax in sizes:
                exp = expand(shape, a_max=amax, quad_order=run["quad"])
                res = reconstruction_residual(exp, shape)
                C = exp.axial()
                rows.extend((amax, a, float(C[a]), float(abs(C[a])), res) for a in range(1, amax + 1))
        header = ("a_max", "a", "C_a", "abs_C_a", "residual")
        if fmt == "json":
            return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
        if fmt == "pretty":
            return "".join(f"{r[0]:>5} {r[1]:>3} {r[2]:12.3e} {r[4]:10.2e}\n" for r in rows)
        return _csv(header, rows)
    exp = _expansion(run)
    res = reconstruction_residual(exp, shape)
    C = exp.axial()
    rows = [(a, float(C[a]), float(abs(C[a]))) for a in range(1, exp.a_max + 1)]
    if fmt == "json":
        return json.dumps({
            "R0": exp.R0, "residual": res, "a_max": exp.a_max, "convention": exp.convention,
            "coefficients": [{"a": a, "C_a": c, "abs_C_a": ac} for a, c, ac in rows],
        }, indent=2) + "\n"
    if fmt == "pretty":
        lines = [f"R0 = {exp.R0:.6f}   residual = {res:.2e}", f"{'a':>3} {'C_a':>12}"]
        lines += [f"{a:>3} {c:12.3e}" for a, c, _ in rows]
        return "\n".join(lines) + "\n"
    return _csv(("a", "C_a", "abs_C_a"), rows,
                comments=(f"R0={_fmt(exp.R0)}", f"residual={_fmt(res)}", f"convention={exp.convention}"))


def _spectrum(run, levels=None):
    req = SpectrumRequest(
        run["shape"], run["bc"], level_count=levels or run["levels"], n_max=run["nmax"],
        l_max=run["lmax"], a_max=run["amax"], quad_order=run["quad"], threshold=run["threshold"],
    )
    return compute_spectrum(req, _expansion(run))


def _render(obj, fmt):
    if fmt == "json":
        return obj.to_json() + "\n"
    if fmt == "pretty":
        return obj.pretty()
    return obj.to_csv()


def cmd_spectrum(run, args) -> str:
    return _render(_spectrum(run), run["format"])


def _catalog_name(shape):
    for name, s in CATALOG.items():
        if s == shape:
            return name
    return None


def _table_from_file(path, bc) -> LevelTable:
    """Totals from a level-table CSV (``total``) or a reference CSV (``Ps``)."""
    path = Path(path)
    with path.open(newline="") as fh:
        header = next(line for line in fh if not line.startswith("#"))
    if "total" in header.strip().split(","):
        ref = read_reference(path, "total")
    else:
        ref = read_reference(path, "Ps")
    rows = []
    for i, r in enumerate(ref.rows, 1):
        n, l, m = r.label if r.label else (0, 0, 0)
        rows.append(LevelRow(i, n, l, m, r.value, 0.0, 0.0, r.value, i, (), r.value))
    return LevelTable(rows, bc)


def cmd_compare(run, args):
    if run["reference"]:
        ref = read_reference(run["reference"], run["column"])
    else:
        name = _catalog_name(run["shape"])
        if name is None:
            raise UsageError("--reference is required for shapes without a shipped table")
        ref = load_reference(name, run["bc"], run["column"])
    if run["computed"]:
        table = _table_from_file(run["computed"], run["bc"])
    else:
        table = _spectrum(run, levels=len(ref.rows))
    decimals = run["decimals"] if run["decimals"] >= 0 else None
    report = compare(table, ref, decimals=decimals)
    text = _render(report, run["format"])
    gate = run["gate"]
    passed = gate is None or report.max_error <= gate
    if not passed:
        print(f"gate failed: max error {report.max_error:.3f}% > {gate}%", file=sys.stderr)
    return text, (EXIT_OK if passed else EXIT_GATE)


def cmd_wavefunction(run, args):
    from .perturb.checks import boundary_values
    from .perturb.wavefunction import evaluate_wavefunction, normalize, second_order_wavefunction

    mode = _mode(run)
    exp = _expansion(run)
    order = run["order"]
    w = second_order_wavefunction(mode, exp, run["threshold"])
    if w.complete:
        w = normalize(w)
    R0 = exp.R0
    rs = np.array([R0]) if args.boundary else _grid_values(run["radii"] or "0:R0:11", R0)
    thetas = _grid_values(run["theta"], R0)
    phis = _grid_values(run["phi"], R0)
    if np.any(thetas < 0) or np.any(thetas > math.pi + 1e-12):
        raise UsageError("theta values must lie in [0, pi]")
    if run["coordinates"] == "mapped" and (np.any(rs < 0) or np.any(rs > R0 * (1 + 1e-12))):
        raise UsageError(f"r values must lie in [0, R0] with R0 = {R0:.15g}")
    r, th, ph = (a.ravel() for a in np.meshgrid(rs, thetas, phis, indexing="ij"))
    partial = order == 2 and not w.complete
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PartialResultWarning)
        psi = evaluate_wavefunction(w, r, th, ph, order=order, coordinates=run["coordinates"])
    psi = np.broadcast_to(np.asarray(psi, dtype=complex), r.shape)
    # boundary residual only where the sample sits on r = R0 (mapped sphere)
    resid = np.full(r.shape, np.nan)
    on = np.abs(r - R0) <= 1e-12 * R0
    if run["coordinates"] == "mapped" and np.any(on):
        top = min(order, 1) if partial else order
        resid[on] = boundary_values(w, th[on], ph[on], top).max(axis=0)
    header = ("r", "theta", "phi", "re_psi", "im_psi", "boundary_residual")
    rows = [
        (float(a), float(b), float(c), float(p.real), float(p.imag), "" if np.isnan(e) else float(e))
        for a, b, c, p, e in zip(r, th, ph, psi, resid)
    ]
    fmt = run["format"]
    if fmt == "json":
        samples = [dict(zip(header, row)) for row in rows]
        for s in samples:
            s["boundary_residual"] = s["boundary_residual"] if s["boundary_residual"] != "" else None
        text = json.dumps({
            "mode": [mode.n, mode.l, mode.m], "bc": mode.bc.value, "order": order,
            "complete": not partial, "samples": samples,
        }, indent=2) + "\n"
    elif fmt == "pretty":
        text = "".join(
            f"{a:8.4f} {b:8.4f} {c:8.4f} {d: .6e} {e: .6e} {f if f == '' else format(f, '.1e')}\n"
            for a, b, c, d, e, f in rows
        )
    else:
        text = _csv(header, rows)
    if partial:
        raise PartialResult(text)
    return text


def cmd_diagnostics(run, args):
    from .perturb.checks import boundary_residual, residual_order_check, verify_inner_product
    from .perturb.wavefunction import second_order_wavefunction

    mode = _mode(run)
    exp = _expansion(run)
    R0 = exp.R0
    rng = np.random.default_rng(run["seed"])
    n = run["points"]
    pts = np.column_stack([
        rng.uniform(0.05, 0.95, n) * R0,
        rng.uniform(0.05, math.pi - 0.05, n),
        rng.uniform(0.0, 2 * math.pi, n),
    ])
    energy = mode_energy(mode, exp, run["threshold"])
    w = second_order_wavefunction(mode, exp, run["threshold"])
    eq = residual_order_check(mode, exp, pts)
    routes = {}
    for order, value in ((1, energy.ratio1), (2, energy.ratio2)):
        ip = verify_inner_product(mode, exp, order)
        scale = max(abs(value), abs(ip), 1e-300)
        routes[order] = (value, ip, abs(value - ip) / scale if scale > 1e-14 else 0.0)
    bres = boundary_residual(w, order=w.max_order if w.complete else 1)
    near = [f for f in energy.flags if isinstance(f, NearResonance)]
    report = {
        "mode": [mode.n, mode.l, mode.m],
        "bc": mode.bc.value,
        "E0": energy.E0,
        "E1": energy.E1,
        "E2": energy.E2,
        "total": energy.total,
        "equation_residuals": eq,
        "route_ratio1": list(routes[1][:2]),
        "route_ratio2": list(routes[2][:2]),
        "route_delta1": routes[1][2],
        "route_delta2": routes[2][2],
        "boundary_residuals": bres,
        "wavefunction_complete": w.complete,
        "near_resonance": [str(f) for f in near],
        "flags": [str(f) for f in energy.flags],
    }
    fmt = run["format"]
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    rows = []
    for key, value in report.items():
        if isinstance(value, list):
            value = ";".join(_fmt(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            value = _fmt(value)
        rows.append((key, value))
    if fmt == "pretty":
        return "".join(f"{k:<24} {v}\n" for k, v in rows)
    return _csv(("key", "value"), rows)


COMMANDS = {
    "coeffs": cmd_coeffs,
    "spectrum": cmd_spectrum,
    "compare": cmd_compare,
    "wavefunction": cmd_wavefunction,
    "diagnostics": cmd_diagnostics,
}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--shape", help="sphere, superegg, spheroid, oblate, prolate, stadium, rounded_cylinder, pear")
    common.add_argument("--param", action="append", metavar="KEY=VALUE", help="shape parameter (repeatable)")
    common.add_argument("--config", metavar="PATH", help="flat key = value settings file")
    common.add_argument("--bc", choices=("dirichlet", "neumann"))
    common.add_argument("--levels", type=int, metavar="N")
    common.add_argument("--amax", type=int, metavar="N")
    common.add_argument("--quad", type=int, metavar="N")
    common.add_argument("--format", choices=("csv", "json", "pretty"))
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--threshold", type=float, help="near-resonance ratio threshold")
    common.add_argument("--nmax", type=int, metavar="N")
    common.add_argument("--lmax", type=int, metavar="N")

    parser = argparse.ArgumentParser(prog="deformcavity", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("coeffs", parents=[common], help="expansion coefficients C_a")
    p.add_argument("--long", action="store_true", help="long format over several a_max")
    sub.add_parser("spectrum", parents=[common], help="sorted level table")
    p = sub.add_parser("compare", parents=[common], help="percent error against a reference table")
    p.add_argument("--reference", metavar="PATH")
    p.add_argument("--column", choices=("Ns", "Ps"), help="reference column (default Ns)")
    p.add_argument("--computed", metavar="PATH", help="read computed totals from a CSV instead")
    p.add_argument("--gate", type=float, metavar="PERCENT")
    p.add_argument("--decimals", type=int, help="round computed totals first (default 3; -1 disables)")
    for name in ("wavefunction", "diagnostics"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--mode", metavar="n,l,m")
    p = sub.choices["wavefunction"]
    p.add_argument("--order", type=int, choices=(0, 1, 2))
    p.add_argument("--radii", metavar="SPEC", help="start:stop:count or list (R0 allowed), default 0:R0:11")
    p.add_argument("--theta", metavar="SPEC")
    p.add_argument("--phi", metavar="SPEC")
    p.add_argument("--coordinates", choices=("mapped", "physical"))
    p.add_argument("--boundary", action="store_true", help="sample on r = R0 only")
    p = sub.choices["diagnostics"]
    p.add_argument("--points", type=int, help="random interior points (default 20)")
    p.add_argument("--seed", type=int)
    return parser


def _write(text, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        run = _settings(args)
        result = COMMANDS[args.command](run, args)
    except PartialResult as exc:
        _write(exc.text, run["out"])
        print("partial result: degenerate second-order wavefunction lacks B coefficients", file=sys.stderr)
        return EXIT_PARTIAL
    except (UsageError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WindowTooSmallError, QuadratureError, BesselZeroError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    status = EXIT_OK
    if isinstance(result, tuple):
        result, status = result
    _write(result, run["out"])
    return status


if __name__ == "__main__":
    sys.exit(main())
