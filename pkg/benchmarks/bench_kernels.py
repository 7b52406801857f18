"""Time the numba and numpy forms of each hot kernel on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 20] [--json out.json]

Each kernel exists twice in the package (a compiled loop and a vectorised
numpy form); both are called directly here so one process can time them
side by side.  The last section runs a full spectrum in subprocesses with
DEFORMCAVITY_NUMBA=1 and =0 to show the end-to-end effect of the switch.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from deformcavity._accel import NUMBA_AVAILABLE
from deformcavity.perturb import energy, terms
from deformcavity.specfun import bessel, harmonics


def best_of(fn, args, repeat):
    fn(*args)  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def cases(rng):
    x = np.ascontiguousarray(np.sort(rng.uniform(0.0, 40.0, 4000)))
    yield "bessel_table", bessel._table_loop, bessel._table_numpy, (60, x)

    c = np.ascontiguousarray(np.cos(rng.uniform(0.0, np.pi, 4000)))
    yield "legendre_table", harmonics._legendre_loop, harmonics._legendre_numpy, (40, 8, c)

    amax, pmax = 30, 40
    C = np.zeros(amax + 1)
    C[2::2] = 0.05 * rng.standard_normal(amax // 2) / np.arange(1, amax // 2 + 1) ** 2
    G = rng.standard_normal(8)
    W = rng.standard_normal(8)
    P1 = rng.standard_normal((pmax + 1, amax + 1))
    P2 = rng.standard_normal((pmax + 1, amax + 1))
    jp = rng.uniform(0.1, 1.0, pmax + 1)
    djp = rng.uniform(0.1, 1.0, pmax + 1)
    for neumann in (False, True):
        args = (C, 2, 5.76, neumann, G, W, P1, P2, jp, djp, 0.1, 0.02)
        yield f"degenerate_{'nbc' if neumann else 'dbc'}", energy._degenerate_loop, energy._degenerate_numpy, args

    nterm, nr, ng, npts = 600, 40, 60, 3000
    coef = (rng.standard_normal(nterm) + 1j * rng.standard_normal(nterm)).astype(np.complex128)
    ridx = rng.integers(0, nr, nterm)
    gidx = rng.integers(0, ng, nterm)
    R = rng.standard_normal((nr, 3, npts))
    Gj = (rng.standard_normal((ng, 6, npts)) + 1j * rng.standard_normal((ng, 6, npts))).astype(np.complex128)
    yield "accumulate", terms._accumulate_loop, terms._accumulate_numpy, (coef, ridx, gidx, R, Gj)


def end_to_end(repeat):
    code = (
        "import time;from deformcavity.shapes import Superegg;"
        "from deformcavity.spectrum import SpectrumRequest, compute_spectrum;"
        "import warnings;warnings.simplefilter('ignore');"
        "r=SpectrumRequest(Superegg(1.7),'neumann',16);compute_spectrum(r);"
        "t=time.perf_counter();"
        f"[compute_spectrum(r) for _ in range({repeat})];"
        f"print((time.perf_counter()-t)/{repeat})"
    )
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, DEFORMCAVITY_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[flag] = float(res.stdout.strip())
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--json", metavar="PATH")
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; both columns time the numpy form")

    rng = np.random.default_rng(1234)
    rows = []
    print(f"{'kernel':<16} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max diff':>10}")
    for name, fast, slow, fargs in cases(rng):
        t_fast = best_of(fast, fargs, args.repeat)
        t_slow = best_of(slow, fargs, args.repeat)
        diff = max_diff(fast(*fargs), slow(*fargs))
        rows.append({"kernel": name, "numba_s": t_fast, "numpy_s": t_slow, "max_diff": diff})
        print(f"{name:<16} {1e3 * t_fast:10.3f} {1e3 * t_slow:10.3f} {t_slow / t_fast:8.2f} {diff:10.2e}")

    report = {"kernels": rows}
    if not args.skip_end_to_end:
        e2e = end_to_end(max(1, args.repeat // 10))
        report["spectrum_superegg_nbc_s"] = {"numba": e2e["1"], "numpy": e2e["0"]}
        print(f"\nspectrum (superegg 1.7, NBC, 16 levels): numba {e2e['1']:.3f} s, numpy {e2e['0']:.3f} s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(report, fh, indent=2)


if __name__ == "__main__":
    main()
