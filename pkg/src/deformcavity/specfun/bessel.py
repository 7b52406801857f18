"""Spherical Bessel functions of the first kind, derivatives and zeros."""
from __future__ import annotations

import enum
import math
from functools import lru_cache

import numpy as np

from .._accel import njit, select

MAX_ORDER = 200

_SERIES_LIMIT = 1.0
_RESCALE = 1e250


class BesselZeroKind(enum.Enum):
    FUNCTION_ZERO = "function"  # n-th positive zero of j_l
    DERIVATIVE_ZERO = "derivative"  # n-th positive zero of j_l'


class BesselZeroError(RuntimeError):
    """Root refinement failed; carries the bracket that was searched."""

    def __init__(self, l, n, kind, bracket, values):
        self.l, self.n, self.kind = l, n, kind
        self.bracket, self.values = bracket, values
        super().__init__(
            f"zero {n} of {'j' if kind is BesselZeroKind.FUNCTION_ZERO else 'dj'}_{l} "
            f"did not converge in bracket {bracket} (endpoint values {values})"
        )


def _start_order(nmax, x):
    big = max(nmax, x)
    return int(big + 20 + math.sqrt(40.0 * big))


@njit
def _table_loop(nmax, x):
    npts = x.shape[0]
    out = np.zeros((nmax + 1, npts))
    for i in range(npts):
        xi = x[i]
        if xi == 0.0:
            out[0, i] = 1.0
            continue
        if xi < 1.0:
            t = 1.0
            x2 = 0.5 * xi * xi
            for l in range(nmax + 1):
                if l > 0:
                    t *= xi / (2 * l + 1)
                if t == 0.0:
                    break
                s = 1.0
                term = 1.0
                k = 0
                while True:
                    k += 1
                    term *= -x2 / (k * (2 * l + 2 * k + 1))
                    s += term
                    if abs(term) < 1e-17 * abs(s):
                        break
                out[l, i] = t * s
            continue
        sx = math.sin(xi)
        cx = math.cos(xi)
        out[0, i] = sx / xi
        if nmax == 0:
            continue
        out[1, i] = sx / (xi * xi) - cx / xi
        lm = min(nmax, int(xi))
        for l in range(1, lm):
            out[l + 1, i] = (2 * l + 1) / xi * out[l, i] - out[l - 1, i]
        if lm >= nmax:
            continue
        big = max(nmax, xi)
        start = int(big + 20 + math.sqrt(40.0 * big))
        lo = max(lm - 1, 0)
        f = np.zeros(nmax + 2)
        fp1 = 0.0
        fc = 1e-300
        for l in range(start, lo - 1, -1):
            if l <= nmax + 1:
                f[l] = fc
            fm1 = (2 * l + 1) / xi * fc - fp1
            fp1 = fc
            fc = fm1
            if abs(fc) > _RESCALE:
                fc /= _RESCALE
                fp1 /= _RESCALE
                for j in range(l, nmax + 2):
                    f[j] /= _RESCALE
        ref = lm
        if lm > 0 and abs(out[lm - 1, i]) > abs(out[lm, i]):
            ref = lm - 1
        scale = out[ref, i] / f[ref]
        for l in range(lm + 1, nmax + 1):
            out[l, i] = f[l] * scale
    return out


def _table_numpy(nmax, x):
    npts = x.shape[0]
    out = np.zeros((nmax + 1, npts))
    out[0, x == 0.0] = 1.0

    small = (x > 0.0) & (x < _SERIES_LIMIT)
    if small.any():
        xs = x[small]
        x2 = 0.5 * xs * xs
        t = np.ones_like(xs)
        for l in range(nmax + 1):
            if l > 0:
                t = t * xs / (2 * l + 1)
            s = np.ones_like(xs)
            term = np.ones_like(xs)
            for k in range(1, 40):
                term = term * (-x2 / (k * (2 * l + 2 * k + 1)))
                s = s + term
                if np.all(np.abs(term) < 1e-17 * np.abs(s)):
                    break
            out[l, small] = t * s

    large = x >= _SERIES_LIMIT
    if not large.any():
        return out
    xl = x[large]
    up = np.zeros((nmax + 1, xl.size))
    up[0] = np.sin(xl) / xl
    if nmax >= 1:
        up[1] = np.sin(xl) / xl**2 - np.cos(xl) / xl
    lm = np.minimum(nmax, xl.astype(np.int64))
    with np.errstate(over="ignore", invalid="ignore"):
        for l in range(1, nmax):
            up[l + 1] = (2 * l + 1) / xl * up[l] - up[l - 1]
    res = np.where(np.arange(nmax + 1)[:, None] <= lm[None, :], up, 0.0)

    need = lm < nmax
    if need.any():
        xd = xl[need]
        lmd = lm[need]
        start = _start_order(nmax, float(xd.max()))
        f = np.zeros((nmax + 2, xd.size))
        fp1 = np.zeros_like(xd)
        fc = np.full_like(xd, 1e-300)
        lo = max(int(lmd.min()) - 1, 0)
        for l in range(start, lo - 1, -1):
            if l <= nmax + 1:
                f[l] = fc
            fm1 = (2 * l + 1) / xd * fc - fp1
            fp1, fc = fc, fm1
            hot = np.abs(fc) > _RESCALE
            if hot.any():
                fc[hot] /= _RESCALE
                fp1[hot] /= _RESCALE
                f[l:, hot] /= _RESCALE
        cols = np.arange(xd.size)
        upd = up[:, need]
        ref = lmd.copy()
        prev = np.maximum(lmd - 1, 0)
        swap = (lmd > 0) & (np.abs(upd[prev, cols]) > np.abs(upd[lmd, cols]))
        ref[swap] = prev[swap]
        scale = upd[ref, cols] / f[ref, cols]
        down = f[: nmax + 1] * scale[None, :]
        mask = np.arange(nmax + 1)[:, None] > lmd[None, :]
        block = res[:, need]
        block[mask] = down[mask]
        res[:, need] = block
    out[:, large] = res
    return out


_table_impl = select(_table_loop, _table_numpy)


def sph_jn_table(nmax: int, x) -> np.ndarray:
    """j_0 .. j_nmax at every point of ``x``; result shape ``(nmax+1,) + x.shape``."""
    xa = np.asarray(x, dtype=float)
    if nmax < 0 or nmax > MAX_ORDER + 60:
        raise ValueError(f"order {nmax} outside supported range")
    if np.any(xa < 0) or not np.all(np.isfinite(xa)):
        raise ValueError("spherical Bessel argument must be finite and non-negative")
    flat = np.ascontiguousarray(xa.ravel())
    tab = _table_impl(int(nmax), flat)
    return tab.reshape((nmax + 1,) + xa.shape)


def sph_jn_derivative_table(nmax: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Values and first derivatives j_l, j_l' for l = 0..nmax."""
    xa = np.asarray(x, dtype=float)
    tab = sph_jn_table(nmax + 1, xa)
    j = tab[: nmax + 1]
    dj = np.empty_like(j)
    dj[0] = -tab[1]
    if nmax >= 1:
        ls = np.arange(1, nmax + 1).reshape((-1,) + (1,) * xa.ndim)
        with np.errstate(divide="ignore", invalid="ignore"):
            dj[1:] = tab[:nmax] - (ls + 1) / xa * tab[1 : nmax + 1]
        zero = xa == 0.0
        if np.any(zero):
            dj[1:, zero] = 0.0
            dj[1, zero] = 1.0 / 3.0
    return j, dj


def _check(l, x):
    if l < 0 or l > MAX_ORDER or int(l) != l:
        raise ValueError(f"order l={l} outside 0..{MAX_ORDER}")
    if x < 0 or not math.isfinite(x):
        raise ValueError(f"argument x={x} must be finite and non-negative")


def spherical_bessel_j(l: int, x: float) -> float:
    """j_l(x) for 0 <= l <= 200, x >= 0."""
    _check(l, x)
    return float(sph_jn_table(l, np.array([float(x)]))[l, 0])


def spherical_bessel_j_prime(l: int, x: float) -> float:
    """dj_l/dx via j_l' = j_{l-1} - (l+1) j_l / x, with j_0' = -j_1."""
    _check(l, x)
    _, dj = sph_jn_derivative_table(l, np.array([float(x)]))
    return float(dj[l, 0])


def _second_derivative(l, x, j, dj):
    # spherical Bessel ODE
    return -2.0 / x * dj - (1.0 - l * (l + 1) / (x * x)) * j


def _refine(fun, dfun, l, n, kind, a, b):
    fa, fb = fun(a), fun(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise BesselZeroError(l, n, kind, (a, b), (fa, fb))
    x = 0.5 * (a + b)
    for _ in range(200):
        fx = fun(x)
        if fx == 0.0:
            return x
        if fa * fx < 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        d = dfun(x)
        step_ok = False
        if d != 0.0:
            xn = x - fx / d
            if a < xn < b:
                step_ok = True
        if not step_ok:
            xn = 0.5 * (a + b)
        if abs(xn - x) <= 1e-15 * max(1.0, abs(x)) or (b - a) <= 4e-16 * max(1.0, abs(x)):
            return xn
        x = xn
    raise BesselZeroError(l, n, kind, (a, b), (fun(a), fun(b)))


def _jl(l):
    def f(x):
        return float(sph_jn_table(l, np.array([x]))[l, 0])

    def df(x):
        _, dj = sph_jn_derivative_table(l, np.array([x]))
        return float(dj[l, 0])

    return f, df


def _djl(l):
    def f(x):
        _, dj = sph_jn_derivative_table(l, np.array([x]))
        return float(dj[l, 0])

    def df(x):
        j, dj = sph_jn_derivative_table(l, np.array([x]))
        return _second_derivative(l, x, float(j[l, 0]), float(dj[l, 0]))

    return f, df


def _scan_bracket(l, n):
    # no zero of j_l below x = l, and consecutive zeros are more than pi apart,
    # so a pi/2 grid sees every sign change exactly once
    step = 0.5 * math.pi
    x0 = float(l)
    count = 0
    block = 4 * n + 16
    while True:
        grid = x0 + step * np.arange(block + 1)
        vals = sph_jn_table(l, grid)[l]
        change = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
        if count + change.size >= n:
            k = change[n - count - 1]
            return float(grid[k]), float(grid[k + 1])
        count += change.size
        x0 = float(grid[-1])


@lru_cache(maxsize=None)
def _function_zero(l: int, n: int) -> float:
    if l == 0:
        return n * math.pi
    if l <= 16:
        # interlacing: beta_{n,l-1} < beta_{n,l} < beta_{n+1,l-1}
        a = _function_zero(l - 1, n)
        b = _function_zero(l - 1, n + 1)
    else:
        a, b = _scan_bracket(l, n)
    f, df = _jl(l)
    return _refine(f, df, l, n, BesselZeroKind.FUNCTION_ZERO, a, b)


@lru_cache(maxsize=None)
def _derivative_zero(l: int, n: int) -> float:
    if l == 0:
        # j_0' = -j_1, the root at x = 0 is excluded
        return _function_zero(1, n)
    # one extremum of j_l between consecutive zeros; the first lies in (0, beta_1)
    a = _function_zero(l, n - 1) if n > 1 else 0.5 * l
    b = _function_zero(l, n)
    f, df = _djl(l)
    return _refine(f, df, l, n, BesselZeroKind.DERIVATIVE_ZERO, a, b)


def bessel_zero(l: int, n: int, kind: BesselZeroKind = BesselZeroKind.FUNCTION_ZERO) -> float:
    """n-th positive zero of j_l (FUNCTION_ZERO) or of j_l' (DERIVATIVE_ZERO)."""
    if n < 1 or int(n) != n:
        raise ValueError(f"zero index n={n} must be a positive integer")
    if l < 0 or l > MAX_ORDER or int(l) != l:
        raise ValueError(f"order l={l} outside 0..{MAX_ORDER}")
    kind = BesselZeroKind(kind)
    if kind is BesselZeroKind.FUNCTION_ZERO:
        return _function_zero(int(l), int(n))
    return _derivative_zero(int(l), int(n))
