"""Eigenvalue corrections through second order.

All corrections are returned as ratios E^(i)/E^(0).  Second-order sums are
split into a p-independent part and one term per intermediate order p so
that near-resonant terms can be reported and, for ranking only, removed.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .._accel import njit, select
from ..shapes import HarmonicExpansion
from ..specfun.bessel import BesselZeroKind, bessel_zero, sph_jn_derivative_table
from ..specfun.clebsch import clebsch_gordan
from .types import BC, EnergyResult, ModeIndex, NearResonance, TruncationFlag

RESONANCE_THRESHOLD = 3e-2
TAIL_TOLERANCE = 1e-6
_WINDOW_POINTS = 65


def mode_zero(mode: ModeIndex) -> float:
    kind = BesselZeroKind.FUNCTION_ZERO if mode.bc is BC.DIRICHLET else BesselZeroKind.DERIVATIVE_ZERO
    return bessel_zero(mode.l, mode.n, kind)


def unperturbed_energy(mode: ModeIndex, R0: float) -> float:
    """beta_{n,l}^2 / R0^2 (Dirichlet) or alpha_{n,l}^2 / R0^2 (Neumann)."""
    if not R0 > 0:
        raise ValueError("R0 must be positive")
    x = mode_zero(mode)
    return x * x / (R0 * R0)


def _require_axial(exp: HarmonicExpansion) -> np.ndarray:
    if not exp.axisymmetric:
        raise ValueError("degenerate states need an axisymmetric expansion")
    return exp.axial()


# ----------------------------------------------------------------- couplings

@lru_cache(maxsize=256)
def _diag_coupling(l: int, m: int) -> np.ndarray:
    """G_k = <k l 0 0|l 0><k l 0 m|l m>, k = 0..2l."""
    g = np.array([clebsch_gordan(k, 0, l, 0, l, 0) * clebsch_gordan(k, 0, l, m, l, m) for k in range(2 * l + 1)])
    g.flags.writeable = False
    return g


@lru_cache(maxsize=256)
def _offdiag_coupling(l: int, m: int, amax: int) -> tuple[np.ndarray, np.ndarray]:
    """P1[p, k] = <k l 0 0|p 0><k l 0 m|p m>,  P2[p, s] = <s p 0 0|l 0><s p 0 m|l m>."""
    pmax = amax + l
    P1 = np.zeros((pmax + 1, amax + 1))
    P2 = np.zeros((pmax + 1, amax + 1))
    for p in range(abs(m), pmax + 1):
        for k in range(max(1, abs(l - p)), min(amax, l + p) + 1):
            if (k + l + p) % 2:
                continue
            P1[p, k] = clebsch_gordan(k, 0, l, 0, p, 0) * clebsch_gordan(k, 0, l, m, p, m)
            P2[p, k] = clebsch_gordan(k, 0, p, 0, l, 0) * clebsch_gordan(k, 0, p, m, l, m)
    P1.flags.writeable = False
    P2.flags.writeable = False
    return P1, P2


@lru_cache(maxsize=64)
def _pair_squares(amax: int, kmax: int) -> np.ndarray:
    """Q[a, s, k] = <a s 0 0|k 0>^2."""
    Q = np.zeros((amax + 1, amax + 1, kmax + 1))
    for a in range(1, amax + 1):
        for s in range(1, amax + 1):
            for k in range(abs(a - s), min(a + s, kmax) + 1, 2):
                Q[a, s, k] = clebsch_gordan(a, 0, s, 0, k, 0) ** 2
    Q.flags.writeable = False
    return Q


def pair_weights(C: np.ndarray, kmax: int) -> np.ndarray:
    """W_k = sum_{a,s} sqrt((2a+1)(2s+1))/(2 pi) C_a C_s <a s 0 0|k 0>^2."""
    amax = C.size - 1
    Q = _pair_squares(amax, kmax)
    v = np.sqrt(2.0 * np.arange(amax + 1) + 1.0) * C
    return np.einsum("a,s,ask->k", v, v, Q) / (2.0 * math.pi)


def _first_order_sum(C, l, m):
    """S = sum_{k=1}^{l} sqrt((4k+1)/pi) C_2k <2k l 0 0|l 0><2k l 0 m|l m> and its NBC weights."""
    G = _diag_coupling(l, m)
    terms = np.zeros(l + 1)
    for k in range(1, l + 1):
        if 2 * k < C.size:
            terms[k] = math.sqrt((4 * k + 1) / math.pi) * C[2 * k] * G[2 * k]
    return terms


# ------------------------------------------------------------------ kernels

@njit
def _degenerate_loop(C, l, x, neumann, G, W, P1, P2, jp, djp, e1, s1):
    amax = C.shape[0] - 1
    pmax = P1.shape[0] - 1
    L = l * (l + 1.0)
    D = x * x - L
    base = 0.0
    if neumann:
        base = (x * x - 3.0 * L) / D * e1 * e1 / 4.0 - L / D * e1 * s1
        for k in range(G.shape[0]):
            base += W[k] * G[k] * (1.0 + (k * (k + 1.0) - 2.0 * L) / (2.0 * D))
    else:
        base = e1 * e1 / 4.0
        for k in range(G.shape[0]):
            base += W[k] * G[k]
    pterm = np.zeros(pmax + 1)
    for p in range(pmax + 1):
        if p == l:
            continue
        pp = p * (p + 1.0)
        if neumann:
            v = 0.0
            va = 0.0
            vb = 0.0
            for k in range(1, amax + 1):
                if P1[p, k] != 0.0:
                    v += math.sqrt(2.0 * k + 1.0) * C[k] * P1[p, k] * (1.0 + (k * (k + 1.0) + L - pp) / (2.0 * D))
            for s in range(1, amax + 1):
                if P2[p, s] != 0.0:
                    w = math.sqrt(2.0 * s + 1.0) * C[s] * P2[p, s]
                    va += w
                    vb += w * (2.0 * x * x + s * (s + 1.0) - pp - L) / 4.0
            if v != 0.0 and (va != 0.0 or vb != 0.0):
                pterm[p] = -v * (va + jp[p] / (x * djp[p]) * vb) / math.pi
        else:
            v = 0.0
            va = 0.0
            for k in range(1, amax + 1):
                if P1[p, k] != 0.0:
                    v += math.sqrt(2.0 * k + 1.0) * C[k] * P1[p, k]
            for s in range(1, amax + 1):
                if P2[p, s] != 0.0:
                    va += math.sqrt(2.0 * s + 1.0) * C[s] * P2[p, s]
            if v != 0.0 and va != 0.0:
                pterm[p] = x * djp[p] / jp[p] * v * va / (2.0 * math.pi)
    return base, pterm


def _degenerate_numpy(C, l, x, neumann, G, W, P1, P2, jp, djp, e1, s1):
    pmax = P1.shape[0] - 1
    L = l * (l + 1.0)
    D = x * x - L
    ks = np.arange(G.shape[0], dtype=float)
    if neumann:
        base = (x * x - 3.0 * L) / D * e1 * e1 / 4.0 - L / D * e1 * s1
        base += np.sum(W * G * (1.0 + (ks * (ks + 1.0) - 2.0 * L) / (2.0 * D)))
    else:
        base = e1 * e1 / 4.0 + np.sum(W * G)
    a = np.arange(C.shape[0], dtype=float)
    sc = np.sqrt(2.0 * a + 1.0) * C
    sc[0] = 0.0
    p = np.arange(pmax + 1, dtype=float)[:, None]
    pp = p * (p + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if neumann:
            v = np.sum(sc * P1 * (1.0 + (a * (a + 1.0) + L - pp) / (2.0 * D)), axis=1)
            va = P2 @ sc
            vb = np.sum(sc * P2 * (2.0 * x * x + a * (a + 1.0) - pp - L) / 4.0, axis=1)
            live = (v != 0.0) & ((va != 0.0) | (vb != 0.0))
            pterm = np.where(live, -v * (va + jp[: pmax + 1] / (x * djp[: pmax + 1]) * vb) / math.pi, 0.0)
        else:
            v = P1 @ sc
            va = P2 @ sc
            live = (v != 0.0) & (va != 0.0)
            pterm = np.where(live, x * djp[: pmax + 1] / jp[: pmax + 1] * v * va / (2.0 * math.pi), 0.0)
    pterm[l] = 0.0
    return base, pterm


_degenerate_impl = select(_degenerate_loop, _degenerate_numpy)


def _nondegenerate_pterms(weights, x, neumann, jp, djp):
    p = np.arange(weights.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        if neumann:
            lam = 1.0 + x * jp[: weights.size] / djp[: weights.size]
            out = np.where(weights != 0.0, -weights * lam, 0.0)
        else:
            xi = 1.0 + x * djp[: weights.size] / jp[: weights.size]
            out = np.where(weights != 0.0, weights * xi, 0.0)
    out[p == 0] = 0.0
    return out


def _power_by_degree(exp: HarmonicExpansion) -> np.ndarray:
    """sum_q (-1)^q C_p^q C_p^-q / (2 pi) = sum_q |C_p^q|^2 / (2 pi)."""
    w = np.zeros(exp.a_max + 1)
    for (a, b), c in exp.coeffs.items():
        w[a] += abs(c) ** 2
    return w / (2.0 * math.pi)


# --------------------------------------------------------------- public API

def first_order_nondegenerate(mode: ModeIndex) -> float:
    """Zero for l = 0 under either boundary condition."""
    if mode.l != 0:
        raise ValueError("first_order_nondegenerate needs l = 0")
    return 0.0


def first_order_degenerate(mode: ModeIndex, exp: HarmonicExpansion) -> float:
    """E^(1)/E^(0) for l >= 1 and an axisymmetric deformation."""
    if mode.l == 0:
        raise ValueError("first_order_degenerate needs l >= 1")
    C = _require_axial(exp)
    terms = _first_order_sum(C, mode.l, mode.m)
    if mode.bc is BC.NEUMANN:
        x = mode_zero(mode)
        k = np.arange(mode.l + 1)
        terms = terms * (1.0 + k * (2 * k + 1) / (x * x - mode.l * (mode.l + 1)))
    return float(-np.sum(terms))


def _second_order_parts(mode: ModeIndex, exp: HarmonicExpansion):
    """(base, pterm, x, pmax) with E^(2)/E^(0) = base + sum(pterm)."""
    x = mode_zero(mode)
    neumann = mode.bc is BC.NEUMANN
    if mode.l == 0:
        weights = _power_by_degree(exp)
        pmax = weights.size - 1
        jp, djp = sph_jn_derivative_table(pmax + 1, np.array([x]))
        return 0.0, _nondegenerate_pterms(weights, x, neumann, jp[:, 0], djp[:, 0]), x
    C = _require_axial(exp)
    l, m = mode.l, mode.m
    amax = C.size - 1
    G = _diag_coupling(l, m)
    W = pair_weights(C, 2 * l)
    P1, P2 = _offdiag_coupling(l, m, amax)
    pmax = P1.shape[0] - 1
    jp, djp = sph_jn_derivative_table(pmax + 1, np.array([x]))
    e1 = first_order_degenerate(mode, exp)
    s1 = float(np.sum(_first_order_sum(C, l, m)))
    base, pterm = _degenerate_impl(
        np.ascontiguousarray(C), l, x, neumann, G, W, P1, P2,
        np.ascontiguousarray(jp[:, 0]), np.ascontiguousarray(djp[:, 0]), e1, s1,
    )
    return float(base), np.asarray(pterm), x


def second_order_nondegenerate(mode: ModeIndex, exp: HarmonicExpansion) -> float:
    """E^(2)/E^(0) for l = 0; accepts non-axisymmetric coefficients."""
    if mode.l != 0:
        raise ValueError("second_order_nondegenerate needs l = 0")
    base, pterm, _ = _second_order_parts(mode, exp)
    return float(base + np.sum(pterm))


def second_order_degenerate(mode: ModeIndex, exp: HarmonicExpansion) -> float:
    """E^(2)/E^(0) for l >= 1; p runs to a_max + l."""
    if mode.l == 0:
        raise ValueError("second_order_degenerate needs l >= 1")
    base, pterm, _ = _second_order_parts(mode, exp)
    return float(base + np.sum(pterm))


def resonance_ratio(p: int, x: float, bc: BC) -> tuple[float, float]:
    """|g(x)| / max |g| on [x - pi, x + pi] for g = j_p (Dirichlet) or j_p' (Neumann).

    Returns (ratio, g(x)).  The ratio is reported as 1 when g keeps one sign
    on the window: a small value there means evanescent decay, not a
    near-coincident zero.
    """
    grid = np.linspace(max(x - math.pi, 1e-3), x + math.pi, _WINDOW_POINTS)
    j, dj = sph_jn_derivative_table(p, np.concatenate([[x], grid]))
    g = (j if bc is BC.DIRICHLET else dj)[p]
    g0, gw = float(g[0]), g[1:]
    if not np.any(np.sign(gw[:-1]) * np.sign(gw[1:]) < 0):
        return 1.0, g0
    scale = float(np.max(np.abs(gw)))
    return (abs(g0) / scale if scale > 0 else 1.0), g0


def mode_energy(mode: ModeIndex, exp: HarmonicExpansion, threshold: float = RESONANCE_THRESHOLD) -> EnergyResult:
    """All corrections for one mode, with near-resonance and truncation flags."""
    E0 = unperturbed_energy(mode, exp.R0)
    if mode.l == 0:
        r1 = first_order_nondegenerate(mode)
    else:
        r1 = first_order_degenerate(mode, exp)
    base, pterm, x = _second_order_parts(mode, exp)
    r2 = float(base + np.sum(pterm))
    flags = []
    drop = 0.0
    for p in np.nonzero(pterm)[0]:
        ratio, g = resonance_ratio(int(p), x, mode.bc)
        if ratio < threshold:
            flags.append(NearResonance(int(p), g, ratio))
            drop += pterm[p]
    tail = _tail(exp)
    if tail > TAIL_TOLERANCE:
        flags.append(TruncationFlag(tail))
    reg = r2 - drop if drop else None
    return EnergyResult(mode, E0, float(r1), r2, tuple(flags), reg)


def _tail(exp: HarmonicExpansion) -> float:
    top = [abs(c) for (a, _), c in exp.coeffs.items() if a >= exp.a_max - 1]
    return max(top, default=0.0)
