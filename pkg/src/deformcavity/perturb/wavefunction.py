"""Eigenfunction corrections psi^(1), psi^(2) in closed form.

The particular parts come from expanding

    sum_p c_p j_p(K r (1 + f)) Y_p^q,    K^2 = E0 (1 + E1 + E2),

which solves the mapped equation exactly, in powers of the deformation.
With eta = K r (1 + f) / (k r) - 1 this gives

    psi1 = N rho j_l' eta1 Y_l^m + sum A_p^q j_p Y_p^q
    psi2 = N [rho j_l' eta2 + rho^2 j_l'' eta1^2 / 2] Y_l^m
           + sum A_p^q rho j_p' eta1 Y_p^q + sum B_p^q j_p Y_p^q

and the homogeneous coefficients A, B follow by projecting the boundary
condition at r = R0 onto spherical harmonics.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import replace

import numpy as np

from ..shapes import HarmonicExpansion
from ..specfun.bessel import sph_jn_derivative_table, sph_jn_table
from ..specfun.clebsch import clebsch_gordan
from ..specfun.harmonics import legendre_table
from ..specfun.quadrature import gauss_legendre_nodes
from . import terms as T
from .energy import (
    RESONANCE_THRESHOLD,
    first_order_degenerate,
    mode_zero,
    resonance_ratio,
    second_order_degenerate,
    second_order_nondegenerate,
)
from .types import BC, ModeIndex, NearResonance, PartialResultWarning, WavefunctionExpansion

RADIAL_NODES = 48
_DROP = 1e-14


def normalization_constant(mode: ModeIndex, R0: float) -> float:
    """N with int_{r<R0} |N j_l(k r) Y_l^m|^2 dV = 1."""
    x = mode_zero(mode)
    l = mode.l
    j = sph_jn_table(l + 1, np.array([x]))[:, 0]
    jm1 = math.cos(x) / x if l == 0 else j[l - 1]
    return 1.0 / math.sqrt(R0**3 * 0.5 * (j[l] ** 2 - jm1 * j[l + 1]))


def _degree(exp):
    if not exp.coeffs:
        return 0, 0
    return max(a for a, _ in exp.coeffs), max(abs(b) for _, b in exp.coeffs)


class _Grid:
    """Flattened (r, theta, phi) points with the deformation jet attached."""

    def __init__(self, exp, r, theta, phi):
        r, theta, phi = np.broadcast_arrays(
            np.asarray(r, dtype=float), np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)
        )
        self.shape = r.shape
        self.r, self.theta, self.phi = r.ravel(), theta.ravel(), phi.ravel()
        self.fjet = T.DeformationJet(exp, self.theta, self.phi)

    def jet(self, terms, k):
        return T.evaluate_terms(terms, k, self.r, self.theta, self.phi, fjet=self.fjet)


def sphere_grid(exp, n_theta, n_phi):
    """Gauss-Legendre in cos(theta) times a uniform phi grid on r = R0."""
    u, w = gauss_legendre_nodes(n_theta)
    theta = np.arccos(u)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    return _Grid(exp, exp.R0, th, ph), w


def ball_grid(exp, n_theta, n_phi, n_r=RADIAL_NODES):
    """Tensor rule over r <= R0; returns the grid and the flat volume weights r^2 dr dOmega."""
    rr, wr = gauss_legendre_nodes(n_r, 0.0, exp.R0)
    u, wu = gauss_legendre_nodes(n_theta)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    R, TH, PH = np.meshgrid(rr, np.arccos(u), phi, indexing="ij")
    W = (wr * rr**2)[:, None, None] * wu[None, :, None] * np.full(n_phi, 2.0 * math.pi / n_phi)[None, None, :]
    return _Grid(exp, R, TH, PH), W.ravel()


def project(values, grid_shape, weights, pmax, qs):
    """int g Y_p^q* dOmega for the requested q and |q| <= p <= pmax.

    ``values`` holds g on a sphere_grid; with a single phi point g is taken
    to be proportional to exp(i q phi) for the one q in ``qs``.
    """
    g = np.asarray(values).reshape(grid_shape)
    n_theta, n_phi = g.shape
    if n_phi == 1:
        if len(qs) != 1:
            raise ValueError("a single phi point resolves one azimuthal order")
        F = {qs[0]: 2.0 * math.pi * g[:, 0]}
    else:
        spec = np.fft.fft(g, axis=1) * (2.0 * math.pi / n_phi)
        F = {q: spec[:, q % n_phi] for q in qs}
    qmax = max(abs(q) for q in qs)
    u, _ = gauss_legendre_nodes(n_theta)
    tab = legendre_table(pmax, qmax, u)
    out = {}
    for q in qs:
        aq = abs(q)
        sign = -1.0 if (q < 0 and aq % 2) else 1.0
        for p in range(aq, pmax + 1):
            out[(p, q)] = complex(np.sum(weights * F[q] * sign * tab[p, aq]))
    return out


class _Builder:
    def __init__(self, mode: ModeIndex, exp: HarmonicExpansion, threshold: float):
        if mode.l and not exp.axisymmetric:
            raise ValueError("degenerate states need an axisymmetric expansion")
        self.mode, self.exp, self.threshold = mode, exp, threshold
        self.l, self.m = mode.l, mode.m
        self.neumann = mode.bc is BC.NEUMANN
        self.x = mode_zero(mode)
        self.k = self.x / exp.R0
        self.N = normalization_constant(mode, exp.R0)
        self.amax, self.bmax = _degree(exp)
        if mode.l == 0:
            self.e1 = 0.0
            self.e2 = second_order_nondegenerate(mode, exp)
        else:
            self.e1 = first_order_degenerate(mode, exp)
            self.e2 = second_order_degenerate(mode, exp)
        self.n_theta = 2 * self.amax + self.l + 8
        self.n_phi = 1 if self.bmax == 0 else 2 * (2 * self.bmax + abs(self.m)) + 1
        self.surface, self.sw = sphere_grid(exp, self.n_theta, self.n_phi)
        self.flags = []

    # ------------------------------------------------------------ pieces
    def eta1(self):
        return {1: 1.0, 0: 0.5 * self.e1}

    def eta2(self):
        return {0: 0.5 * self.e2 - self.e1**2 / 8.0, 1: 0.5 * self.e1}

    def eta1_sq(self):
        return {2: 1.0, 1: self.e1, 0: self.e1**2 / 4.0}

    def psi0(self):
        return {(0, self.l, 0, self.l, self.m): self.N}

    def particular1(self):
        return T.product(T.rho_dj(self.l), self.eta1(), self.l, self.m, self.N)

    def particular2(self, A):
        l, m, N = self.l, self.m, self.N
        out = T.product(T.rho_dj(l), self.eta2(), l, m, N)
        T.add_terms(out, T.product(T.rho2_ddj(l), self.eta1_sq(), l, m, 0.5 * N))
        for (p, q), a in A.items():
            T.add_terms(out, T.product(T.rho_dj(p), self.eta1(), p, q, a))
        return out

    def qs(self, order):
        if self.n_phi == 1:
            return [self.m]
        Q = order * self.bmax + abs(self.m)
        return list(range(-Q, Q + 1))

    def solve(self, order, particular, previous):
        """Homogeneous coefficients for one order and the (l, m) residual."""
        part = self.surface.jet(particular, self.k)
        if self.neumann:
            g = part["r"] + T.neumann_transfer(self.surface.jet(previous[-1], self.k), self.exp.R0, self.surface.fjet)
            if len(previous) >= 2:
                g = g + self.surface.fjet.gradient_square() * self.surface.jet(previous[-2], self.k)["r"]
        else:
            g = part["v"]
        pmax = order * self.amax + self.l
        proj = project(g, (self.n_theta, self.n_phi), self.sw, pmax, self.qs(order))
        scale = max((abs(v) for v in proj.values()), default=0.0)
        j, dj = sph_jn_derivative_table(pmax, np.array([self.x]))
        den = (self.k * dj[:, 0]) if self.neumann else j[:, 0]
        coeffs = {}
        for (p, q), v in proj.items():
            if (p, q) == (self.l, self.m) or abs(v) <= _DROP * scale:
                continue
            c = -v / den[p]
            coeffs[(p, q)] = c.real if self.exp.axisymmetric else c
            ratio, d = resonance_ratio(p, self.x, self.mode.bc)
            if ratio < self.threshold:
                self.flags.append(NearResonance(p, d, ratio))
        residual = abs(proj.get((self.l, self.m), 0.0))
        return coeffs, residual

    def a_lm(self):
        """Coefficient of j_l Y_l^m in psi1 fixed by normalization."""
        if not self.neumann or self.l == 0:
            return 0.0
        l, m, x = self.l, self.m, self.x
        L = l * (l + 1)
        C = self.exp.axial()
        s = 0.0
        for k in range(1, min(2 * l, C.size - 1) + 1):
            s += math.sqrt((2 * k + 1) / math.pi) * k * (k + 1) * C[k] \
                * clebsch_gordan(k, 0, l, 0, l, 0) * clebsch_gordan(k, 0, l, m, l, m)
        return -self.N * (x * x - 3 * L) / (8.0 * (x * x - L) ** 2) * s


def _homogeneous(coeffs):
    return {(0, p, 0, p, q): c for (p, q), c in coeffs.items()}


def _dedupe(flags):
    seen = {}
    for f in flags:
        seen.setdefault(f.p, f)
    return tuple(seen[p] for p in sorted(seen))


def first_order_wavefunction(mode: ModeIndex, exp: HarmonicExpansion,
                             threshold: float = RESONANCE_THRESHOLD) -> WavefunctionExpansion:
    """psi0 + psi1 with A_p^q from the order-1 boundary condition."""
    b = _Builder(mode, exp, threshold)
    psi0 = b.psi0()
    part1 = b.particular1()
    A, _ = b.solve(1, part1, [psi0])
    A_lm = b.a_lm()
    psi1 = T.add_terms(dict(part1), _homogeneous(A))
    if A_lm:
        T.add_terms(psi1, {(0, b.l, 0, b.l, b.m): A_lm})
    return WavefunctionExpansion(
        mode=mode, expansion=exp, k=b.k, N=b.N, ratio1=b.e1, ratio2=b.e2,
        orders=[psi0, psi1], A_coeffs=A, A_l_m=A_lm, flags=_dedupe(b.flags),
    )


def second_order_wavefunction(mode: ModeIndex, exp: HarmonicExpansion,
                              threshold: float = RESONANCE_THRESHOLD) -> WavefunctionExpansion:
    """psi0 + psi1 + psi2.

    For l = 0 the B_p^q follow from the order-2 boundary condition and B0 is
    left at zero until ``normalize``.  For l >= 1 only the particular part
    and the A-dependent terms are built; the result is marked incomplete.
    """
    w = first_order_wavefunction(mode, exp, threshold)
    b = _Builder(mode, exp, threshold)
    A = dict(w.A_coeffs)
    if w.A_l_m:
        A[(mode.l, mode.m)] = w.A_l_m
    part2 = b.particular2(A)
    if mode.l == 0:
        B, _ = b.solve(2, part2, w.orders)
        psi2 = T.add_terms(dict(part2), _homogeneous(B))
        complete = True
    else:
        B, psi2, complete = {}, dict(part2), False
    flags = _dedupe(list(w.flags) + b.flags)
    return replace(w, orders=[w.orders[0], w.orders[1], psi2], B_coeffs=B, B0=0.0,
                   complete=complete, flags=flags)


def boundary_consistency(mode: ModeIndex, exp: HarmonicExpansion) -> list[float]:
    """|(l, m) projection| of the order-1 and order-2 boundary data.

    It vanishes exactly when E1, E2 agree with the boundary conditions, so it
    checks the energy formulas against the wavefunction construction.
    """
    b = _Builder(mode, exp, RESONANCE_THRESHOLD)
    psi0 = b.psi0()
    part1 = b.particular1()
    A, r1 = b.solve(1, part1, [psi0])
    A_lm = b.a_lm()
    psi1 = T.add_terms(dict(part1), _homogeneous(A))
    if A_lm:
        A[(mode.l, mode.m)] = A_lm
        T.add_terms(psi1, {(0, b.l, 0, b.l, b.m): A_lm})
    _, r2 = b.solve(2, b.particular2(A), [psi0, psi1])
    return [r1 / b.N, r2 / b.N]


def _physical_grid(w):
    amax, bmax = _degree(w.expansion)
    n_theta = 4 * amax + w.mode.l + 8
    n_phi = 1 if bmax == 0 else 8 * bmax + 2 * abs(w.mode.m) + 1
    grid, W = ball_grid(w.expansion, n_theta, n_phi)
    jac = (1.0 + grid.fjet.jet["v"]) ** 3
    return grid, W * jac


def norm_squared(w: WavefunctionExpansion, order: int = 2, physical: bool = True) -> float:
    """int |psi0 + ... + psi_order|^2 dV over the cavity (or the mapped ball)."""
    if physical:
        grid, W = _physical_grid(w)
    else:
        amax, bmax = _degree(w.expansion)
        grid, W = ball_grid(w.expansion, 2 * amax * order + w.mode.l + 8,
                            1 if bmax == 0 else 4 * order * bmax + 2 * abs(w.mode.m) + 1)
    total = {}
    for terms in w.orders[: order + 1]:
        T.add_terms(total, terms)
    v = grid.jet(total, w.k)["v"]
    return float(np.sum(W * np.abs(v) ** 2))


def normalize(w: WavefunctionExpansion) -> WavefunctionExpansion:
    """Fix B0 so that psi0 + psi1 + psi2 has unit norm over the cavity.

    N is already the unit-norm constant of psi0 on the ball r <= R0.  B0 is
    the root of the quadratic norm condition closest to zero.
    """
    if w.max_order < 2:
        raise ValueError("normalize needs the second-order wavefunction")
    if not w.complete:
        raise ValueError("degenerate second-order wavefunction has no B coefficients")
    if not any(w.expansion.coeffs.values()):
        return replace(w, B0=0.0)
    l, m = w.mode.l, w.mode.m
    grid, W = _physical_grid(w)
    total = {}
    for terms in w.orders:
        T.add_terms(total, terms)
    key = (0, l, 0, l, m)
    base = dict(total)
    base[key] = base.get(key, 0.0) - w.B0
    u = grid.jet(base, w.k)["v"]
    v = grid.jet({key: 1.0}, w.k)["v"]
    a = float(np.sum(W * np.abs(v) ** 2))
    bq = 2.0 * float(np.sum(W * (np.conj(v) * u).real))
    c = float(np.sum(W * np.abs(u) ** 2)) - 1.0
    disc = bq * bq - 4.0 * a * c
    if disc < 0:
        raise ValueError(
            "no real B0 gives a unit norm; the corrections already exceed it "
            f"(flags: {', '.join(map(str, w.flags)) or 'none'})"
        )
    roots = [(-bq + s * math.sqrt(disc)) / (2.0 * a) for s in (1.0, -1.0)]
    B0 = min(roots, key=abs)
    psi2 = {k_: c_ for k_, c_ in w.orders[2].items() if k_ != key}
    rest = w.orders[2].get(key, 0.0) - w.B0
    psi2[key] = rest + B0
    return replace(w, orders=[w.orders[0], w.orders[1], psi2], B0=B0)


def evaluate_wavefunction(w: WavefunctionExpansion, r, theta, phi=0.0, order: int = 2,
                          coordinates: str = "mapped"):
    """psi0 + ... + psi_order at the given points.

    ``coordinates="mapped"`` takes (r, theta, phi) in the frame where the
    cavity is the ball r <= R0.  ``"physical"`` takes the true radius R and
    maps it through r = R / (1 + f).
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if order > w.max_order:
        raise ValueError(f"wavefunction carries corrections through order {w.max_order} only")
    if order == 2 and not w.complete:
        warnings.warn("second-order degenerate wavefunction omits its B coefficients",
                      PartialResultWarning, stacklevel=2)
    r = np.asarray(r, dtype=float)
    if coordinates == "physical":
        f = np.real(w.expansion.deformation(theta, phi))
        r = r / (1.0 + f)
    elif coordinates != "mapped":
        raise ValueError("coordinates must be 'mapped' or 'physical'")
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    total = {}
    for terms in w.orders[: order + 1]:
        T.add_terms(total, terms)
    grid = _Grid(w.expansion, r, theta, phi)
    v = grid.jet(total, w.k)["v"].reshape(grid.shape)
    return v if v.ndim else complex(v)
