"""Independent checks of the perturbative solution.

``verify_inner_product`` recomputes E^(1), E^(2) from volume integrals of
the mapped operators.  The pointwise checks apply the same operators at
interior points or the boundary conditions on r = R0, order by order.
"""
from __future__ import annotations

import math

import numpy as np

from ..shapes import HarmonicExpansion
from . import terms as T
from .types import BC, ModeIndex
from .wavefunction import _degree, _Grid, ball_grid, second_order_wavefunction, sphere_grid


def _operators(jets, grid, E0, e1, e2):
    """Left-hand sides of the order-0, 1, 2 equations."""
    r, fj = grid.r, grid.fjet
    H = {n: [None] * 3 for n in range(3)}
    for i, jet in enumerate(jets):
        H[0][i] = T.h0(jet, r, fj)
        H[1][i] = T.h1(jet, r, fj)
        H[2][i] = T.h2(jet, r, fj)
    v = [jet["v"] for jet in jets]
    E1, E2 = E0 * e1, E0 * e2
    eq0 = H[0][0] + E0 * v[0]
    eq1 = H[0][1] + E0 * v[1] + H[1][0] + E1 * v[0]
    eq2 = H[0][2] + E0 * v[2] + H[1][1] + E1 * v[1] + H[2][0] + E2 * v[0]
    return (eq0, eq1, eq2), H, v


def residual_order_check(mode: ModeIndex, exp: HarmonicExpansion, points) -> list[float]:
    """max |residual| of the order-0, 1, 2 mapped equations at interior points.

    ``points`` is an (n, 3) array of (r, theta, phi) with 0 < r < R0 and
    theta strictly inside (0, pi).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 3:
        raise ValueError("points must have shape (n, 3)")
    w = second_order_wavefunction(mode, exp)
    grid = _Grid(exp, pts[:, 0], pts[:, 1], pts[:, 2])
    jets = [grid.jet(terms, w.k) for terms in w.orders]
    eqs, _, _ = _operators(jets, grid, w.E0, w.ratio1, w.ratio2)
    return [float(np.max(np.abs(e))) for e in eqs]


def _surface_term(w, grid, weights, order, psi0_surface):
    """R0^2 oint psi0* d_r psi_order dOmega, with d_r psi_order from the boundary condition."""
    if w.mode.bc is BC.DIRICHLET:
        return 0.0
    jets = [grid.jet(terms, w.k) for terms in w.orders[:order]]
    dr = -T.neumann_transfer(jets[order - 1], w.R0, grid.fjet)
    if order >= 2:
        dr = dr - grid.fjet.gradient_square() * jets[order - 2]["r"]
    return complex(w.R0**2 * np.sum(weights * np.conj(psi0_surface) * dr))


def verify_inner_product(mode: ModeIndex, exp: HarmonicExpansion, order: int) -> float:
    """E^(order)/E^(0) from volume integrals of the operator hierarchy.

    E_i <psi0|psi0> = -sum_{n<i} <psi0|(H_n + E_n) psi_{i-n}> - <psi0|H_i psi0> - S_i

    where S_i is the Green surface term; it vanishes for Dirichlet and equals
    R0^2 oint psi0* d_r psi_i for Neumann.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    w = second_order_wavefunction(mode, exp)
    amax, bmax = _degree(exp)
    l, m = mode.l, mode.m
    n_theta = 2 * amax + l + 16
    n_phi = 1 if bmax == 0 else 2 * (4 * bmax + 2 * abs(m)) + 1
    grid, W = ball_grid(exp, n_theta, n_phi)
    jets = [grid.jet(terms, w.k) for terms in w.orders[:order]]
    psi0c = np.conj(jets[0]["v"])
    r, fj = grid.r, grid.fjet
    E0 = w.E0
    if order == 1:
        rhs = -np.sum(W * psi0c * T.h1(jets[0], r, fj))
    else:
        E1 = E0 * w.ratio1
        rhs = -np.sum(W * psi0c * (T.h1(jets[1], r, fj) + E1 * jets[1]["v"]))
        rhs -= np.sum(W * psi0c * T.h2(jets[0], r, fj))
    surf, sw = sphere_grid(exp, n_theta, n_phi)
    sw2 = (sw[:, None] * np.full(n_phi, 2.0 * math.pi / n_phi)[None, :]).ravel()
    psi0_s = surf.jet(w.orders[0], w.k)["v"]
    rhs -= _surface_term(w, surf, sw2, order, psi0_s)
    norm = np.sum(W * np.abs(jets[0]["v"]) ** 2)
    return float((rhs / norm).real) / E0


def boundary_values(w, theta, phi=0.0, order: int | None = None) -> np.ndarray:
    """|order-i boundary condition| at points (R0, theta, phi), shape (orders, npts).

    Dirichlet: |psi_i(R0)|.  Neumann: |d_r psi_i + (f d_r - f_theta/r d_theta
    - f_phi/(r sin^2) d_phi) psi_{i-1} + F d_r psi_{i-2}| at r = R0.  Rows
    cover orders 0 .. ``order`` (default: all orders carried by w).
    """
    top = w.max_order if order is None else order
    if top > w.max_order:
        raise ValueError(f"wavefunction carries orders up to {w.max_order}")
    if top == 2 and not w.complete:
        raise ValueError("degenerate second-order wavefunction has no boundary-fitted B coefficients")
    th, ph = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    grid = _Grid(w.expansion, w.R0, th.ravel(), ph.ravel())
    jets = [grid.jet(terms, w.k) for terms in w.orders[: top + 1]]
    out = []
    for i in range(top + 1):
        if w.mode.bc is BC.DIRICHLET:
            g = jets[i]["v"]
        else:
            g = jets[i]["r"]
            if i >= 1:
                g = g + T.neumann_transfer(jets[i - 1], w.R0, grid.fjet)
            if i >= 2:
                g = g + grid.fjet.gradient_square() * jets[i - 2]["r"]
        out.append(np.abs(g))
    return np.array(out)


def boundary_residual(w, points: int = 64, order: int | None = None) -> list[float]:
    """max of ``boundary_values`` over a theta grid (and a few phi) per order."""
    theta = (np.arange(points) + 0.5) * math.pi / points
    phi = np.array([0.0]) if w.expansion.axisymmetric else np.linspace(0.0, 2 * math.pi, 7)[:-1]
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    vals = boundary_values(w, th, ph, order)
    return [float(v) for v in vals.max(axis=1)]
