"""Closed-form building blocks rho^s j_nu(rho) f^e Y_p^q and their derivatives.

A wavefunction order is a dict mapping ``(s, nu, e, p, q)`` to a complex
coefficient.  ``evaluate_terms`` returns the value together with the
radial, angular and mixed derivatives needed by the mapped Helmholtz
operators and the boundary conditions.
"""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .._accel import njit, select
from ..specfun.bessel import sph_jn_table
from ..specfun.harmonics import legendre_table

# derivative slots of an evaluated jet
COMPONENTS = ("v", "r", "rr", "t", "tt", "p", "pp", "rt", "rp")
_ANG = ("v", "t", "p", "tt", "tp", "pp")


def add_terms(target, source, scale=1.0):
    for key, c in source.items():
        target[key] = target.get(key, 0.0) + scale * c
    return target


def product(radial, angular, p, q, scale=1.0):
    """Terms for scale * (sum radial[(s, nu)] rho^s j_nu) * (sum angular[e] f^e) * Y_p^q."""
    out = {}
    for (s, nu), a in radial.items():
        for e, b in angular.items():
            if a != 0 and b != 0:
                key = (s, nu, e, p, q)
                out[key] = out.get(key, 0.0) + scale * a * b
    return out


def rho_dj(l):
    """rho j_l'(rho) = l j_l - rho j_{l+1}."""
    return {(0, l): float(l), (1, l + 1): -1.0}


def rho2_ddj(l):
    """rho^2 j_l'' = (l(l+1) - 2l) j_l + 2 rho j_{l+1} - rho^2 j_l."""
    return {(0, l): float(l * (l + 1) - 2 * l), (1, l + 1): 2.0, (2, l): -1.0}


# ------------------------------------------------------------ angular jets

class DeformationJet:
    """f and its theta/phi derivatives at fixed angles."""

    def __init__(self, expansion, theta, phi):
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        self.theta, self.phi = theta, phi
        self.sin = np.sin(theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.cot = np.cos(theta) / self.sin
        shape = theta.shape
        jet = {k: np.zeros(shape, dtype=complex) for k in _ANG}
        if expansion.coeffs:
            amax = max(a for a, _ in expansion.coeffs)
            bmax = max(abs(b) for _, b in expansion.coeffs)
            tab = legendre_table(amax, bmax + 1, np.cos(theta))
            for (a, b), c in expansion.coeffs.items():
                y = harmonic_jet(tab, a, b, theta, phi, self.cot)
                for k in _ANG:
                    jet[k] += c * y[k]
        self.jet = {k: v.real for k, v in jet.items()}

    def power(self, e):
        f = self.jet
        one = np.ones_like(f["v"])
        zero = np.zeros_like(f["v"])
        if e == 0:
            return {"v": one, "t": zero, "p": zero, "tt": zero, "tp": zero, "pp": zero}
        if e == 1:
            return f
        if e == 2:
            v, t, p = f["v"], f["t"], f["p"]
            return {
                "v": v * v,
                "t": 2 * v * t,
                "p": 2 * v * p,
                "tt": 2 * (t * t + v * f["tt"]),
                "tp": 2 * (t * p + v * f["tp"]),
                "pp": 2 * (p * p + v * f["pp"]),
            }
        raise ValueError("only f^0, f^1 and f^2 occur through second order")

    def laplacian(self):
        """L^2 f on the unit sphere."""
        f = self.jet
        with np.errstate(divide="ignore", invalid="ignore"):
            return f["tt"] + self.cot * f["t"] + f["pp"] / self.sin**2

    def gradient_square(self):
        """F = f_theta^2 + f_phi^2 / sin^2."""
        return self.jet["t"] ** 2 + _over_sin2(self.jet["p"] ** 2, self.sin)


def _over_sin2(num, sin):
    # azimuthal terms vanish identically at the poles when num does (e.g. axisymmetric f)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / sin**2
    return np.where(num == 0, 0.0, out)


def harmonic_jet(tab, p, q, theta, phi, cot):
    """Y_p^q and derivatives from a table of normalized Legendre functions."""
    aq = abs(q)
    sign = -1.0 if (q < 0 and aq % 2) else 1.0
    P = sign * tab[p, aq]
    nxt = tab[p, aq + 1] if aq + 1 <= min(p, tab.shape[1] - 1) else 0.0
    # ladder form of dP/dtheta stays finite at the poles; ddP does not
    dP = math.sqrt((p - aq) * (p + aq + 1)) * nxt
    if aq:
        dP = 0.5 * (dP - math.sqrt((p + aq) * (p - aq + 1)) * tab[p, aq - 1])
    dP = sign * dP
    with np.errstate(divide="ignore", invalid="ignore"):
        ddP = -cot * dP - p * (p + 1) * P
        if q:
            ddP = ddP + q * q / np.sin(theta) ** 2 * P
    ph = np.exp(1j * q * np.asarray(phi))
    return {
        "v": P * ph,
        "t": dP * ph,
        "p": 1j * q * P * ph,
        "tt": ddP * ph,
        "tp": 1j * q * dP * ph,
        "pp": -(q * q) * P * ph,
    }


# ------------------------------------------------------------ accumulation

@njit
def _accumulate_loop(coef, ridx, gidx, R, G):
    # R[nr, 3, P] (value, d/dr, d2/dr2); G[ng, 6, P] (v, t, p, tt, tp, pp)
    npts = R.shape[2]
    ng = G.shape[0]
    # radial parts summed per angular factor first, then one pass over G
    acc = np.zeros((ng, 3, npts), dtype=np.complex128)
    used = np.zeros(ng, dtype=np.bool_)
    for n in range(coef.shape[0]):
        c = coef[n]
        ri = ridx[n]
        gi = gidx[n]
        used[gi] = True
        for d in range(3):
            for i in range(npts):
                acc[gi, d, i] += c * R[ri, d, i]
    out = np.zeros((9, npts), dtype=np.complex128)
    for gi in range(ng):
        if not used[gi]:
            continue
        for i in range(npts):
            rv = acc[gi, 0, i]
            rr = acc[gi, 1, i]
            gv = G[gi, 0, i]
            gt = G[gi, 1, i]
            gp = G[gi, 2, i]
            out[0, i] += rv * gv
            out[1, i] += rr * gv
            out[2, i] += acc[gi, 2, i] * gv
            out[3, i] += rv * gt
            out[4, i] += rv * G[gi, 3, i]
            out[5, i] += rv * gp
            out[6, i] += rv * G[gi, 5, i]
            out[7, i] += rr * gt
            out[8, i] += rr * gp
    return out


def _accumulate_numpy(coef, ridx, gidx, R, G):
    ng, nr = G.shape[0], R.shape[0]
    M = np.zeros((ng, nr), dtype=complex)
    np.add.at(M, (gidx, ridx), coef)
    Rv, Rr, Rrr = (M @ R[:, i, :] for i in range(3))
    out = np.empty((9, R.shape[2]), dtype=complex)
    out[0] = np.sum(Rv * G[:, 0], axis=0)
    out[1] = np.sum(Rr * G[:, 0], axis=0)
    out[2] = np.sum(Rrr * G[:, 0], axis=0)
    out[3] = np.sum(Rv * G[:, 1], axis=0)
    out[4] = np.sum(Rv * G[:, 3], axis=0)
    out[5] = np.sum(Rv * G[:, 2], axis=0)
    out[6] = np.sum(Rv * G[:, 5], axis=0)
    out[7] = np.sum(Rr * G[:, 1], axis=0)
    out[8] = np.sum(Rr * G[:, 2], axis=0)
    return out


_accumulate = select(_accumulate_loop, _accumulate_numpy)


def radial_jet(s, nu, k, rho, jtab):
    """rho^s j_nu and its first two r-derivatives (chain factor k)."""
    j0, j1, j2 = jtab[nu], jtab[nu + 1], jtab[nu + 2]
    a = s + nu
    with np.errstate(divide="ignore", invalid="ignore"):
        v = rho**s * j0
        d1 = (a * rho ** (s - 1) * j0 if a else 0.0) - rho**s * j1
        d2 = (a * (a - 1) * rho ** (s - 2) * j0 if a * (a - 1) else 0.0) \
            - (2 * a + 1) * rho ** (s - 1) * j1 + rho**s * j2
    return np.stack([v + 0 * rho, k * d1 + 0 * rho, k * k * d2 + 0 * rho])


def evaluate_terms(terms, k, r, theta, phi, fjet=None, expansion=None):
    """Evaluate sum of terms at points; returns dict of the COMPONENTS arrays."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    r, theta, phi = np.broadcast_arrays(r, theta, phi)
    shape = r.shape
    r, theta, phi = r.ravel(), theta.ravel(), phi.ravel()
    live = {key: c for key, c in terms.items() if c != 0}
    if not live:
        z = np.zeros(shape, dtype=complex)
        return {c: z.copy() for c in COMPONENTS}
    if fjet is None:
        fjet = DeformationJet(expansion, theta, phi)
    rho = k * r
    rkeys = sorted({(s, nu) for s, nu, _, _, _ in live})
    gkeys = sorted({(e, p, q) for _, _, e, p, q in live})
    numax = max(nu for _, nu in rkeys)
    jtab = sph_jn_table(numax + 2, rho)
    R = np.stack([radial_jet(s, nu, k, rho, jtab) for s, nu in rkeys]).astype(float)
    pmax = max(p for _, p, _ in gkeys)
    qmax = max(abs(q) for _, _, q in gkeys)
    tab = legendre_table(pmax, qmax + 1, np.cos(theta))
    powers = {e: fjet.power(e) for e in {e for e, _, _ in gkeys}}
    G = np.empty((len(gkeys), 6, r.size), dtype=complex)
    for i, (e, p, q) in enumerate(gkeys):
        y = harmonic_jet(tab, p, q, theta, phi, fjet.cot)
        F = powers[e]
        G[i, 0] = F["v"] * y["v"]
        G[i, 1] = F["t"] * y["v"] + F["v"] * y["t"]
        G[i, 2] = F["p"] * y["v"] + F["v"] * y["p"]
        G[i, 3] = F["tt"] * y["v"] + 2 * F["t"] * y["t"] + F["v"] * y["tt"]
        G[i, 4] = F["tp"] * y["v"] + F["t"] * y["p"] + F["p"] * y["t"] + F["v"] * y["tp"]
        G[i, 5] = F["pp"] * y["v"] + 2 * F["p"] * y["p"] + F["v"] * y["pp"]
    rindex = {key: i for i, key in enumerate(rkeys)}
    gindex = {key: i for i, key in enumerate(gkeys)}
    items = list(live.items())
    coef = np.array([c for _, c in items], dtype=complex)
    ridx = np.array([rindex[(s, nu)] for (s, nu, _, _, _), _ in items], dtype=np.int64)
    gidx = np.array([gindex[(e, p, q)] for (_, _, e, p, q), _ in items], dtype=np.int64)
    out = _accumulate(coef, ridx, gidx, np.ascontiguousarray(R), np.ascontiguousarray(G))
    return {name: out[i].reshape(shape) for i, name in enumerate(COMPONENTS)}


# --------------------------------------------------------------- operators

def h0(jet, r, fjet):
    """D^2 psi + L^2 psi / r^2."""
    ang = jet["tt"] + fjet.cot * jet["t"] + jet["pp"] / fjet.sin**2
    return jet["rr"] + 2.0 * jet["r"] / r + ang / r**2


def omega2(jet, fjet):
    f = fjet.jet
    return fjet.laplacian() * jet["r"] + 2.0 * f["t"] * jet["rt"] + 2.0 * f["p"] / fjet.sin**2 * jet["rp"]


def h1(jet, r, fjet):
    return -omega2(jet, fjet) / r - 2.0 * fjet.jet["v"] * h0(jet, r, fjet)


def h2(jet, r, fjet):
    f = fjet.jet["v"]
    d2 = jet["rr"] + 2.0 * jet["r"] / r
    return 3.0 * f * omega2(jet, fjet) / r + fjet.gradient_square() * d2 + 3.0 * f * f * h0(jet, r, fjet)


def neumann_transfer(jet, R0, fjet):
    """(f d/dr - f_theta/r d/dtheta - f_phi/(r sin^2) d/dphi) psi at r = R0."""
    f = fjet.jet
    return f["v"] * jet["r"] - f["t"] / R0 * jet["t"] - _over_sin2(f["p"] * jet["p"], fjet.sin) / R0


def group_by_angle(terms):
    out = defaultdict(dict)
    for (s, nu, e, p, q), c in terms.items():
        out[(e, p, q)][(s, nu)] = c
    return out
