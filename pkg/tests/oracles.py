"""Independent reference values built from scipy and sympy only."""
import math
from functools import lru_cache

import numpy as np
from scipy import optimize, special
from sympy import N as sym_N
from sympy.physics.wigner import clebsch_gordan as sym_cg
from sympy.physics.wigner import gaunt as sym_gaunt


def jn(l, x):
    return special.spherical_jn(l, x)


def djn(l, x):
    return special.spherical_jn(l, x, derivative=True)


def ddjn(l, x):
    # spherical Bessel ODE
    return -2.0 / x * djn(l, x) - (1.0 - l * (l + 1) / x**2) * jn(l, x)


@lru_cache(maxsize=None)
def zeros(l, count, derivative=False):
    """First ``count`` positive zeros of j_l or j_l' by sign scan + brentq."""
    f = (lambda x: djn(l, x)) if derivative else (lambda x: jn(l, x))
    grid = np.arange(1e-3, 200.0, 0.01)
    vals = f(grid)
    out = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        out.append(optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
        if len(out) == count:
            break
    return tuple(out)


def cg(j1, m1, j2, m2, j3, m3):
    return float(sym_N(sym_cg(j1, j2, j3, m1, m2, m3), 30))


def ylm(l, m, theta, phi):
    return special.sph_harm_y(l, m, theta, phi)


def gaunt_conj(p, q, a, b, l, m):
    """oint conj(Y_p^q) Y_a^b Y_l^m dOmega."""
    return (-1) ** q * float(sym_N(sym_gaunt(p, a, l, -q, b, m), 30))


def first_order_A(mode_l, mode_m, x, C, N, neumann, R0=1.0):
    """A_p^q for an axisymmetric deformation from the order-1 boundary condition.

    Dirichlet: N x j_l'(x) f Y_l^m + sum A j_p(x) Y_p^m = 0.
    Neumann:   N k x j_l''(x) (f + E1/2) Y_l^m - (N/R0) j_l(x) grad f . grad Y_l^m
               + sum A k j_p'(x) Y_p^m = 0,
    using grad Y_a . grad Y_l -> (a(a+1) + l(l+1) - p(p+1))/2 on the Y_p component.
    """
    l, m = mode_l, mode_m
    k = x / R0
    L = l * (l + 1)
    out = {}
    for p in range(0, len(C) + l):
        if p == l:
            continue
        s = 0.0
        for a in range(1, len(C)):
            if C[a] == 0.0 or not abs(a - l) <= p <= a + l:
                continue
            g = gaunt_conj(p, m, a, 0, l, m) * C[a]
            if neumann:
                s += g * (N * k * x * ddjn(l, x) - N / R0 * jn(l, x) * 0.5 * (a * (a + 1) + L - p * (p + 1)))
            else:
                s += g * N * x * djn(l, x)
        if s == 0.0:
            continue
        den = k * djn(p, x) if neumann else jn(p, x)
        out[(p, m)] = -s / den
    return out


def norm_constant(l, x, R0=1.0):
    """1 / sqrt(int_0^R0 j_l(k r)^2 r^2 dr) by quadrature."""
    val, _ = __import__("scipy.integrate", fromlist=["quad"]).quad(
        lambda r: jn(l, x * r / R0) ** 2 * r * r, 0.0, R0, epsabs=1e-14, epsrel=1e-13
    )
    return 1.0 / math.sqrt(val)
