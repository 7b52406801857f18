"""Exact Clebsch-Gordan coefficients for integer angular momenta."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


@dataclass(frozen=True)
class AngularMomentumTriple:
    """Coupling <j1 m1 j2 m2 | j3 m3> with integer quantum numbers."""

    j1: int
    m1: int
    j2: int
    m2: int
    j3: int
    m3: int

    def allowed(self) -> bool:
        j1, m1, j2, m2, j3, m3 = self.j1, self.m1, self.j2, self.m2, self.j3, self.m3
        if min(j1, j2, j3) < 0:
            return False
        if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
            return False
        if m1 + m2 != m3:
            return False
        return abs(j1 - j2) <= j3 <= j1 + j2


_FACT = [1]


def _fact(n):
    while len(_FACT) <= n:
        _FACT.append(_FACT[-1] * len(_FACT))
    return _FACT[n]


@lru_cache(maxsize=None)
def _squared(j1, m1, j2, m2, j3, m3):
    """Racah's formula in integers: coefficient^2 = num / den, with its sign."""
    f = _fact
    pre_num = (2 * j3 + 1) * f(j3 + j1 - j2) * f(j3 - j1 + j2) * f(j1 + j2 - j3)
    pre_num *= f(j3 + m3) * f(j3 - m3) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)
    pre_den = f(j1 + j2 + j3 + 1)
    kmin = max(0, j2 - j3 - m1, j1 + m2 - j3)
    kmax = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    # every denominator divides the product of the largest factorial in each slot
    slots = (
        (0, 1), (j1 + j2 - j3, -1), (j1 - m1, -1), (j2 + m2, -1),
        (j3 - j2 + m1, 1), (j3 - j1 - m2, 1),
    )
    big = 1
    for base, step in slots:
        big *= f(max(base + step * kmin, base + step * kmax))
    total = 0
    for k in range(kmin, kmax + 1):
        den = 1
        for base, step in slots:
            den *= f(base + step * k)
        term = big // den
        total += -term if k % 2 else term
    sign = (total > 0) - (total < 0)
    return Fraction(pre_num * total * total, pre_den * big * big), sign


def clebsch_gordan_exact(j1, m1, j2, m2, j3, m3):
    """Return (square, sign) of the coefficient as an exact Fraction and an int."""
    t = AngularMomentumTriple(int(j1), int(m1), int(j2), int(m2), int(j3), int(m3))
    if not t.allowed():
        return Fraction(0), 0
    return _squared(t.j1, t.m1, t.j2, t.m2, t.j3, t.m3)


@lru_cache(maxsize=None)
def clebsch_gordan(j1: int, m1: int, j2: int, m2: int, j3: int, m3: int) -> float:
    """<j1 m1 j2 m2 | j3 m3>; zero outside the selection rules."""
    sq, sign = clebsch_gordan_exact(j1, m1, j2, m2, j3, m3)
    if sign == 0:
        return 0.0
    # int / int division is correctly rounded even for huge operands
    return sign * math.sqrt(sq.numerator / sq.denominator)
