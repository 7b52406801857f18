"""Gauss-Legendre rules on an interval."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _reference(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre_nodes(order: int, a: float = -1.0, b: float = 1.0):
    """Nodes and weights of the ``order``-point rule mapped to [a, b]."""
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = _reference(int(order))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def composite_nodes(breaks, order: int):
    """Concatenated Gauss-Legendre rules on consecutive intervals of ``breaks``."""
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            x, w = gauss_legendre_nodes(order, a, b)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)
