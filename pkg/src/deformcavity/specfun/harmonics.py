"""Normalized associated Legendre functions and spherical harmonics.

``legendre_table`` returns Pbar_l^m(cos theta) normalized so that
Y_l^m = Pbar_l^m(cos theta) exp(i m phi) is orthonormal on the unit sphere,
with the Condon-Shortley phase included.
"""
from __future__ import annotations

import math

import numpy as np

from .._accel import njit, select


@njit
def _legendre_loop(lmax, mmax, x):
    npts = x.shape[0]
    out = np.zeros((lmax + 1, mmax + 1, npts))
    pmm = np.empty(npts)
    s = np.empty(npts)
    for i in range(npts):
        s[i] = math.sqrt(max(0.0, (1.0 - x[i]) * (1.0 + x[i])))
        pmm[i] = math.sqrt(1.0 / (4.0 * math.pi))
    for m in range(min(mmax, lmax) + 1):
        if m > 0:
            f = math.sqrt((2.0 * m + 1.0) / (2.0 * m))
            for i in range(npts):
                pmm[i] *= -s[i] * f
        for i in range(npts):
            out[m, m, i] = pmm[i]
        if m + 1 <= lmax:
            f = math.sqrt(2.0 * m + 3.0)
            for i in range(npts):
                out[m + 1, m, i] = f * x[i] * pmm[i]
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            for i in range(npts):
                out[l, m, i] = a * (x[i] * out[l - 1, m, i] - b * out[l - 2, m, i])
    return out


def _legendre_numpy(lmax, mmax, x):
    out = np.zeros((lmax + 1, mmax + 1, x.shape[0]))
    s = np.sqrt(np.maximum(0.0, (1.0 - x) * (1.0 + x)))
    pmm = np.full_like(x, math.sqrt(1.0 / (4.0 * math.pi)))
    for m in range(min(mmax, lmax) + 1):
        if m > 0:
            pmm = pmm * (-s * math.sqrt((2.0 * m + 1.0) / (2.0 * m)))
        out[m, m] = pmm
        if m + 1 <= lmax:
            out[m + 1, m] = math.sqrt(2.0 * m + 3.0) * x * pmm
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[l, m] = a * (x * out[l - 1, m] - b * out[l - 2, m])
    return out


_legendre_impl = select(_legendre_loop, _legendre_numpy)


def legendre_table(lmax: int, mmax: int, x) -> np.ndarray:
    """Pbar_l^m(x) for 0 <= m <= mmax, m <= l <= lmax; shape (lmax+1, mmax+1) + x.shape."""
    xa = np.asarray(x, dtype=float)
    if lmax < 0 or mmax < 0:
        raise ValueError("lmax and mmax must be non-negative")
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("Legendre argument must lie in [-1, 1]")
    flat = np.ascontiguousarray(xa.ravel())
    return _legendre_impl(int(lmax), int(mmax), flat).reshape((lmax + 1, mmax + 1) + xa.shape)


def legendre_normalized(l: int, m: int, x) -> np.ndarray:
    """Pbar_l^m(x) for a single (l, m); negative m uses Pbar_l^{-m} = (-1)^m Pbar_l^m."""
    if abs(m) > l:
        return np.zeros(np.shape(x))
    p = legendre_table(l, abs(m), x)[l, abs(m)]
    if m < 0 and m % 2:
        p = -p
    return p


def spherical_harmonic(l: int, m: int, theta, phi) -> np.ndarray:
    """Complex orthonormal Y_l^m(theta, phi) with the Condon-Shortley phase."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid (l, m) = ({l}, {m})")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return legendre_normalized(l, m, np.cos(theta)) * np.exp(1j * m * phi)
