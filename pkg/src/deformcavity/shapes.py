"""Axisymmetric cavity boundaries r(theta) and their harmonic expansion.

A boundary is written R(theta) = R0 (1 + f(theta)) with
f = sum_a C_a Y_a^0.  ``expand`` measures R0 and the C_a by quadrature.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .specfun.harmonics import legendre_table
from .specfun.quadrature import gauss_legendre_nodes

MAX_AMAX = 64
_CONVERGENCE_TOL = 1e-10
_MAX_QUAD = 2048


class ShapeError(ValueError):
    """Invalid shape parameters."""


class QuadratureError(RuntimeError):
    """Order doubling did not reach the requested agreement."""

    def __init__(self, message, estimates):
        super().__init__(message)
        self.estimates = estimates


class TruncationWarning(UserWarning):
    """The last retained coefficient is not small; a_max may be too low."""


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ShapeError(f"{name} must be a positive number, got {value!r}")


@dataclass(frozen=True)
class Sphere:
    radius: float = 1.0

    def __post_init__(self):
        _positive("radius", self.radius)

    def radius_at(self, theta):
        return np.full(np.shape(theta), float(self.radius))

    def breakpoints(self):
        return ()


@dataclass(frozen=True)
class Superegg:
    """Surface of revolution of the supercircle |cos|^n + |sin|^n = r^-n."""

    exponent: float

    def __post_init__(self):
        _positive("exponent", self.exponent)

    def radius_at(self, theta):
        n = self.exponent
        c = np.abs(np.cos(theta))
        s = np.abs(np.sin(theta))
        return (c**n + s**n) ** (-1.0 / n)

    def breakpoints(self):
        # |cos|^n and |sin|^n are not smooth at the equator and the poles
        return (0.5 * math.pi,)


@dataclass(frozen=True)
class Spheroid:
    """Equatorial radius r_a, polar radius r_c."""

    r_a: float
    r_c: float

    def __post_init__(self):
        _positive("r_a", self.r_a)
        _positive("r_c", self.r_c)

    def radius_at(self, theta):
        e = 1.0 - (self.r_a / self.r_c) ** 2
        return self.r_a / np.sqrt(1.0 - e * np.cos(theta) ** 2)

    def breakpoints(self):
        return ()


@dataclass(frozen=True)
class StadiumOfRevolution:
    """Half stadium (arcs of radius R, flat part of length d) spun about its long axis."""

    R: float
    d: float

    def __post_init__(self):
        _positive("R", self.R)
        if not (math.isfinite(self.d) and self.d >= 0):
            raise ShapeError(f"d must be non-negative, got {self.d!r}")

    def _profile(self, t):
        R, h = self.R, 0.5 * self.d
        c = math.atan2(h, R)
        cap = np.sqrt(R**2 - (h * np.cos(t)) ** 2)
        with np.errstate(divide="ignore"):
            flat = R / np.cos(t)
        return np.where(t <= -c, -h * np.sin(t) + cap, np.where(t >= c, h * np.sin(t) + cap, flat))

    def radius_at(self, theta):
        return self._profile(np.asarray(theta, dtype=float) - 0.5 * math.pi)

    def breakpoints(self):
        c = math.atan2(0.5 * self.d, self.R)
        return (0.5 * math.pi - c, 0.5 * math.pi, 0.5 * math.pi + c)


@dataclass(frozen=True)
class RoundedCylinder:
    """Rounded rectangle (corner arcs of radius R centred at (+-d, +-d)) spun about an axis.

    Height and base diameter are both 2(d + R).
    """

    R: float
    d: float

    def __post_init__(self):
        _positive("R", self.R)
        if not (math.isfinite(self.d) and self.d >= 0):
            raise ShapeError(f"d must be non-negative, got {self.d!r}")

    def _angles(self):
        R, d = self.R, self.d
        return math.atan2(d + R, d), math.atan2(d, d + R)

    def _profile(self, t):
        R, d = self.R, self.d
        a1, a2 = self._angles()
        s, c = np.sin(t), np.cos(t)
        s2 = np.sin(2.0 * t)
        with np.errstate(divide="ignore", invalid="ignore"):
            b1 = -(d + R) / s
            b2 = -d * (s - c) + np.sqrt(R**2 - d**2 - d**2 * s2)
            b3 = (d + R) / c
            b4 = d * (s + c) + np.sqrt(R**2 - d**2 + d**2 * s2)
            b5 = (d + R) / s
        return np.select([t <= -a1, t <= -a2, t <= a2, t <= a1], [b1, b2, b3, b4], b5)

    def radius_at(self, theta):
        return self._profile(np.asarray(theta, dtype=float) - 0.5 * math.pi)

    def breakpoints(self):
        a1, a2 = self._angles()
        h = 0.5 * math.pi
        return tuple(sorted({h - a1, h - a2, h, h + a2, h + a1} - {0.0, math.pi}))


def _axial_sum(coeffs, theta):
    lmax = max(coeffs)
    tab = legendre_table(lmax, 0, np.cos(np.asarray(theta, dtype=float)))
    out = np.zeros(np.shape(theta))
    for a, c in coeffs.items():
        out = out + c * tab[a, 0]
    return out


@dataclass(frozen=True)
class Pear:
    """R0 (1 + C2 Y_2^0 + C3 Y_3^0 + C4 Y_4^0)."""

    C2: float
    C3: float
    C4: float
    R0: float = 1.0

    def __post_init__(self):
        _positive("R0", self.R0)
        r = self.radius_at(np.linspace(0.0, math.pi, 721))
        if np.any(r <= 0):
            raise ShapeError("pear coefficients give a non-positive radius")

    def coefficients(self):
        return {2: float(self.C2), 3: float(self.C3), 4: float(self.C4)}

    def radius_at(self, theta):
        return self.R0 * (1.0 + _axial_sum(self.coefficients(), theta))

    def breakpoints(self):
        return ()


@dataclass(frozen=True)
class CustomRadial:
    """User boundary given either by axial coefficients {a: C_a} about R0,
    or by radius samples on a theta grid (clamped cubic spline)."""

    coefficients: tuple = ()
    samples: tuple = ()
    R0: float = 1.0
    _spline: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        _positive("R0", self.R0)
        if bool(self.coefficients) == bool(self.samples):
            raise ShapeError("give exactly one of coefficients or samples")
        if self.coefficients:
            coeffs = dict(self.coefficients)
            if any(int(a) != a or a < 1 or a > MAX_AMAX for a in coeffs):
                raise ShapeError(f"coefficient indices must be integers in 1..{MAX_AMAX}")
            object.__setattr__(self, "coefficients", tuple(sorted((int(a), float(c)) for a, c in coeffs.items())))
        else:
            from scipy.interpolate import CubicSpline

            th, r = (np.asarray(v, dtype=float) for v in zip(*self.samples))
            if th.size < 4 or np.any(np.diff(th) <= 0) or th[0] != 0.0 or not np.isclose(th[-1], math.pi):
                raise ShapeError("samples must be increasing in theta and span [0, pi]")
            if np.any(r <= 0):
                raise ShapeError("sampled radii must be positive")
            object.__setattr__(self, "_spline", CubicSpline(th, r, bc_type="clamped"))
        r = self.radius_at(np.linspace(0.0, math.pi, 721))
        if np.any(r <= 0):
            raise ShapeError("boundary is not star-shaped about the origin")

    def radius_at(self, theta):
        if self.coefficients:
            return self.R0 * (1.0 + _axial_sum(dict(self.coefficients), theta))
        return self._spline(np.asarray(theta, dtype=float))

    def breakpoints(self):
        if self.samples:
            return tuple(float(t) for t, _ in self.samples[1:-1])
        return ()


BoundaryShape = Union[Sphere, Superegg, Spheroid, StadiumOfRevolution, RoundedCylinder, Pear, CustomRadial]

SHAPE_KINDS = {
    "sphere": (Sphere, {"radius": 1.0}),
    "superegg": (Superegg, {}),
    "spheroid": (Spheroid, {"r_a": 1.0}),
    "stadium": (StadiumOfRevolution, {}),
    "rounded_cylinder": (RoundedCylinder, {}),
    "pear": (Pear, {"R0": 1.0}),
}

_ALIASES = {
    "n": "exponent",
    "ra": "r_a",
    "rc": "r_c",
    "c2": "C2",
    "c3": "C3",
    "c4": "C4",
    "r0": "R0",
    "r": "R",
}


def make_shape(kind: str, params: Mapping[str, object]) -> BoundaryShape:
    """Build a catalog shape from a kind name and numeric parameters."""
    key = kind.strip().lower().replace("-", "_")
    if key in ("oblate", "prolate"):
        params = dict(params)
        params.setdefault("r_c", 0.8 if key == "oblate" else 1.2)
        key = "spheroid"
    if key not in SHAPE_KINDS:
        raise ShapeError(f"unknown shape kind {kind!r}; known: {', '.join(sorted(SHAPE_KINDS))}")
    cls, defaults = SHAPE_KINDS[key]
    kwargs = dict(defaults)
    for name, value in params.items():
        name = name.strip()
        if name not in cls.__dataclass_fields__:
            name = _ALIASES.get(name.lower(), name)
        if name not in cls.__dataclass_fields__:
            raise ShapeError(f"shape {key!r} has no parameter {name!r}")
        try:
            kwargs[name] = _number(value)
        except ValueError as exc:
            raise ShapeError(f"parameter {name!r}: {exc}") from None
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ShapeError(f"shape {key!r}: {exc}") from None


def _number(value):
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    # allow simple forms such as 3*sqrt(3)/10
    allowed = {"sqrt": math.sqrt, "pi": math.pi}
    if not all(ch in "0123456789.+-*/()eE sqrtpi" for ch in text):
        raise ValueError(f"not a number: {text!r}")
    try:
        return float(eval(text, {"__builtins__": {}}, allowed))
    except Exception:
        raise ValueError(f"not a number: {text!r}") from None


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ShapeError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def shape_from_config(text: str) -> BoundaryShape:
    cfg = parse_config(text)
    kind = cfg.pop("shape", None) or cfg.pop("kind", None)
    if kind is None:
        raise ShapeError("configuration lacks a 'shape' entry")
    return make_shape(kind, cfg)


def radial(shape: BoundaryShape, theta) -> np.ndarray:
    """Boundary radius r(theta), theta in [0, pi]."""
    th = np.asarray(theta, dtype=float)
    if np.any(th < -1e-12) or np.any(th > math.pi + 1e-12):
        raise ValueError("theta must lie in [0, pi]")
    return shape.radius_at(np.clip(th, 0.0, math.pi))


def _panels(shape):
    pts = {0.0, 0.25 * math.pi, 0.5 * math.pi, 0.75 * math.pi, math.pi}
    pts.update(float(b) for b in shape.breakpoints() if 0.0 < b < math.pi)
    return sorted(pts)


def _theta_rule(shape, order):
    # Gauss-Legendre in theta on each analytic branch; weight sin(theta)
    xs, ws = [], []
    edges = _panels(shape)
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a > 1e-14:
            x, w = gauss_legendre_nodes(order, a, b)
            xs.append(x)
            ws.append(w * np.sin(x))
    return np.concatenate(xs), np.concatenate(ws)


def _converged(fn, shape, quad_order, what):
    if quad_order < 16:
        raise ValueError("quad_order must be at least 16")
    order = int(quad_order)
    prev = fn(*_theta_rule(shape, order))
    while True:
        order *= 2
        cur = fn(*_theta_rule(shape, order))
        if np.max(np.abs(cur - prev)) <= _CONVERGENCE_TOL * max(1.0, np.max(np.abs(cur))):
            return cur
        if order >= _MAX_QUAD:
            raise QuadratureError(
                f"{what} did not converge to {_CONVERGENCE_TOL:g} by order {order}", (prev, cur)
            )
        prev = cur


def average_radius(shape: BoundaryShape, quad_order: int = 64) -> float:
    """Solid-angle mean of r(theta)."""
    if isinstance(shape, Sphere):
        return float(shape.radius)

    def fn(th, w):
        return np.array([0.5 * np.sum(w * shape.radius_at(th))])

    return float(_converged(fn, shape, quad_order, "average radius")[0])


def equal_volume_radius(shape: BoundaryShape, quad_order: int = 64) -> float:
    """Radius of the sphere with the same volume, (mean r^3)^(1/3)."""

    def fn(th, w):
        return np.array([0.5 * np.sum(w * shape.radius_at(th) ** 3)])

    return float(_converged(fn, shape, quad_order, "volume")[0]) ** (1.0 / 3.0)


@dataclass(frozen=True)
class HarmonicExpansion:
    """R0 and the coefficients C_a^b of f = R/R0 - 1."""

    R0: float
    coeffs: Mapping
    a_max: int
    axisymmetric: bool = True
    convention: str = "average"

    def __post_init__(self):
        _positive("R0", self.R0)
        clean = {}
        for (a, b), c in dict(self.coeffs).items():
            a, b = int(a), int(b)
            if a < 1 or abs(b) > a or a > self.a_max:
                raise ValueError(f"coefficient index ({a}, {b}) out of range")
            clean[(a, b)] = complex(c)
        for (a, b), c in clean.items():
            partner = clean.get((a, -b), 0.0)
            if abs(partner - (-1) ** b * np.conj(c)) > 1e-12 * max(1.0, abs(c)):
                raise ValueError(f"coefficients ({a}, +-{b}) violate C_a^-b = (-1)^b conj(C_a^b)")
        if self.axisymmetric and any(b != 0 or c.imag != 0 for (a, b), c in clean.items()):
            raise ValueError("axisymmetric expansion must carry real b = 0 terms only")
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def from_axial(cls, R0, C, convention="average"):
        """Build from a sequence C[a], a = 0..a_max (C[0] is ignored)."""
        C = np.asarray(C, dtype=float)
        return cls(R0=float(R0), coeffs={(a, 0): C[a] for a in range(1, C.size) if C[a] != 0.0},
                   a_max=max(C.size - 1, 1), axisymmetric=True, convention=convention)

    def axial(self) -> np.ndarray:
        """Real C_a for a = 0..a_max with C_0 = 0."""
        if not self.axisymmetric:
            raise ValueError("expansion is not axisymmetric")
        out = np.zeros(self.a_max + 1)
        for (a, _), c in self.coeffs.items():
            out[a] = c.real
        return out

    def scaled(self, t: float) -> "HarmonicExpansion":
        return HarmonicExpansion(self.R0, {k: t * v for k, v in self.coeffs.items()},
                                 self.a_max, self.axisymmetric, self.convention)

    def deformation(self, theta, phi=0.0) -> np.ndarray:
        """f(theta, phi)."""
        theta = np.asarray(theta, dtype=float)
        if not self.coeffs:
            return np.zeros(np.broadcast(theta, phi).shape)
        mmax = max(abs(b) for _, b in self.coeffs)
        tab = legendre_table(self.a_max, mmax, np.cos(theta))
        out = np.zeros(np.broadcast(theta, phi).shape, dtype=complex)
        for (a, b), c in self.coeffs.items():
            p = tab[a, abs(b)] * ((-1) ** b if b < 0 else 1)
            out = out + c * p * np.exp(1j * b * np.asarray(phi))
        return out.real if self.axisymmetric else out

    def boundary(self, theta, phi=0.0):
        return self.R0 * (1.0 + self.deformation(theta, phi))

    def rows(self):
        """(a, b, C) rows in index order."""
        return [(a, b, self.coeffs[(a, b)]) for a, b in sorted(self.coeffs)]

    def to_dict(self):
        return {
            "R0": self.R0,
            "a_max": self.a_max,
            "axisymmetric": self.axisymmetric,
            "convention": self.convention,
            "coefficients": [
                {"a": a, "b": b, "re": c.real, "im": c.imag} for a, b, c in self.rows()
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        lines = ["a,C_a"]
        C = self.axial() if self.axisymmetric else None
        for a in range(1, self.a_max + 1):
            lines.append(f"{a},{C[a]:.15g}")
        return "\n".join(lines) + "\n"


def default_convention(shape: BoundaryShape) -> str:
    return "equal_volume" if isinstance(shape, Spheroid) else "average"


def expand(shape: BoundaryShape, a_max: int = 30, quad_order: int = 64,
           convention: str | None = None) -> HarmonicExpansion:
    """Average radius and axial coefficients C_a = int f Y_a^0 dOmega.

    ``convention`` selects the length scale:

    ``"average"``
        R0 is the solid-angle mean radius of the shape as given.
    ``"equal_volume"``
        the shape is first rescaled to unit equal-volume radius, and the
        deformation is measured against the equatorial radius of that
        rescaled shape.  Spheroid energies are usually quoted in units of
        the equal-volume radius, so this is the default for spheroids.

    Pear and coefficient-defined custom shapes return their stored
    coefficients and R0 verbatim.
    """
    if not 1 <= a_max <= MAX_AMAX:
        raise ValueError(f"a_max must lie in 1..{MAX_AMAX}")
    if isinstance(shape, Sphere):
        return HarmonicExpansion.from_axial(shape.radius, np.zeros(a_max + 1))
    if isinstance(shape, (Pear, CustomRadial)) and (
        isinstance(shape, Pear) or shape.coefficients
    ):
        coeffs = shape.coefficients() if isinstance(shape, Pear) else dict(shape.coefficients)
        C = np.zeros(a_max + 1)
        for a, c in coeffs.items():
            if a > a_max:
                if c != 0.0:
                    raise ValueError(f"a_max={a_max} drops the stored coefficient C_{a}")
                continue
            C[a] = c
        return HarmonicExpansion.from_axial(shape.R0, C)

    convention = convention or default_convention(shape)
    if convention not in ("average", "equal_volume"):
        raise ValueError(f"unknown convention {convention!r}")

    def fn(th, w):
        r = shape.radius_at(th)
        rbar = 0.5 * np.sum(w * r)
        y = legendre_table(a_max, 0, np.cos(th))[:, 0]
        # C_a = 2 pi int (r/R0 - 1) Y_a^0 sin dtheta; Y_0 orthogonality removes the -1
        C = 2.0 * math.pi * (y[1:] @ (w * r)) / rbar
        return np.concatenate([[rbar], C])

    vals = _converged(fn, shape, quad_order, "expansion")
    R0, C = vals[0], np.concatenate([[0.0], vals[1:]])
    if convention == "equal_volume":
        rho = equal_volume_radius(shape, quad_order)
        R0 = R0 / rho
        C = C * rho / float(shape.radius_at(np.array(0.5 * math.pi)))
    C[np.abs(C) < 1e-15] = 0.0
    if abs(C[a_max]) > 1e-6 or (a_max > 1 and abs(C[a_max - 1]) > 1e-6):
        warnings.warn(
            f"|C_a| near a_max={a_max} is {max(abs(C[a_max]), abs(C[a_max - 1])):.2e}; "
            "expansion may be truncated too early",
            TruncationWarning,
            stacklevel=2,
        )
    return HarmonicExpansion.from_axial(R0, C, convention=convention)


def reconstruction_residual(exp: HarmonicExpansion, shape: BoundaryShape, points: int = 721) -> float:
    """max |R0 (1 + f) - r| / R0 over a theta grid, in the expansion's length scale."""
    th = np.linspace(0.0, math.pi, points)
    r = shape.radius_at(th)
    if exp.convention == "equal_volume":
        # compare in the rescaled frame of the expansion
        rho = equal_volume_radius(shape)
        scale = float(shape.radius_at(np.array(0.5 * math.pi))) / rho
        f = (r / rho / exp.R0 - 1.0) / scale
        f_rec = exp.deformation(th)
        return float(np.max(np.abs(f - f_rec)))
    rec = exp.boundary(th)
    return float(np.max(np.abs(rec - r)) / exp.R0)
