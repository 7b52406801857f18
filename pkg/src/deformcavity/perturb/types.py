"""Value types shared by the perturbation engine."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping


class BC(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value) -> "BC":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"d": "dirichlet", "dbc": "dirichlet", "n": "neumann", "nbc": "neumann"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r}") from None

    @property
    def short(self) -> str:
        return "DBC" if self is BC.DIRICHLET else "NBC"


@dataclass(frozen=True, order=True)
class ModeIndex:
    """Unperturbed mode j_l(k r) Y_l^m; n counts positive zeros (x = 0 excluded)."""

    n: int
    l: int
    m: int
    bc: BC = BC.DIRICHLET

    def __post_init__(self):
        object.__setattr__(self, "bc", BC.parse(self.bc))
        for name in ("n", "l", "m"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"{name} must be an integer")
            object.__setattr__(self, name, int(v))
        if self.n < 1:
            raise ValueError("radial index n must be >= 1")
        if self.l < 0 or abs(self.m) > self.l:
            raise ValueError(f"invalid (l, m) = ({self.l}, {self.m})")

    @property
    def degenerate(self) -> bool:
        return self.l != 0

    def label(self) -> str:
        return f"({self.n},{self.l},{self.m})"


@dataclass(frozen=True)
class NearResonance:
    """A second-order term whose Bessel denominator nearly vanishes."""

    p: int
    denom: float
    ratio: float

    def __str__(self):
        return f"NearResonance(p={self.p},denom={self.denom:.3e})"


@dataclass(frozen=True)
class TruncationFlag:
    """The deformation expansion tail is not negligible."""

    tail: float

    def __str__(self):
        return f"TruncationWarning(tail={self.tail:.1e})"


@dataclass(frozen=True)
class EnergyResult:
    """E0 and its first- and second-order corrections for one mode.

    ``regularized_total`` drops the p-terms flagged as near-resonant; it is
    used only to place such levels in a sorted table.
    """

    mode: ModeIndex
    E0: float
    ratio1: float
    ratio2: float
    flags: tuple = ()
    regularized_ratio2: float | None = None

    @property
    def E1(self) -> float:
        return self.E0 * self.ratio1

    @property
    def E2(self) -> float:
        return self.E0 * self.ratio2

    @property
    def total(self) -> float:
        return self.E0 * (1.0 + self.ratio1 + self.ratio2)

    @property
    def regularized_total(self) -> float:
        r2 = self.ratio2 if self.regularized_ratio2 is None else self.regularized_ratio2
        return self.E0 * (1.0 + self.ratio1 + r2)

    @property
    def resonant(self) -> bool:
        return any(isinstance(f, NearResonance) for f in self.flags)

    def flag_text(self) -> str:
        return ";".join(str(f) for f in self.flags)


@dataclass
class WavefunctionExpansion:
    """Closed-form psi0 + psi1 + psi2 in the mapped coordinates r <= R0.

    Each order is a mapping ``(s, nu, e, p, q) -> coefficient`` standing for
    rho^s j_nu(rho) f^e Y_p^q with rho = k r and k^2 = E0.
    """

    mode: ModeIndex
    expansion: object
    k: float
    N: float
    ratio1: float
    ratio2: float
    orders: list = field(default_factory=list)
    A_coeffs: Mapping = field(default_factory=dict)
    A_l_m: complex = 0.0
    B_coeffs: Mapping = field(default_factory=dict)
    B0: complex = 0.0
    complete: bool = True
    flags: tuple = ()

    @property
    def max_order(self) -> int:
        return len(self.orders) - 1

    @property
    def R0(self) -> float:
        return self.expansion.R0

    @property
    def E0(self) -> float:
        return self.k * self.k


class PartialResultWarning(UserWarning):
    """Second-order degenerate wavefunction lacks its homogeneous part."""


def bare_radial_normalization(N: float, l: int) -> float:
    """N' with psi0 = N' j_0 written without Y_0^0 (l = 0); N otherwise."""
    return N / math.sqrt(4.0 * math.pi) if l == 0 else N
