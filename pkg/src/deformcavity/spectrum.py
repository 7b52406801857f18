"""Sorted level tables, degeneracy grouping and comparison with reference data."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .perturb.energy import RESONANCE_THRESHOLD, mode_energy, mode_zero
from .perturb.types import BC, EnergyResult, ModeIndex, NearResonance
from .shapes import (
    BoundaryShape,
    HarmonicExpansion,
    Pear,
    RoundedCylinder,
    Spheroid,
    StadiumOfRevolution,
    Superegg,
    expand,
)

GROUP_TOLERANCE = 1e-9
CANDIDATE_FACTOR = 2.0
COLUMNS = ("rank", "n", "l", "m", "E0", "E1", "E2", "total", "group", "flags")
DATA_ENV = "DEFORMCAVITY_DATA"


class WindowTooSmallError(ValueError):
    """The (n_max, l_max) window may hide levels that belong in the table."""


@dataclass(frozen=True)
class SpectrumRequest:
    shape: BoundaryShape
    bc: BC = BC.DIRICHLET
    level_count: int = 17
    n_max: int = 6
    l_max: int = 8
    a_max: int = 30
    quad_order: int = 64
    threshold: float = RESONANCE_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "bc", BC.parse(self.bc))
        for name in ("level_count", "n_max", "a_max", "quad_order"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.l_max < 0:
            raise ValueError("l_max must be non-negative")
        window = self.n_max * (self.l_max + 1) ** 2
        if self.level_count > window:
            raise ValueError(f"level_count {self.level_count} exceeds the {window} modes in the window")


@dataclass(frozen=True)
class LevelRow:
    rank: int
    n: int
    l: int
    m: int
    E0: float
    E1: float
    E2: float
    total: float
    group: int
    flags: tuple = ()
    ranking_total: float = 0.0

    @property
    def resonant(self) -> bool:
        return any(isinstance(f, NearResonance) for f in self.flags)

    @property
    def label(self) -> tuple:
        return (self.n, self.l, abs(self.m))

    def flag_text(self) -> str:
        return ";".join(str(f) for f in self.flags)


@dataclass
class LevelTable:
    """Levels in ranking order.

    Rows without a NearResonance flag are sorted by total.  A flagged row is
    placed by its total with the near-resonant terms removed, since its
    printed total is not a usable estimate of where the level lies.
    """

    rows: list
    bc: BC
    expansion: HarmonicExpansion | None = None

    @property
    def totals(self) -> np.ndarray:
        return np.array([r.total for r in self.rows])

    def __len__(self):
        return len(self.rows)

    def records(self):
        for r in self.rows:
            yield (r.rank, r.n, r.l, r.m, r.E0, r.E1, r.E2, r.total, r.group, r.flag_text())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for rec in self.records():
            w.writerow([_fmt(v) for v in rec])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [dict(zip(COLUMNS, (_num(v) for v in rec))) for rec in self.records()]
        return json.dumps({"bc": self.bc.value, "levels": rows}, indent=2)

    def pretty(self) -> str:
        lines = [f"{'rank':>4} {'n':>2} {'l':>2} {'m':>3} {'E0':>9} {'E1':>9} {'E2':>9} {'total':>9}  flags"]
        for r in self.rows:
            lines.append(
                f"{r.rank:>4} {r.n:>2} {r.l:>2} {r.m:>3} {r.E0:9.3f} {r.E1:9.3f} {r.E2:9.3f} {r.total:9.3f}  {r.flag_text()}"
            )
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v + 0.0:.15g}"
    return str(v)


def _num(v):
    if isinstance(v, float):
        return float(f"{v + 0.0:.15g}")
    return v


def _window_modes(bc, n_max, l_max):
    return [ModeIndex(n, l, m, bc) for n in range(1, n_max + 1) for l in range(l_max + 1) for m in range(-l, l + 1)]


def _ceiling(bc, n_max, l_max, R0):
    """Smallest unperturbed energy just outside the window."""
    out = [mode_zero(ModeIndex(n_max + 1, l, 0, bc)) for l in range(l_max + 1)]
    out.append(mode_zero(ModeIndex(1, l_max + 1, 0, bc)))
    return min(out) ** 2 / R0**2


def _group(rows):
    out, gid = [], 0
    for i, r in enumerate(rows):
        if i and abs(r.total - out[-1].total) > GROUP_TOLERANCE * max(1.0, abs(r.total)):
            gid += 1
        out.append(LevelRow(i + 1, r.n, r.l, r.m, r.E0, r.E1, r.E2, r.total, gid, r.flags, r.ranking_total))
    return out


def level_rows(results) -> list:
    """Ranked, grouped rows from EnergyResult objects."""
    results = sorted(results, key=lambda e: (e.regularized_total, e.mode.n, e.mode.l, -e.mode.m))
    rows = [
        LevelRow(0, e.mode.n, e.mode.l, e.mode.m, e.E0, e.E1, e.E2, e.total, 0, e.flags, e.regularized_total)
        for e in results
    ]
    return _group(rows)


def compute_spectrum(req: SpectrumRequest, expansion: HarmonicExpansion | None = None) -> LevelTable:
    """Lowest ``level_count`` corrected levels of the shape.

    Only modes whose unperturbed energy is at most twice that of the
    level_count-th unperturbed level are ranked; beyond that a second-order
    estimate is not trusted to pull a level into the table.  The window
    must reach past that cut, otherwise WindowTooSmallError is raised.
    """
    exp = expansion if expansion is not None else expand(req.shape, req.a_max, req.quad_order)
    modes = _window_modes(req.bc, req.n_max, req.l_max)
    E0 = np.array([mode_zero(md) ** 2 / exp.R0**2 for md in modes])
    e_ref = float(np.sort(E0)[req.level_count - 1])
    cut = CANDIDATE_FACTOR * e_ref
    ceiling = _ceiling(req.bc, req.n_max, req.l_max, exp.R0)
    if ceiling <= cut:
        raise WindowTooSmallError(
            f"window n<={req.n_max}, l<={req.l_max} ends at E0={ceiling:.4g}, "
            f"below the candidate cut {cut:.4g}; enlarge n_max or l_max"
        )
    results = [mode_energy(md, exp, req.threshold) for md, e in zip(modes, E0) if e <= cut]
    rows = level_rows(results)[: req.level_count]
    return LevelTable(rows=rows, bc=req.bc, expansion=exp)


def degeneracy_signature(table: LevelTable) -> list:
    """Multiplicities of consecutive degenerate groups."""
    out = []
    last = None
    for r in table.rows:
        if r.group != last:
            out.append(0)
            last = r.group
        out[-1] += 1
    return out


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class ReferenceRow:
    value: float
    label: tuple | None = None
    printed: float | None = None  # analytic value printed next to the reference
    percent_error: float | None = None
    marker: str = ""


@dataclass
class ReferenceTable:
    name: str
    rows: list

    @property
    def values(self):
        return [r.value for r in self.rows]

    @property
    def labelled(self) -> bool:
        return bool(self.rows) and all(r.label is not None for r in self.rows)


@dataclass(frozen=True)
class ComparisonRow:
    computed: float
    reference: float
    percent_error: float
    flagged: bool
    label: tuple | None = None


@dataclass
class ComparisonReport:
    rows: list
    max_error: float = field(init=False)
    mean_error: float = field(init=False)

    def __post_init__(self):
        errs = [r.percent_error for r in self.rows if not r.flagged]
        self.max_error = max(errs) if errs else 0.0
        self.mean_error = float(np.mean(errs)) if errs else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("row", "n", "l", "abs_m", "computed", "reference", "percent_error", "flagged"))
        for i, r in enumerate(self.rows, 1):
            n, l, am = r.label if r.label else ("", "", "")
            w.writerow((i, n, l, am, _fmt(r.computed), _fmt(r.reference), _fmt(r.percent_error), int(r.flagged)))
        w.writerow(("max", "", "", "", "", "", _fmt(self.max_error), ""))
        w.writerow(("mean", "", "", "", "", "", _fmt(self.mean_error), ""))
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "rows": [
                {"computed": _num(r.computed), "reference": _num(r.reference),
                 "percent_error": _num(r.percent_error), "flagged": r.flagged,
                 "label": list(r.label) if r.label else None}
                for r in self.rows
            ],
            "max_error": _num(self.max_error),
            "mean_error": _num(self.mean_error),
        }, indent=2)

    def pretty(self) -> str:
        lines = [f"{'row':>3} {'computed':>9} {'reference':>9} {'%err':>7}"]
        for i, r in enumerate(self.rows, 1):
            err = "flagged" if r.flagged else f"{r.percent_error:7.3f}"
            lines.append(f"{i:>3} {r.computed:9.3f} {r.reference:9.3f} {err:>7}")
        lines.append(f"max {self.max_error:.3f}  mean {self.mean_error:.3f}")
        return "\n".join(lines) + "\n"


def percent_error(computed: float, reference: float) -> float:
    return abs(reference - computed) / abs(reference) * 100.0


def _align(table, reference):
    """Computed rows in reference order.

    Labelled references are matched on (n, l, |m|), so rows that a reference
    lists in a different order are still paired with the same mode.
    """
    if not reference.labelled:
        return list(table.rows)
    pool = {}
    for r in table.rows:
        pool.setdefault(r.label, []).append(r)
    out = []
    for ref in reference.rows:
        bucket = pool.get(tuple(ref.label))
        if not bucket:
            raise ValueError(f"no computed level for reference mode {ref.label}")
        out.append(bucket.pop(0))
    return out


def compare(table: LevelTable, reference, decimals: int | None = None) -> ComparisonReport:
    """Row-wise |ref - computed| / ref * 100; NearResonance rows are excluded from the summary.

    ``reference`` is a ReferenceTable or a plain list of values (positional).
    ``decimals`` rounds the computed totals first, as in tables printed to
    that many places.
    """
    if not isinstance(reference, ReferenceTable):
        reference = ReferenceTable("values", [ReferenceRow(float(v)) for v in reference])
    if len(reference.rows) != len(table.rows):
        raise ValueError(f"length mismatch: {len(table.rows)} levels vs {len(reference.rows)} reference rows")
    rows = []
    for row, ref in zip(_align(table, reference), reference.rows):
        value = row.total if decimals is None else round(row.total, decimals)
        rows.append(ComparisonRow(value, ref.value, percent_error(value, ref.value), row.resonant, row.label))
    return ComparisonReport(rows)


# -------------------------------------------------------------- shipped data

def data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    return Path(env) if env else Path(__file__).resolve().parent / "data"


# catalog shapes of the shipped tables
CATALOG = {
    "superegg_1.7": Superegg(1.7),
    "superegg_2.5": Superegg(2.5),
    "stadium": StadiumOfRevolution(1.0, 0.25),
    "oblate": Spheroid(1.0, 0.8),
    "prolate": Spheroid(1.0, 1.2),
    "rounded_cylinder": RoundedCylinder(2 * math.sqrt(3) / 10, 3 * math.sqrt(3) / 10),
    "pear_1": Pear(0.119, 0.095, 0.002),
    "pear_2": Pear(0.154, 0.097, 0.080),
}


def reference_path(name: str, bc) -> Path:
    return data_dir() / f"{name}_{BC.parse(bc).value}.csv"


def read_reference(path, column: str = "Ns") -> ReferenceTable:
    """Reference CSV with columns n,l,abs_m,Ps,Ns,percent_error,marker.

    Only the value column is required; ``column`` picks which one is the
    reference (``Ns`` by default, ``Ps`` for a self comparison).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ValueError(f"{path}: missing column {column!r}")
        rows = []
        for rec in reader:
            label = None
            if rec.get("n") and rec.get("l") and rec.get("abs_m"):
                label = (int(rec["n"]), int(rec["l"]), int(rec["abs_m"]))
            pe = rec.get("percent_error") or ""
            rows.append(ReferenceRow(
                value=float(rec[column]),
                label=label,
                printed=float(rec["Ps"]) if rec.get("Ps") else None,
                percent_error=float(pe) if pe.strip() not in ("", "-") else None,
                marker=(rec.get("marker") or "").strip(),
            ))
    return ReferenceTable(path.stem, rows)


def load_reference(name: str, bc, column: str = "Ns") -> ReferenceTable:
    return read_reference(reference_path(name, bc), column)
