"""Reaction-path potential preparation.

Builds the 1D potential curve that every downstream stage consumes:
mass-weighted coordinates for the two reaction steps, arc-length reaction
coordinate, stitching of the step curves into one profile, resampling to
a uniform grid, and constant-energy augmentation of the ends (required
by the exterior-scaling contour, which must switch on in a flat region).

All quantities are in hartree atomic units. Curves are immutable once
constructed; every operation returns a new object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InputError, StitchMismatchError
from .units import M_N_AU, M_O_AU

# Relative slack used when deciding whether a grid is uniform.
_UNIFORM_RTOL = 1e-12


@dataclass(frozen=True)
class MassSpec:
    """Atomic masses entering the mass-weighting factors.

    Parameters
    ----------
    m_n, m_o : float
        Nitrogen and oxygen masses in electron-mass atomic units.
        Defaults are the 14N / 16O isotope masses.
    """

    m_n: float = M_N_AU
    m_o: float = M_O_AU

    def __post_init__(self):
        if not (self.m_n > 0.0 and self.m_o > 0.0):
            raise InputError(f"masses must be positive, got m_n={self.m_n}, m_o={self.m_o}")


@dataclass(frozen=True)
class PathPoint:
    """One point of a mass-weighted reaction path: coordinates and energy."""

    x: float
    y: float
    energy: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y) and np.isfinite(self.energy)):
            raise InputError("PathPoint fields must be finite")


@dataclass(frozen=True)
class StitchSpec:
    """Parameters of the step-1/step-2 junction.

    no_ground_energy is the ground electronic energy of the isolated
    spectator NO at its equilibrium bond length; it is added to every
    step-1 energy so both segments share one energy zero.
    """

    no_ground_energy: float
    junction_tolerance: float = 1e-4

    def __post_init__(self):
        if not self.junction_tolerance > 0.0:
            raise InputError("junction_tolerance must be positive")


@dataclass(frozen=True)
class PesCurve:
    """Tabulated potential V(r) on a strictly increasing grid.

    The uniform flag and spacing are derived, not supplied: a grid is
    considered uniform when all successive differences agree with the
    mean spacing to 1e-12 relative.
    """

    r: np.ndarray
    v: np.ndarray
    uniform: bool = field(init=False)
    spacing: float | None = field(init=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).copy()
        v = np.asarray(self.v, dtype=float).copy()
        if r.ndim != 1 or v.ndim != 1 or r.size != v.size:
            raise InputError("r and v must be 1D arrays of equal length")
        if r.size < 2:
            raise InputError("a curve needs at least 2 points")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise InputError("curve values must be finite")
        dr = np.diff(r)
        if np.any(dr <= 0.0):
            raise InputError("r must be strictly increasing")
        mean = (r[-1] - r[0]) / (r.size - 1)
        uniform = bool(np.all(np.abs(dr - mean) <= _UNIFORM_RTOL * mean))
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "uniform", uniform)
        object.__setattr__(self, "spacing", mean if uniform else None)

    def __len__(self) -> int:
        return int(self.r.size)


def _check_masses(masses: MassSpec) -> None:
    # MassSpec validates on construction; guard against hand-rolled objects.
    if not (masses.m_n > 0.0 and masses.m_o > 0.0):
        raise InputError("masses must be positive")


def mass_weight_step1(raw_sep: float, raw_bond: float, masses: MassSpec) -> tuple[float, float]:
    """Mass-weighted coordinates for step 1 (O2 + NO -> NO3).

    x scales the O2--NO center-of-mass distance by sqrt(mu/m_O) with
    1/mu = 1/(2 m_O) + 1/(m_N + m_O); y scales the O2 bond length by
    sqrt(mu_O2/m_O), and mu_O2 = m_O/2 makes that factor exactly
    sqrt(1/2) for any mass.

    Returns
    -------
    (x, y) : tuple of float
    """
    _check_masses(masses)
    if raw_sep < 0.0 or raw_bond < 0.0:
        raise InputError("distances must be non-negative")
    mu_sep = 1.0 / (1.0 / (2.0 * masses.m_o) + 1.0 / (masses.m_n + masses.m_o))
    x = raw_sep * np.sqrt(mu_sep / masses.m_o)
    y = raw_bond * np.sqrt(0.5)
    return float(x), float(y)


def mass_weight_step2(raw_sep: float, raw_bond: float, masses: MassSpec) -> tuple[float, float]:
    """Mass-weighted coordinates for step 2 (NO3 + NO -> 2 NO2).

    x scales the NO3--NO center-of-mass distance, 1/mu = 1/(m_N + 3 m_O)
    + 1/(m_N + m_O); y scales the NO bond length by sqrt(mu_NO/m_O).
    """
    _check_masses(masses)
    if raw_sep < 0.0 or raw_bond < 0.0:
        raise InputError("distances must be non-negative")
    m_n, m_o = masses.m_n, masses.m_o
    mu_sep = 1.0 / (1.0 / (m_n + 3.0 * m_o) + 1.0 / (m_n + m_o))
    mu_no = m_n * m_o / (m_n + m_o)
    x = raw_sep * np.sqrt(mu_sep / m_o)
    y = raw_bond * np.sqrt(mu_no / m_o)
    return float(x), float(y)


def arc_length_coordinate(points: Sequence[PathPoint], sign: str) -> np.ndarray:
    """Arc-length reaction coordinate along a mass-weighted path.

    r[0] = 0 and r[i+1] = r[i] -/+ the Euclidean step in the (x, y)
    plane: minus for ``sign="decreasing"`` (step 1 runs toward negative
    r), plus for ``sign="increasing"`` (step 2).
    """
    if sign not in ("decreasing", "increasing"):
        raise InputError(f"sign must be 'decreasing' or 'increasing', got {sign!r}")
    pts = list(points)
    if not pts:
        raise InputError("need at least one path point")
    xy = np.array([(p.x, p.y) for p in pts], dtype=float)
    steps = np.hypot(*np.diff(xy, axis=0).T)
    if sign == "decreasing":
        steps = -steps
    r = np.concatenate([[0.0], np.cumsum(steps)])
    return r


def path_to_curve(points: Sequence[PathPoint], sign: str) -> PesCurve:
    """Convert a mass-weighted path to a PesCurve via the arc-length coordinate.

    The arc coordinate of step 1 decreases along the point sequence, so
    the output is reordered to ascending r. Coincident consecutive points
    (zero arc step) are rejected by the curve's monotonicity check.
    """
    r = arc_length_coordinate(points, sign)
    v = np.array([p.energy for p in points], dtype=float)
    order = np.argsort(r, kind="stable")
    return PesCurve(r[order], v[order])


def stitch_curves(step1: PesCurve, step2: PesCurve, spec: StitchSpec) -> PesCurve:
    """Join the two reaction-step curves into one profile.

    Step-1 energies get no_ground_energy added (the spectator NO is
    absent from them), step 1 is translated so its right end lands on
    step 2's left end, and the junction energies must agree within
    junction_tolerance. The duplicated junction point keeps the step-2
    sample. Finally the r axis is shifted so the curve starts at r = 0
    at the reactant end.

    Raises
    ------
    StitchMismatchError
        If the junction energy gap exceeds the tolerance.
    """
    v1 = step1.v + spec.no_ground_energy
    gap = abs(v1[-1] - step2.v[0])
    if gap > spec.junction_tolerance:
        raise StitchMismatchError(gap, spec.junction_tolerance)
    r1 = step1.r - step1.r[-1] + step2.r[0]
    r = np.concatenate([r1[:-1], step2.r])
    v = np.concatenate([v1[:-1], step2.v])
    return PesCurve(r - r[0], v)


def resample_uniform(curve: PesCurve, n_points: int, bc: str = "natural") -> PesCurve:
    """Cubic-spline resample onto a uniform grid spanning the same range.

    Parameters
    ----------
    curve : PesCurve
    n_points : int
        Output grid size, at least 4.
    bc : str
        Spline end condition, passed to scipy (default "natural";
        "not-a-knot" reproduces cubic polynomials exactly).

    Already-uniform input with matching n_points is returned as-is, so
    the operation is idempotent.
    """
    if n_points < 4:
        raise InputError(f"n_points must be >= 4, got {n_points}")
    if np.any(np.diff(curve.r) <= 0.0):
        raise InputError("curve grid must be strictly increasing")
    if curve.uniform and n_points == len(curve):
        return PesCurve(curve.r, curve.v)
    spline = CubicSpline(curve.r, curve.v, bc_type=bc)
    r_new = np.linspace(curve.r[0], curve.r[-1], n_points)
    return PesCurve(r_new, spline(r_new))


def augment_grid(curve: PesCurve, n_pad: int = 50) -> PesCurve:
    """Extend a uniform curve by n_pad points per side at constant energy.

    The pads copy the respective end-point energies exactly and keep the
    spacing; interior values are carried over bit-identically. This is
    what lets the scaling contour switch on where the potential is flat.
    """
    if not curve.uniform:
        raise InputError("augment_grid requires a uniform curve")
    if n_pad < 0:
        raise InputError("n_pad must be non-negative")
    if n_pad == 0:
        return PesCurve(curve.r, curve.v)
    h = curve.spacing
    left = curve.r[0] - h * np.arange(n_pad, 0, -1)
    right = curve.r[-1] + h * np.arange(1, n_pad + 1)
    r = np.concatenate([left, curve.r, right])
    v = np.concatenate([np.full(n_pad, curve.v[0]), curve.v, np.full(n_pad, curve.v[-1])])
    return PesCurve(r, v)


# ---------------------------------------------------------------------------
# Text-table input/output.
#
# Two shapes are accepted: raw path tables with columns
# (index, separation, bond, energy) feeding the mass-weighting stage, and
# ready curves with columns (r, V). Both carry exactly one header line and
# may be comma- or whitespace-delimited.
# ---------------------------------------------------------------------------


def _parse_rows(path: Path, n_cols: int) -> np.ndarray:
    rows = []
    header_skipped = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if not header_skipped:
                header_skipped = True
                continue
            fields = text.replace(",", " ").split()
            if len(fields) != n_cols:
                raise InputError(
                    f"{path}:{lineno}: expected {n_cols} columns, got {len(fields)}"
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def read_path_table(path: str | Path, step: int, masses: MassSpec) -> list[PathPoint]:
    """Read a raw path table and mass-weight it for the given step (1 or 2)."""
    if step not in (1, 2):
        raise InputError(f"step must be 1 or 2, got {step}")
    weight: Callable[[float, float, MassSpec], tuple[float, float]]
    weight = mass_weight_step1 if step == 1 else mass_weight_step2
    data = _parse_rows(Path(path), 4)
    points = []
    for _, sep, bond, energy in data:
        x, y = weight(sep, bond, masses)
        points.append(PathPoint(x, y, energy))
    return points


def read_curve_table(path: str | Path) -> PesCurve:
    """Read a two-column (r, V) table into a PesCurve."""
    data = _parse_rows(Path(path), 2)
    return PesCurve(data[:, 0], data[:, 1])


def write_curve_table(curve: PesCurve, path: str | Path, header_lines: Iterable[str] = ()) -> None:
    """Write a curve as a two-column table at full double precision.

    Extra header_lines are emitted as leading '#' comments before the
    column header, so provenance can ride along without breaking parsers
    that skip comments and one header line.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("r_au v_hartree\n")
        for r, v in zip(curve.r, curve.v):
            fh.write(f"{r:.16e} {v:.16e}\n")
