"""Independent resonance-pole oracle for piecewise-constant potentials.

Plane-wave transfer matrices give the transmission amplitude of any
staircase potential in closed form; resonance poles are the complex
energies where 1/t(E) = 0. Because none of this shares code or method
with the grid/eigensolver route, agreement between the two is a real
cross-check rather than a tautology.

The interface product is evaluated with a pairwise (tree) reduction over
a stack of 2x2 matrices, so staircases fine enough to approximate smooth
profiles (tens of thousands of segments) cost milliseconds per energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BranchPointError, InputError, NoPoleFoundError
from .ses import KineticSpec


@dataclass(frozen=True)
class PiecewisePotential:
    """Piecewise-constant potential: n breakpoints bound n+1 segments.

    heights[i] is the energy on the segment left of breakpoints[i];
    heights[-1] extends beyond the last breakpoint. Both outer segments
    must be exactly zero (free asymptotics).
    """

    breakpoints: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).copy()
        v = np.asarray(self.heights, dtype=float).copy()
        if b.ndim != 1 or v.ndim != 1 or v.size != b.size + 1:
            raise InputError("need n breakpoints and n+1 segment heights")
        if b.size < 1:
            raise InputError("need at least one breakpoint")
        if np.any(np.diff(b) <= 0.0):
            raise InputError("breakpoints must be strictly increasing")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise InputError("outer segment heights must be exactly zero")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "heights", v)


@dataclass(frozen=True)
class PoleResult:
    """Converged complex pole with the residual |1/t| and iteration count."""

    energy: complex
    residual: float
    iterations: int


def _interface_matrices(pot: PiecewisePotential, e: complex, kin: KineticSpec) -> np.ndarray:
    """Stack of per-breakpoint 2x2 matrices mapping plane-wave amplitudes."""
    k_all = np.sqrt((complex(e) - pot.heights.astype(complex)) / kin.inverse_mass_prefactor)
    if np.any(np.abs(k_all) < 1e-12):
        raise BranchPointError(f"wavevector vanishes at E={e}: energy equals a segment height")
    k, kp = k_all[:-1], k_all[1:]
    rt = k / kp
    b = pot.breakpoints
    m = np.empty((b.size, 2, 2), dtype=complex)
    m[:, 0, 0] = 0.5 * (1.0 + rt) * np.exp(1j * (k - kp) * b)
    m[:, 0, 1] = 0.5 * (1.0 - rt) * np.exp(-1j * (k + kp) * b)
    m[:, 1, 0] = 0.5 * (1.0 - rt) * np.exp(1j * (k + kp) * b)
    m[:, 1, 1] = 0.5 * (1.0 + rt) * np.exp(-1j * (k - kp) * b)
    return m


def _chain_product(m: np.ndarray) -> np.ndarray:
    # Right-to-left product, combined pairwise: log2(n) einsum passes.
    while m.shape[0] > 1:
        if m.shape[0] % 2:
            tail = m[-1:]
            m = np.concatenate([np.einsum("nij,njk->nik", m[1:-1:2], m[0:-1:2]), tail])
        else:
            m = np.einsum("nij,njk->nik", m[1::2], m[0::2])
    return m[0]


def transfer_matrix(pot: PiecewisePotential, e: complex, kin: KineticSpec) -> np.ndarray:
    """Total 2x2 transfer matrix at (possibly complex) energy e.

    Wavevectors use the principal square root k = sqrt((e - V)/p), which
    continues the physical Im k >= 0 sheet smoothly across the positive
    real axis into the lower half energy plane where the outgoing-wave
    poles live. For equal outer media the transmission amplitude is
    t = 1/M[1,1] and det M = 1.
    """
    return _chain_product(_interface_matrices(pot, e, kin))


def inverse_transmission(pot: PiecewisePotential, e: complex, kin: KineticSpec) -> complex:
    """1/t(E): the quantity whose zeros are the resonance poles."""
    m = _interface_matrices(pot, e, kin)
    return complex(_chain_product(m)[1, 1])


def find_pole(
    pot: PiecewisePotential,
    guess: complex,
    kin: KineticSpec,
    residual_tol: float = 1e-10,
    max_iterations: int = 200,
) -> PoleResult:
    """Complex secant iteration on 1/t(E) = 0 starting near guess.

    Raises NoPoleFoundError when the iteration diverges, wanders into
    the upper half plane, or fails to reach the residual tolerance.
    Returned poles always satisfy Im E <= 0.
    """
    e0 = complex(guess)
    # Slightly displaced second seed; the downward nudge biases the
    # search onto the resonance sheet.
    e1 = e0 * (1.0 + 1e-5) - 1e-4j
    f0 = inverse_transmission(pot, e0, kin)
    f1 = inverse_transmission(pot, e1, kin)
    scale = max(abs(e0), 1.0)
    for iteration in range(1, max_iterations + 1):
        if f1 == f0:
            raise NoPoleFoundError(f"secant stalled after {iteration} iterations at E={e1}")
        e2 = e1 - f1 * (e1 - e0) / (f1 - f0)
        if not np.isfinite(e2.real) or not np.isfinite(e2.imag) or abs(e2) > 1e6 * scale:
            raise NoPoleFoundError(f"iteration diverged after {iteration} steps (E={e2})")
        e0, f0 = e1, f1
        e1 = e2
        f1 = inverse_transmission(pot, e1, kin)
        if abs(f1) < residual_tol:
            if e1.imag > 1e-12 * scale:
                raise NoPoleFoundError(
                    f"root at E={e1} lies in the upper half plane: not a decay pole"
                )
            return PoleResult(complex(e1.real, min(e1.imag, 0.0)), abs(f1), iteration)
    raise NoPoleFoundError(
        f"no pole within {max_iterations} iterations from guess {guess}; "
        f"last residual {abs(f1):.3e} at E={e1}"
    )


def scan_poles(
    pot: PiecewisePotential,
    e_min: float,
    e_max: float,
    kin: KineticSpec,
    n_scan: int = 2000,
) -> list[PoleResult]:
    """Locate all poles whose real parts fall in [e_min, e_max].

    A real-axis scan of |1/t| supplies the guesses: each interior local
    minimum seeds one secant search. Searches that fail to converge are
    dropped; duplicates (within 1e-8 relative) are merged.
    """
    if not (0.0 < e_min < e_max):
        raise InputError("need 0 < e_min < e_max for the scan window")
    grid = np.linspace(e_min, e_max, n_scan)
    vals = np.array([abs(inverse_transmission(pot, e, kin)) for e in grid])
    interior = (vals[1:-1] < vals[:-2]) & (vals[1:-1] < vals[2:])
    poles: list[PoleResult] = []
    for idx in np.flatnonzero(interior) + 1:
        try:
            res = find_pole(pot, complex(grid[idx]), kin)
        except NoPoleFoundError:
            continue
        if any(abs(res.energy - p.energy) <= 1e-8 * max(abs(p.energy), 1.0) for p in poles):
            continue
        poles.append(res)
    poles.sort(key=lambda p: p.energy.real)
    return poles


def staircase_potential(
    profile: Callable[[np.ndarray], np.ndarray],
    support_cut: float,
    delta: float,
) -> PiecewisePotential:
    """Midpoint-sampled staircase of a smooth compactly-supported profile.

    The profile must be negligible beyond +-support_cut (the outer
    segments are forced to exactly zero); delta is the segment width.
    Used to hand smooth synthetic barriers to the transfer-matrix route
    at a resolution where the staircase error is far below the
    comparison tolerance.
    """
    if not (support_cut > 0.0 and delta > 0.0):
        raise InputError("support_cut and delta must be positive")
    n_seg = int(np.ceil(2.0 * support_cut / delta))
    breakpoints = np.linspace(-support_cut, support_cut, n_seg + 1)
    mid = 0.5 * (breakpoints[:-1] + breakpoints[1:])
    heights = np.concatenate([[0.0], np.asarray(profile(mid), dtype=float), [0.0]])
    return PiecewisePotential(breakpoints, heights)
