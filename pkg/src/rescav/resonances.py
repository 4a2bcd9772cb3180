"""Resonance extraction from scaled-contour spectra.

The workflow: solve the spectrum on a ladder of rotation angles, follow
each physical state through the ladder by nearest-energy continuation,
locate the angle where its energy stalls (the stabilized value is the
resonance position and width), then classify states by counting nodes
of the wavefunction inside the interaction region. The lowest member is
the ground-like state; the three-node member is the barrier-top state
used to set the cavity resonance condition.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundaryWarning,
    ClassificationError,
    DegenerateNormalizationError,
    InputError,
    TrackingError,
)
from .pes import PesCurve
from .ses import (Eigenpair, KineticSpec, SesContour, assemble_hamiltonian,
                  eigensolve, eigenvalues, g_of_r, big_F_of_r)
from .units import BOHR_TO_UM, SPEED_OF_LIGHT_AU

_TRACKING_FACTOR = 400.0
_AMBIGUITY_RATIO = 10.0


@dataclass(frozen=True)
class ThetaTrajectory:
    """One state's complex energy followed over an ascending angle grid."""

    theta_values: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta_values, dtype=float)
        en = np.asarray(self.energies, dtype=complex)
        if th.ndim != 1 or en.shape != th.shape:
            raise InputError("theta grid and energies must be 1-d and the same length")
        if th.size >= 2 and not np.all(np.diff(th) > 0.0):
            raise InputError("theta grid must be strictly ascending")
        th.setflags(write=False)
        en.setflags(write=False)
        object.__setattr__(self, "theta_values", th)
        object.__setattr__(self, "energies", en)

    def __len__(self) -> int:
        return self.theta_values.size


@dataclass(frozen=True)
class Resonance:
    """A stabilized state: complex position, width, and its labels."""

    energy: complex
    theta_star: float
    nodes: int
    interior_fraction: float
    vector: np.ndarray = field(repr=False)
    is_ground_like: bool = False
    is_barrier_top: bool = False

    @property
    def position(self) -> float:
        return self.energy.real

    @property
    def width(self) -> float:
        return -2.0 * self.energy.imag


@dataclass(frozen=True)
class DipoleTable:
    """Symmetric transition-moment matrix between stabilized states.

    Entries are c-product matrix elements of the scaled coordinate,
    normalized by the c-norms of the pair; diagonal entries are kept
    but typical consumers zero them out (no permanent moments).
    """

    values: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.values, dtype=complex)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InputError("dipole table must be a square matrix")
        d.setflags(write=False)
        object.__setattr__(self, "values", d)

    @property
    def n_states(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CavitySpec:
    """Cavity tuned to a level gap: photon energy, wavelength, mirror gap."""

    pair: tuple[int, int]
    hbar_omega_au: float
    wavelength_um: float
    mirror_distance_um: float


def band_selector(re_min: float, re_max: float, im_min: float = -math.inf):
    """Mask factory keeping eigenvalues inside a rectangle of the plane."""
    if not re_min < re_max:
        raise InputError("re_min must be below re_max")

    def select(energies: np.ndarray) -> np.ndarray:
        e = np.asarray(energies)
        return (e.real > re_min) & (e.real < re_max) & (e.imag > im_min)

    return select


def run_theta_trajectory(curve: PesCurve, contour_base: SesContour, theta_grid,
                         kin: KineticSpec | None = None, *, select=None,
                         stencil_order: int = 5, seed_at: str = "first",
                         tracking_factor: float = _TRACKING_FACTOR) -> list[ThetaTrajectory]:
    """Follow selected eigenvalues across an ascending ladder of angles.

    States are seeded from the spectrum at one end of the ladder (all of
    them, unless `select` masks a subset) and continued step by step by
    nearest-energy matching. Resonances separate cleanly from the
    rotated continuum only once the rotation is strong, so seeding at
    the top of the ladder (``seed_at="last"``) is usually the robust
    choice; trajectories always come back in ascending-angle order
    regardless.

    Matching is guarded twice over. The ambiguity rule is relative and
    applies at every step: the runner-up candidate must sit at least ten
    times farther out than the claimed match, otherwise the continuation
    cannot be trusted at this grid resolution. The jump rule needs
    history: the claimed step may not exceed `tracking_factor` times the
    previous step rescaled by the ratio of angle increments (so
    non-uniform ladders do not shrink the allowance), plus a small floor
    proportional to the energy scale that absorbs eigensolver noise once
    a state has stalled. The default factor is deliberately loose
    because the step size of a narrow state grows exponentially as the
    ladder descends, while distinct spectral branches sit many orders of
    magnitude beyond any genuine step. Two states claiming the same
    candidate is always an error.
    """
    kin = kin or KineticSpec()
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if theta.ndim != 1 or theta.size == 0:
        raise InputError("theta grid must be a non-empty 1-d array")
    if theta.size >= 2 and not np.all(np.diff(theta) > 0.0):
        raise InputError("theta grid must be strictly ascending")
    if seed_at not in ("first", "last"):
        raise InputError(f"seed_at must be 'first' or 'last', got {seed_at!r}")

    spectra = []
    for th in theta:
        h = assemble_hamiltonian(curve, contour_base.with_theta(th), kin,
                                 stencil_order=stencil_order)
        spectra.append(eigenvalues(h))

    steps = range(1, theta.size) if seed_at == "first" \
        else range(theta.size - 2, -1, -1)
    seeds = spectra[0 if seed_at == "first" else -1]
    if select is not None:
        mask = np.asarray(select(seeds), dtype=bool)
        if mask.shape != seeds.shape:
            raise InputError("selector mask must match the spectrum length")
        seeds = seeds[mask]
    if seeds.size == 0:
        raise InputError("no states selected at the seed angle")

    n_states = seeds.size
    tracks = [[e] for e in seeds]
    last_step = np.full(n_states, np.nan)
    last_dth = math.nan

    prev_j = 0 if seed_at == "first" else theta.size - 1
    for j in steps:
        pool = spectra[j]
        dth = abs(theta[j] - theta[prev_j])
        dist = np.abs(pool[None, :] - np.array([t[-1] for t in tracks])[:, None])
        order = np.argsort(dist, axis=1)
        claimed: dict[int, int] = {}
        for i in range(n_states):
            nearest = order[i, 0]
            d0 = dist[i, nearest]
            d1 = dist[i, order[i, 1]] if pool.size > 1 else math.inf
            if d1 <= _AMBIGUITY_RATIO * d0:
                raise TrackingError(
                    f"ambiguous continuation for state {i} at "
                    f"theta={theta[j]:.6g}: runner-up at {d1:.3e} vs {d0:.3e}")
            if not math.isnan(last_step[i]):
                radius = (tracking_factor * last_step[i] * (dth / last_dth)
                          + 1e-8 * (abs(tracks[i][-1]) + 1.0))
                if d0 > radius:
                    raise TrackingError(
                        f"state {i} jumped by {d0:.3e} at theta={theta[j]:.6g}, "
                        f"beyond its matching radius {radius:.3e}")
            if nearest in claimed:
                raise TrackingError(
                    f"states {claimed[nearest]} and {i} collide at theta={theta[j]:.6g}")
            claimed[nearest] = i
            last_step[i] = d0
            tracks[i].append(pool[nearest])
        last_dth = dth
        prev_j = j

    if seed_at == "last":
        tracks = [t[::-1] for t in tracks]
    return [ThetaTrajectory(theta, np.array(t)) for t in tracks]


def detect_stationary(traj: ThetaTrajectory) -> tuple[float, complex]:
    """Angle and energy where the trajectory moves slowest.

    The speed at each interior grid point is the centered secant
    |dE/dtheta|; the stationary point is its minimizer. Exact speed
    ties (a constant trajectory, typically) resolve to the point
    nearest the middle of the grid. A minimizer at either interior end
    triggers a boundary warning, but only when the speed is still
    falling decisively into that edge (below half the inward
    neighbour); a trajectory that has already converged to solver noise
    is flat there, its minimizer is arbitrary, and the true stall is
    not evidenced to lie outside the grid.
    """
    if len(traj) < 3:
        raise InputError("stationary detection needs at least three grid points")
    th = traj.theta_values
    en = traj.energies
    speed = np.abs(en[2:] - en[:-2]) / (th[2:] - th[:-2])
    v_min = speed.min()
    ties = np.flatnonzero(speed == v_min) + 1
    mid = 0.5 * (len(traj) - 1)
    j = int(ties[np.argmin(np.abs(ties - mid))])
    if speed.size >= 2 and (j == 1 or j == len(traj) - 2):
        inward = speed[1] if j == 1 else speed[-2]
        if speed[j - 1] < 0.5 * inward:
            warnings.warn(
                f"stationary point at theta={th[j]:.6g} sits at the edge of "
                "the angle grid; widen the grid to bracket it", BoundaryWarning)
    return float(th[j]), complex(en[j])


def _canonical_phase(psi: np.ndarray) -> np.ndarray:
    """Rotate a complex vector so its largest component is real positive.

    Eigenvectors carry an arbitrary global phase; node counting on the
    real part is only meaningful after fixing it.
    """
    k = int(np.argmax(np.abs(psi)))
    a = abs(psi[k])
    if a == 0.0:
        raise InputError("cannot fix the phase of a zero vector")
    return psi * (abs(psi[k]) / psi[k])


def _as_index_range(interior, n: int) -> tuple[int, int]:
    if isinstance(interior, slice):
        lo, hi, step = interior.indices(n)
        if step != 1:
            raise InputError("interior slice must have unit step")
        return lo, hi
    try:
        lo, hi = interior
    except (TypeError, ValueError) as exc:
        raise InputError("interior must be a slice or an (lo, hi) index pair") from exc
    lo, hi = int(lo), int(hi)
    if not 0 <= lo < hi <= n:
        raise InputError(f"interior range [{lo}, {hi}) is invalid for length {n}")
    return lo, hi


def count_nodes(psi: np.ndarray, interior, amplitude_floor: float = 0.02) -> int:
    """Strict sign changes of Re(psi) across the interior index range.

    Samples whose |Re| falls below amplitude_floor times the interior
    maximum are ignored, so absorbing-tail ripple and near-zero
    crossings of the imaginary part do not inflate the count. The
    vector's global phase is canonicalized first.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise InputError("psi must be a 1-d vector")
    if not np.any(psi):
        raise InputError("psi is identically zero")
    if not 0.0 <= amplitude_floor < 1.0:
        raise InputError("amplitude_floor must be in [0, 1)")
    lo, hi = _as_index_range(interior, psi.size)
    re = np.real(_canonical_phase(psi))[lo:hi]
    peak = np.max(np.abs(re))
    if peak == 0.0:
        raise InputError("Re(psi) vanishes on the interior range")
    kept = re[np.abs(re) > amplitude_floor * peak]
    if kept.size < 2:
        return 0
    return int(np.count_nonzero(np.diff(np.sign(kept))))


def interior_fraction(psi: np.ndarray, curve: PesCurve, contour: SesContour) -> float:
    """Probability weight inside the unscaled window between the switches."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != curve.r.shape:
        raise InputError("psi must live on the curve grid")
    total = float(np.sum(np.abs(psi) ** 2))
    if total == 0.0:
        raise InputError("psi is identically zero")
    inside = g_of_r(curve.r, contour) < 0.5
    return float(np.sum(np.abs(psi[inside]) ** 2) / total)


def default_node_region(curve: PesCurve) -> tuple[int, int]:
    """Index hull of the barrier structure at half prominence.

    The window runs over samples whose potential exceeds the higher end
    asymptote by half the total prominence; it brackets both barriers
    and the well between them while excluding the absorbing tails,
    where scaled states oscillate without carrying node information.
    """
    v = curve.v
    baseline = max(v[0], v[-1])
    prominence = float(v.max() - baseline)
    if prominence <= 0.0:
        raise InputError("curve has no barrier structure; provide an explicit node region")
    idx = np.flatnonzero(v >= baseline + 0.5 * prominence)
    return int(idx[0]), int(idx[-1]) + 1


def region_to_indices(curve: PesCurve, r_lo: float, r_hi: float) -> tuple[int, int]:
    """Convert a coordinate window into a half-open index range."""
    if not r_lo < r_hi:
        raise InputError("node region bounds must satisfy r_lo < r_hi")
    lo = int(np.searchsorted(curve.r, r_lo, side="left"))
    hi = int(np.searchsorted(curve.r, r_hi, side="right"))
    if hi - lo < 2:
        raise InputError("node region covers fewer than two grid points")
    return lo, hi


def measure_resonances(eigenpairs: list[Eigenpair], trajectories: list[ThetaTrajectory],
                       *, curve: PesCurve, contour: SesContour, theta_ref: float,
                       node_region: tuple[int, int] | None = None,
                       amplitude_floor: float = 0.02,
                       interior_min: float = 0.9,
                       velocity_threshold: float | None = None) -> list[Resonance]:
    """Reduce trajectories to stabilized states with node counts, unlabeled.

    Each trajectory is reduced to its stationary point; its eigenvector
    is the nearest eigenvalue match among `eigenpairs`, which must have
    been solved at `theta_ref` on the same contour family. States whose
    weight between the switches falls below `interior_min`, or whose
    stall speed exceeds `velocity_threshold` (when given), are treated
    as rotated continuum and dropped. Survivors come back sorted by
    position with landmark flags unset.
    """
    if not trajectories:
        raise InputError("no trajectories to classify")
    if not eigenpairs:
        raise InputError("no eigenpairs to classify against")

    ref_contour = contour.with_theta(theta_ref)
    if node_region is None:
        node_region = default_node_region(curve)
    lo, hi = _as_index_range(node_region, curve.r.size)

    pool = np.array([p.energy for p in eigenpairs])
    found: list[Resonance] = []
    for traj in trajectories:
        if len(traj) >= 3:
            theta_star, e_star = detect_stationary(traj)
            th = traj.theta_values
            en = traj.energies
            speed = np.abs(en[2:] - en[:-2]) / (th[2:] - th[:-2])
            v_star = float(speed.min())
        else:
            theta_star, e_star = float(traj.theta_values[-1]), complex(traj.energies[-1])
            v_star = math.inf
            warnings.warn("angle grid too short to bracket a stationary point; "
                          "using its last angle", BoundaryWarning)
        if velocity_threshold is not None and v_star > velocity_threshold:
            continue
        # The trajectory's energy at the reference angle anchors the vector match.
        k_ref = int(np.argmin(np.abs(traj.theta_values - theta_ref)))
        e_ref = traj.energies[k_ref]
        m = int(np.argmin(np.abs(pool - e_ref)))
        pair = eigenpairs[m]
        frac = interior_fraction(pair.vector, curve, ref_contour)
        if frac < interior_min:
            continue
        nodes = count_nodes(pair.vector, (lo, hi), amplitude_floor)
        found.append(Resonance(energy=e_star, theta_star=theta_star, nodes=nodes,
                               interior_fraction=frac, vector=pair.vector))

    found.sort(key=lambda res: res.position)
    return found


def label_landmarks(found: list[Resonance]) -> list[Resonance]:
    """Flag the unique zero-node and three-node states.

    Raises a classification error, listing every node count seen, when
    either landmark is missing or duplicated.
    """
    node_counts = [res.nodes for res in found]
    if node_counts.count(0) != 1 or node_counts.count(3) != 1:
        raise ClassificationError(
            "classification needs exactly one zero-node and one three-node state; "
            f"found node counts {node_counts}", found_nodes=tuple(node_counts))
    labeled = []
    for res in found:
        labeled.append(Resonance(energy=res.energy, theta_star=res.theta_star,
                                 nodes=res.nodes, interior_fraction=res.interior_fraction,
                                 vector=res.vector,
                                 is_ground_like=res.nodes == 0,
                                 is_barrier_top=res.nodes == 3))
    return labeled


def classify_resonances(eigenpairs: list[Eigenpair], trajectories: list[ThetaTrajectory],
                        *, curve: PesCurve, contour: SesContour, theta_ref: float,
                        node_region: tuple[int, int] | None = None,
                        amplitude_floor: float = 0.02,
                        interior_min: float = 0.9,
                        velocity_threshold: float | None = None) -> list[Resonance]:
    """Measure stabilized states and flag the ground-like / barrier-top pair."""
    found = measure_resonances(eigenpairs, trajectories, curve=curve, contour=contour,
                               theta_ref=theta_ref, node_region=node_region,
                               amplitude_floor=amplitude_floor,
                               interior_min=interior_min,
                               velocity_threshold=velocity_threshold)
    return label_landmarks(found)


def c_product(a: np.ndarray, b: np.ndarray, weight: np.ndarray | None = None,
              spacing: float = 1.0) -> complex:
    """Discrete bilinear product sum(a * w * b) * spacing, no conjugation.

    Scaled-contour eigenstates pair with themselves, not their
    conjugates; the missing conjugation is the point, not an omission.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("c_product operands must be 1-d and the same length")
    if weight is None:
        acc = np.sum(a * b)
    else:
        w = np.asarray(weight, dtype=complex)
        if w.shape != a.shape:
            raise InputError("weight must match the operand length")
        acc = np.sum(a * w * b)
    return complex(acc * spacing)


def dipole_matrix(resonances: list[Resonance], curve: PesCurve, contour: SesContour,
                  theta_star: float | None = None,
                  vectors: list[np.ndarray] | None = None) -> DipoleTable:
    """Coordinate matrix elements between stabilized states.

    All states are paired through the scaled coordinate evaluated on one
    shared contour, fixed at the barrier-top state's stationary angle
    unless overridden. Entries are normalized by the c-norms of the
    pair, so the grid spacing cancels. Pass `vectors` to supply
    eigenvectors re-solved at that angle; otherwise the stored vectors
    are used as-is.
    """
    if not resonances:
        raise InputError("no resonances given")
    if theta_star is None:
        tops = [res for res in resonances if res.is_barrier_top]
        if not tops:
            raise InputError("no barrier-top state present; pass theta_star explicitly")
        theta_star = tops[0].theta_star
    psi = [np.asarray(v, dtype=complex) for v in vectors] if vectors is not None \
        else [res.vector for res in resonances]
    if len(psi) != len(resonances):
        raise InputError("vectors must match the resonance list")
    for v in psi:
        if v.shape != curve.r.shape:
            raise InputError("state vectors must live on the curve grid")

    f_big = big_F_of_r(curve.r, contour.with_theta(theta_star))
    n = len(psi)
    norms = np.empty(n, dtype=complex)
    for i in range(n):
        norms[i] = c_product(psi[i], psi[i])
        if abs(norms[i]) < 1e-12:
            raise DegenerateNormalizationError(
                f"state {i} has near-zero c-norm {norms[i]:.3e}; "
                "its dipole entries are undefined")
    d = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            num = c_product(psi[i], psi[j], weight=f_big)
            d[i, j] = d[j, i] = num / cmath.sqrt(norms[i] * norms[j])
    return DipoleTable(d)


def gap_to_wavelength_um(delta_e: float) -> tuple[float, float]:
    """Photon wavelength and half-wavelength mirror gap for an energy gap.

    The gap, in hartree, fixes the photon angular frequency directly;
    lambda = 2 pi c / omega in bohr is converted to micrometers, and the
    fundamental mirror distance is exactly half of it.
    """
    if not delta_e > 0.0:
        raise InputError("level gap must be positive")
    wavelength = 2.0 * math.pi * SPEED_OF_LIGHT_AU / delta_e * BOHR_TO_UM
    return wavelength, 0.5 * wavelength


def cavity_from_gap(resonances: list[Resonance], pair: tuple[int, int] = (3, 0)) -> CavitySpec:
    """Cavity tuned to the gap between two members of a sorted resonance list."""
    upper, lower = int(pair[0]), int(pair[1])
    n = len(resonances)
    if not (0 <= lower < n and 0 <= upper < n) or upper == lower:
        raise InputError(f"pair {pair!r} is out of range for {n} resonances")
    gap = resonances[upper].position - resonances[lower].position
    if gap <= 0.0:
        raise InputError(f"pair {pair!r} has a non-positive gap {gap:.3e}")
    wavelength, mirror = gap_to_wavelength_um(gap)
    return CavitySpec(pair=(upper, lower), hbar_omega_au=gap,
                      wavelength_um=wavelength, mirror_distance_um=mirror)


def stationary_poles(curve: PesCurve, contour_base: SesContour, theta_grid,
                     kin: KineticSpec | None = None, *, select=None,
                     stencil_order: int = 5,
                     seed_at: str = "first") -> list[tuple[float, complex]]:
    """Stationary angle and energy for every tracked state, sorted by position.

    Thin composition of trajectory tracking and stall detection, for
    callers that need pole values without vectors or classification.
    """
    trajectories = run_theta_trajectory(curve, contour_base, theta_grid, kin,
                                        select=select, stencil_order=stencil_order,
                                        seed_at=seed_at)
    poles = [detect_stationary(traj) for traj in trajectories]
    poles.sort(key=lambda p: p[1].real)
    return poles


def find_resonances(curve: PesCurve, contour_base: SesContour, theta_grid,
                    kin: KineticSpec | None = None, *, select=None,
                    stencil_order: int = 5, seed_at: str = "first",
                    node_region: tuple[int, int] | None = None,
                    amplitude_floor: float = 0.02,
                    interior_min: float = 0.9,
                    velocity_threshold: float | None = None,
                    ) -> tuple[list[Resonance], list[ThetaTrajectory], float]:
    """Track, stabilize and classify in one pass.

    Vectors are solved once, at the largest stationary angle among the
    tracked states, so every retained state is fully rotated there.
    Returns the labeled resonances, the raw trajectories, and that
    reference angle.
    """
    kin = kin or KineticSpec()
    trajectories = run_theta_trajectory(curve, contour_base, theta_grid, kin,
                                        select=select, stencil_order=stencil_order,
                                        seed_at=seed_at)
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if theta.size >= 3:
        stalls = [detect_stationary(traj)[0] for traj in trajectories]
        theta_ref = max(stalls)
    else:
        theta_ref = float(theta[-1])
    h = assemble_hamiltonian(curve, contour_base.with_theta(theta_ref), kin,
                             stencil_order=stencil_order)
    pairs = eigensolve(h)
    resonances = classify_resonances(pairs, trajectories, curve=curve,
                                     contour=contour_base, theta_ref=theta_ref,
                                     node_region=node_region,
                                     amplitude_floor=amplitude_floor,
                                     interior_min=interior_min,
                                     velocity_threshold=velocity_threshold)
    return resonances, trajectories, theta_ref
