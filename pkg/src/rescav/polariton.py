"""Cavity-dressed level models built from stabilized molecular states.

Two model families share one level table. The single-molecule model
dresses four vibrational levels with zero and one photon (an 8x8
complex-symmetric matrix) and asks how much decay width the polariton
formed at the barrier-top state retains. The ensemble model keeps only
the barrier-top / ground-like pair per molecule, couples N molecules
through the common mode, and asks how the photon-free decay rate scales
with N. Both matrices are non-Hermitian because the levels carry their
half-width as a negative imaginary part.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, DegenerateNormalizationError, InputError, SolverError

_N_LEVELS = 4
_DEFAULT_PAIR = (3, 0)
_DEFAULT_N_CAP = 10


@dataclass(frozen=True)
class LevelSet:
    """Four molecular levels and their transition moments.

    positions/widths are real arrays of length 4 (widths are full
    widths, not halves). dipoles is a 4x4 complex matrix; entries that
    were never specified are NaN so that a model requiring them can
    refuse loudly instead of silently coupling with zero.
    hbar_omega is the photon energy; by default the 3-0 gap.
    """

    positions: np.ndarray
    widths: np.ndarray
    dipoles: np.ndarray
    hbar_omega: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        wid = np.asarray(self.widths, dtype=float)
        dip = np.asarray(self.dipoles, dtype=complex)
        if pos.shape != (_N_LEVELS,) or wid.shape != (_N_LEVELS,):
            raise InputError(f"positions and widths must have length {_N_LEVELS}")
        if dip.shape != (_N_LEVELS, _N_LEVELS):
            raise InputError(f"dipoles must be {_N_LEVELS}x{_N_LEVELS}")
        if np.any(wid < 0.0):
            raise InputError("widths must be non-negative")
        if not np.all(np.diff(pos) > 0.0):
            raise InputError("positions must be strictly ascending")
        if not self.hbar_omega > 0.0:
            raise InputError("hbar_omega must be positive")
        pos.setflags(write=False)
        wid.setflags(write=False)
        dip.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "widths", wid)
        object.__setattr__(self, "dipoles", dip)

    def complex_energies(self) -> np.ndarray:
        return self.positions - 0.5j * self.widths

    def require_dipole(self, i: int, j: int) -> complex:
        d = self.dipoles[i, j]
        if np.isnan(d):
            raise ConfigError(f"transition moment ({i}, {j}) was not specified")
        return complex(d)


def levels_from_resonances(resonances, dipole_table, pair: tuple[int, int] = _DEFAULT_PAIR,
                           hbar_omega: float | None = None) -> LevelSet:
    """Assemble a LevelSet from classified resonances and their dipole table."""
    if len(resonances) != _N_LEVELS:
        raise InputError(f"need exactly {_N_LEVELS} resonances, got {len(resonances)}")
    pos = np.array([res.position for res in resonances])
    wid = np.array([res.width for res in resonances])
    dip = np.array(dipole_table.values, dtype=complex)
    if dip.shape != (_N_LEVELS, _N_LEVELS):
        raise InputError("dipole table shape does not match the level count")
    np.fill_diagonal(dip, 0.0)
    if hbar_omega is None:
        hbar_omega = float(pos[pair[0]] - pos[pair[1]])
    return LevelSet(pos, wid, dip, hbar_omega)


def read_levels_json(path) -> LevelSet:
    """Load a level table from JSON.

    Schema: {"e_r": [4 floats], "gamma": [4 floats],
             "dipoles": [[i, j, re, im], ...], "hbar_omega": float?}.
    Dipole records are symmetrized; pairs not listed stay unspecified.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read level table {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"level table {path} is not valid JSON: {exc}") from exc
    try:
        pos = np.asarray(raw["e_r"], dtype=float)
        wid = np.asarray(raw["gamma"], dtype=float)
        records = raw["dipoles"]
    except KeyError as exc:
        raise InputError(f"level table {path} is missing key {exc}") from exc
    dip = np.full((_N_LEVELS, _N_LEVELS), np.nan, dtype=complex)
    np.fill_diagonal(dip, 0.0)
    for rec in records:
        try:
            i, j, re, im = rec
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad dipole record {rec!r} in {path}") from exc
        i, j = int(i), int(j)
        if not (0 <= i < _N_LEVELS and 0 <= j < _N_LEVELS) or i == j:
            raise InputError(f"dipole record {rec!r} addresses an invalid pair")
        dip[i, j] = dip[j, i] = complex(float(re), float(im))
    if pos.shape != (_N_LEVELS,):
        raise InputError(f"level table {path} must list {_N_LEVELS} positions")
    hbar_omega = raw.get("hbar_omega")
    if hbar_omega is None:
        hbar_omega = float(pos[_DEFAULT_PAIR[0]] - pos[_DEFAULT_PAIR[1]])
    return LevelSet(pos, wid, dip, float(hbar_omega))


def build_single_h(levels: LevelSet, epsilon: float) -> np.ndarray:
    """8x8 one-molecule, photon-dressed level matrix.

    Basis order: the four bare levels, then the same four shifted down
    by one photon quantum, so the last slot is the barrier-top level in
    resonance with the ground-like one. Off-diagonal blocks couple
    through epsilon times the transition moments, with zero diagonal
    since permanent moments vanish by symmetry. The matrix is complex
    symmetric, not Hermitian.
    """
    if epsilon < 0.0:
        raise InputError("epsilon must be non-negative")
    e = levels.complex_energies()
    cross = np.empty((_N_LEVELS, _N_LEVELS), dtype=complex)
    for i in range(_N_LEVELS):
        for j in range(_N_LEVELS):
            cross[i, j] = 0.0 if i == j else epsilon * levels.require_dipole(i, j)
    h = np.zeros((2 * _N_LEVELS, 2 * _N_LEVELS), dtype=complex)
    h[:_N_LEVELS, :_N_LEVELS] = np.diag(e)
    h[_N_LEVELS:, _N_LEVELS:] = np.diag(e - levels.hbar_omega)
    h[:_N_LEVELS, _N_LEVELS:] = cross
    h[_N_LEVELS:, :_N_LEVELS] = cross
    return h


def _solve_modes(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        vals, vecs = scipy.linalg.eig(h)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dressed-state eigensolve failed: {exc}") from exc
    norms = np.linalg.norm(vecs, axis=0)
    if np.any(norms == 0.0):
        raise SolverError("eigensolver returned a zero vector")
    return vals, vecs / norms


def gamma_polariton(h: np.ndarray, gammas: np.ndarray | None = None,
                    channel: int = 2 * _N_LEVELS - 1) -> float:
    """Width of the polariton formed at one basis channel.

    Each dressed state alpha contributes its own width weighted by its
    overlap with the channel (the zero-photon barrier-top slot by
    default): Gamma = sum_alpha Gamma_alpha |C_channel,alpha|^2 with
    columns normalized to sum |C|^2 = 1. By default Gamma_alpha is read
    off the dressed eigenvalue itself, -2 Im E_alpha; pass `gammas`
    (one per basis state) to weight with fixed input widths assigned by
    each mode's dominant component instead, a diagnostic variant.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InputError("h must be a square matrix")
    if not 0 <= channel < h.shape[0]:
        raise InputError(f"channel {channel} out of range for size {h.shape[0]}")
    vals, vecs = _solve_modes(h)
    weights = np.abs(vecs[channel, :]) ** 2
    if gammas is None:
        mode_widths = -2.0 * vals.imag
    else:
        gammas = np.asarray(gammas, dtype=float)
        if gammas.shape != (h.shape[0],):
            raise InputError("gammas must supply one width per basis state")
        dominant = np.argmax(np.abs(vecs), axis=0)
        mode_widths = gammas[dominant]
    return float(np.sum(mode_widths * weights))


def enumerate_basis(n_mol: int, n_cap: int = _DEFAULT_N_CAP) -> list[int]:
    """All molecular excitation patterns for n_mol two-level molecules.

    Each basis state is a bitmask: bit m set means molecule m sits in
    the lower (ground-like) level and the photon has been emitted into
    the shared mode an odd number of times; bit m clear means it holds
    the barrier-top excitation. The all-clear mask, index 0, is the
    photon-free fully excited reference state.
    """
    if not isinstance(n_mol, (int, np.integer)):
        raise InputError("n_mol must be an integer")
    if not 1 <= n_mol <= n_cap:
        raise InputError(f"n_mol must be between 1 and {n_cap}")
    return list(range(2 ** n_mol))


def build_ensemble_h(levels: LevelSet, n_mol: int, epsilon: float,
                     pair: tuple[int, int] = _DEFAULT_PAIR,
                     n_cap: int = _DEFAULT_N_CAP) -> np.ndarray:
    """2^N x 2^N matrix of N two-level molecules sharing one cavity mode.

    Each molecule is restricted to the (upper, lower) pair of the level
    table. A set bit contributes the lower level's complex energy; a
    clear bit contributes the upper level's, minus one photon quantum
    (the mode is tuned to the pair gap, so exchange is resonant). Basis
    states one bit-flip apart couple with epsilon times the pair moment.
    """
    if epsilon < 0.0:
        raise InputError("epsilon must be non-negative")
    upper, lower = int(pair[0]), int(pair[1])
    if not (0 <= upper < _N_LEVELS and 0 <= lower < _N_LEVELS) or upper == lower:
        raise InputError(f"invalid level pair {pair!r}")
    masks = enumerate_basis(n_mol, n_cap)
    e = levels.complex_energies()
    e_up = e[upper] - levels.hbar_omega
    e_lo = e[lower]
    coupling = epsilon * levels.require_dipole(upper, lower)

    dim = len(masks)
    h = np.zeros((dim, dim), dtype=complex)
    for m in masks:
        n_low = int(m).bit_count()
        h[m, m] = n_low * e_lo + (n_mol - n_low) * e_up
        for bit in range(n_mol):
            h[m, m ^ (1 << bit)] = coupling
    return h


def gamma_cav(h: np.ndarray, reference: int = 0) -> float:
    """Ensemble decay rate projected on the photon-free reference state.

    Gamma = -2 sum_alpha |<ref|alpha>|^2 Im E_alpha over normalized
    dressed modes.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InputError("h must be a square matrix")
    if not 0 <= reference < h.shape[0]:
        raise InputError(f"reference index {reference} out of range")
    vals, vecs = _solve_modes(h)
    weights = np.abs(vecs[reference, :]) ** 2
    return float(np.sum(-2.0 * vals.imag * weights))


def completeness_defect(h: np.ndarray) -> float:
    """Worst deviation of sum_alpha |C_k,alpha|^2 from one over channels k.

    With columns normalized individually this measures how far the
    dressed modes are from resolving the identity; it stays small away
    from exceptional points and is a cheap health check on the model.
    """
    _, vecs = _solve_modes(np.asarray(h, dtype=complex))
    channel_sums = np.sum(np.abs(vecs) ** 2, axis=1)
    return float(np.max(np.abs(channel_sums - 1.0)))


@dataclass(frozen=True)
class RateCurve:
    """Decay rate against coupling strength, plus the ratio to its zero."""

    epsilon_values: np.ndarray
    rates: np.ndarray
    ratios: np.ndarray
    n_mol: int | None = None

    def __post_init__(self):
        eps = np.asarray(self.epsilon_values, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        ratios = np.asarray(self.ratios, dtype=float)
        if eps.shape != rates.shape or eps.shape != ratios.shape:
            raise InputError("rate curve arrays must share one shape")
        for a in (eps, rates, ratios):
            a.setflags(write=False)
        object.__setattr__(self, "epsilon_values", eps)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "ratios", ratios)


def single_rate_curve(levels: LevelSet, epsilon_grid) -> RateCurve:
    """Polariton width over a coupling sweep, normalized at zero coupling."""
    eps = np.asarray(epsilon_grid, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise InputError("epsilon grid must be a non-empty 1-d array")
    if eps[0] != 0.0:
        raise InputError("epsilon grid must start at zero to define the ratio")
    rates = np.array([gamma_polariton(build_single_h(levels, e)) for e in eps])
    if rates[0] == 0.0:
        raise DegenerateNormalizationError("zero-coupling width vanishes; ratios undefined")
    return RateCurve(eps, rates, rates / rates[0])


def ratio_curve(levels: LevelSet, n_mol: int, epsilon_grid,
                pair: tuple[int, int] = _DEFAULT_PAIR,
                n_cap: int = _DEFAULT_N_CAP) -> RateCurve:
    """Ensemble rate over a coupling sweep, normalized at zero coupling."""
    eps = np.asarray(epsilon_grid, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise InputError("epsilon grid must be a non-empty 1-d array")
    if eps[0] != 0.0:
        raise InputError("epsilon grid must start at zero to define the ratio")
    rates = np.array([gamma_cav(build_ensemble_h(levels, n_mol, e, pair, n_cap))
                      for e in eps])
    if rates[0] == 0.0:
        raise DegenerateNormalizationError("zero-coupling rate vanishes; ratios undefined")
    return RateCurve(eps, rates, rates / rates[0], n_mol=n_mol)


def collective_coupling(epsilon_qed: float, n_mol: int) -> float:
    """Effective one-mode coupling of N identical emitters, epsilon * sqrt(N)."""
    if epsilon_qed < 0.0:
        raise InputError("epsilon_qed must be non-negative")
    if not isinstance(n_mol, (int, np.integer)) or n_mol < 1:
        raise InputError("n_mol must be a positive integer")
    return float(epsilon_qed * math.sqrt(n_mol))
