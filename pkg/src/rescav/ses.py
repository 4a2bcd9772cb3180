"""Smooth exterior scaling: contour functions, CAP terms, Hamiltonian, solver.

The coordinate is rotated into the complex plane only outside the
interaction region, through the switching profile

    g(r) = 1 + 0.5*(tanh(lam*(r - r_right)) - tanh(lam*(r + r_left)))

which is ~0 between the switch points -r_left and +r_right and ~1
outside. The contour derivative f = dF/dr = 1 + (e^{i theta} - 1) g
generates effective kinetic-origin absorbing terms V0, V1 d/dr,
V2 d^2/dr^2; the scaled Hamiltonian is assembled on the unscaled grid
with finite-difference stencils, which is valid because the potential
is required to be flat wherever the contour is active (the potential
part of the absorbing terms then vanishes and V(F(r)) = V(r)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, InputError, SolverError
from .pes import PesCurve
from .units import M_O_AU

# Central finite-difference coefficients per stencil width: (d2, d1),
# each to be divided by h^2 / h respectively. The first-derivative
# stencil of a given width has a zero center coefficient.
STENCILS: dict[int, tuple[tuple[float, ...], tuple[float, ...]]] = {
    3: ((1.0, -2.0, 1.0),
        (-0.5, 0.0, 0.5)),
    5: ((-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0),
        (1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0)),
    7: ((1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0),
        (-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0)),
}


@dataclass(frozen=True)
class SesContour:
    """Parameters of the exterior-scaling path.

    theta is the asymptotic rotation angle (radians, [0, pi/4)), lam the
    switching sharpness (1/bohr), and r_left / r_right the positive
    distances of the two switch points from the origin; the left switch
    sits at r = -r_left.
    """

    theta: float
    lam: float
    r_left: float
    r_right: float

    def __post_init__(self):
        if not (0.0 <= self.theta < math.pi / 4.0):
            raise InputError(f"theta must lie in [0, pi/4), got {self.theta}")
        if not self.lam > 0.0:
            raise InputError(f"lam must be positive, got {self.lam}")

    def with_theta(self, theta: float) -> "SesContour":
        """Same switching profile at a different rotation angle."""
        return SesContour(theta, self.lam, self.r_left, self.r_right)


@dataclass(frozen=True)
class KineticSpec:
    """Coefficient of -d^2/dr^2 in the effective 1D Hamiltonian.

    The default 1/m_O is the printed reaction-path prefactor; writing it
    as hbar^2/2M fixes the mass convention used by the absorbing terms.
    """

    inverse_mass_prefactor: float = 1.0 / M_O_AU

    def __post_init__(self):
        if not self.inverse_mass_prefactor > 0.0:
            raise InputError("inverse_mass_prefactor must be positive")


@dataclass(frozen=True)
class Eigenpair:
    """One eigenvalue with its grid eigenvector, normalized sum(|C|^2)=1."""

    energy: complex
    vector: np.ndarray


def _lncosh(x: np.ndarray) -> np.ndarray:
    # ln cosh x = |x| + ln(1 + e^{-2|x|}) - ln 2, safe for |x| up to inf.
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def _sech2(x: np.ndarray) -> np.ndarray:
    # sech^2 x = 4 e^{-2|x|} / (1 + e^{-2|x|})^2, overflow-safe.
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def g_of_r(r, contour: SesContour):
    """Switching profile g(r), real-valued in [0, 1]."""
    r = np.asarray(r, dtype=float)
    g = 1.0 + 0.5 * (np.tanh(contour.lam * (r - contour.r_right))
                     - np.tanh(contour.lam * (r + contour.r_left)))
    return g if g.ndim else float(g)


def f_of_r(r, contour: SesContour):
    """Contour derivative f(r) = 1 + (e^{i theta} - 1) g(r)."""
    phase = np.exp(1j * contour.theta) - 1.0
    f = 1.0 + phase * g_of_r(np.asarray(r, dtype=float), contour)
    f = np.asarray(f, dtype=complex)
    return f if f.ndim else complex(f)


def big_F_of_r(r, contour: SesContour):
    """Integrated contour F(r) = r + (e^{i theta}-1)[r + ln-cosh term]/.

    Uses the closed form
    F = r + (e^{i theta} - 1) (r + (1/2 lam) ln[cosh(lam(r - r_right)) /
    cosh(lam(r + r_left))]), with the log evaluated in overflow-safe form.
    dF/dr = f(r) exactly.
    """
    r = np.asarray(r, dtype=float)
    lam = contour.lam
    phase = np.exp(1j * contour.theta) - 1.0
    log_ratio = _lncosh(lam * (r - contour.r_right)) - _lncosh(lam * (r + contour.r_left))
    F = r + phase * (r + log_ratio / (2.0 * lam))
    F = np.asarray(F, dtype=complex)
    return F if F.ndim else complex(F)


def cap_terms(r, contour: SesContour, kin: KineticSpec):
    """Kinetic-origin absorbing terms (V0, V1, V2) at the given points.

    With p = hbar^2/2M = kin.inverse_mass_prefactor:

        V0 = (p/2) f''/f^3 - (5p/4) (f')^2 / f^4
        V1 = 2p f'/f^3
        V2 = p (1 - f^{-2})

    All three vanish identically where g = 0 (f = 1) and the derivative
    terms vanish wherever f is constant.
    """
    r = np.asarray(r, dtype=float)
    p = kin.inverse_mass_prefactor
    lam = contour.lam
    phase = np.exp(1j * contour.theta) - 1.0
    right = lam * (r - contour.r_right)
    left = lam * (r + contour.r_left)

    g = 1.0 + 0.5 * (np.tanh(right) - np.tanh(left))
    gp = 0.5 * lam * (_sech2(right) - _sech2(left))
    gpp = lam * lam * (_sech2(left) * np.tanh(left) - _sech2(right) * np.tanh(right))

    f = 1.0 + phase * g
    fp = phase * gp
    fpp = phase * gpp

    v0 = (p / 2.0) * fpp / f**3 - (5.0 * p / 4.0) * fp**2 / f**4
    v1 = 2.0 * p * fp / f**3
    v2 = p * (1.0 - 1.0 / f**2)
    if v0.ndim:
        return v0, v1, v2
    return complex(v0), complex(v1), complex(v2)


def derivative_matrices(n: int, h: float, stencil_order: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Dense D2 and D1 finite-difference operators with Dirichlet edges.

    The bands simply truncate at the boundary, which is the standard
    zero-boundary box discretization; the absorbing tail keeps resonance
    states away from the walls.
    """
    try:
        d2c, d1c = STENCILS[stencil_order]
    except KeyError:
        raise ConfigError(f"stencil_order must be one of {sorted(STENCILS)}, got {stencil_order}")
    half = len(d2c) // 2
    d2 = np.zeros((n, n))
    d1 = np.zeros((n, n))
    for k in range(-half, half + 1):
        idx = np.arange(max(0, -k), min(n, n - k))
        d2[idx, idx + k] = d2c[k + half]
        d1[idx, idx + k] = d1c[k + half]
    return d2 / h**2, d1 / h

def assemble_hamiltonian(
    curve: PesCurve,
    contour: SesContour,
    kin: KineticSpec,
    stencil_order: int = 5,
    flat_atol: float = 1e-8,
) -> np.ndarray:
    """Dense complex matrix of the exterior-scaled Hamiltonian.

    H = (-p + V2(r)) D2 + V1(r) D1 + diag(V(r) + V0(r)).

    The curve must be uniform, and the potential must be flat (within
    flat_atol of the respective end value) everywhere at and beyond the
    switch points, since the potential is deliberately left unscaled.

    Raises
    ------
    ConfigError
        If the switch points fall outside the grid or the potential is
        not flat in the scaled region.
    """
    if not curve.uniform:
        raise InputError("assemble_hamiltonian requires a uniform curve")
    r = curve.r
    if not (r[0] < -contour.r_left and contour.r_right < r[-1]):
        raise ConfigError(
            f"switch points (-{contour.r_left}, {contour.r_right}) must lie inside "
            f"the grid span ({r[0]:.3f}, {r[-1]:.3f})"
        )
    left_zone = r <= -contour.r_left
    right_zone = r >= contour.r_right
    dev_left = np.max(np.abs(curve.v[left_zone] - curve.v[0])) if left_zone.any() else 0.0
    dev_right = np.max(np.abs(curve.v[right_zone] - curve.v[-1])) if right_zone.any() else 0.0
    if max(dev_left, dev_right) > flat_atol:
        raise ConfigError(
            "potential is not flat in the scaled region: max deviation "
            f"{max(dev_left, dev_right):.3e} exceeds {flat_atol:.1e}; move the "
            "switch points outward or augment the curve"
        )

    n = len(curve)
    p = kin.inverse_mass_prefactor
    d2, d1 = derivative_matrices(n, curve.spacing, stencil_order)
    v0, v1, v2 = cap_terms(r, contour, kin)
    h = (-p + v2)[:, None] * d2 + v1[:, None] * d1
    h[np.diag_indices(n)] += curve.v + v0
    return h


def eigenvalues(h: np.ndarray) -> np.ndarray:
    """All eigenvalues of a dense complex matrix, sorted by real part.

    Vector-free fast path for theta scans; see eigensolve for pairs.
    """
    try:
        w = scipy.linalg.eigvals(h, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dense eigensolver failed: {exc}") from exc
    return w[np.argsort(w.real, kind="stable")]


def eigensolve(h: np.ndarray, check_residuals: bool = False) -> list[Eigenpair]:
    """Full dense eigendecomposition, pairs sorted by Re(E).

    Every vector is renormalized to sum(|C|^2) = 1. With
    check_residuals=True the per-pair identity ||H v - E v|| <=
    1e-8 ||H||_F is asserted (costs one extra matrix product).
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InputError(f"matrix must be square, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise InputError("matrix entries must be finite")
    try:
        w, vr = scipy.linalg.eig(h, check_finite=False)
    except np.linalg.LinAlgError as exc:
        # scipy surfaces the LAPACK info code in the message.
        raise SolverError(f"dense eigensolver failed to converge: {exc}") from exc
    vr = vr / np.linalg.norm(vr, axis=0, keepdims=True)
    if check_residuals:
        resid = np.linalg.norm(h @ vr - vr * w[None, :], axis=0)
        bound = 1e-8 * np.linalg.norm(h)
        worst = int(np.argmax(resid))
        if resid[worst] > bound:
            raise SolverError(
                f"eigenpair {worst} residual {resid[worst]:.3e} exceeds {bound:.3e}"
            )
    order = np.argsort(w.real, kind="stable")
    return [Eigenpair(complex(w[i]), vr[:, i]) for i in order]
