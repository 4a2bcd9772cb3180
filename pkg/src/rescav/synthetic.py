"""Smooth double-barrier test potentials.

These profiles exist so the eigensolver route and the transfer-matrix
route can be pointed at the same potential: two flat-top barriers with
tanh-rounded edges separated by a well, exactly zero far outside. The
rounding is deliberate. A discontinuous barrier edge caps the accuracy
of any fixed-order finite-difference operator (the error is dominated by
the kink, not the stencil), while a profile with a few continuous
derivatives restores the stencil's nominal convergence order; the
transfer-matrix side treats the same shape as a fine staircase, which
converges quadratically in the step width. Edge sharpness, grid span
and spacing are chosen per shipped case so both routes agree far inside
the comparison tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError
from .pes import PesCurve


@dataclass(frozen=True)
class DoubleBarrierSpec:
    """Geometry of a smoothed double barrier.

    The left barrier occupies roughly [a1, b1] (both negative), the
    right one [a2, b2] (both positive), with plateau heights h1 and h2.
    edge_sharpness is the tanh steepness of every edge; larger values
    approach square barriers.
    """

    a1: float
    b1: float
    h1: float
    a2: float
    b2: float
    h2: float
    edge_sharpness: float

    def __post_init__(self):
        if not (self.a1 < self.b1 < self.a2 < self.b2):
            raise InputError("barrier edges must satisfy a1 < b1 < a2 < b2")
        if not (self.h1 > 0.0 and self.h2 > 0.0):
            raise InputError("barrier heights must be positive")
        if not self.edge_sharpness > 0.0:
            raise InputError("edge_sharpness must be positive")

    def profile(self) -> Callable[[np.ndarray], np.ndarray]:
        """Callable V(r), vectorized."""
        s = self.edge_sharpness

        def edge(x):
            return 0.5 * (1.0 + np.tanh(s * x))

        def v(r):
            r = np.asarray(r, dtype=float)
            return (self.h1 * edge(r - self.a1) * edge(self.b1 - r)
                    + self.h2 * edge(r - self.a2) * edge(self.b2 - r))

        return v

    def support_radius(self, floor: float = 1e-11) -> float:
        """Radius beyond which both barrier tails stay below floor."""
        if not 0.0 < floor < 1.0:
            raise InputError("floor must be in (0, 1)")
        s = self.edge_sharpness
        # Outermost edge tail: h * e^{-2 s d} < floor at distance d.
        d_left = abs(self.a1) + math.log(max(self.h1, self.h2) / floor) / (2.0 * s)
        d_right = self.b2 + math.log(max(self.h1, self.h2) / floor) / (2.0 * s)
        return max(d_left, d_right)

    def well_span(self) -> tuple[float, float]:
        """Hull of the barrier support, [a1, b2]: the node-counting window."""
        return self.a1, self.b2


def sample_double_barrier(spec: DoubleBarrierSpec, half_span: float, n_points: int) -> PesCurve:
    """Uniform symmetric curve of the profile on [-half_span, +half_span].

    The span must comfortably exceed the barrier support so the ends are
    flat; no separate augmentation step is needed.
    """
    if n_points < 4:
        raise InputError("n_points must be >= 4")
    if half_span <= spec.b2:
        raise InputError("half_span must exceed the outer barrier edge")
    r = np.linspace(-half_span, half_span, n_points)
    return PesCurve(r, spec.profile()(r))
