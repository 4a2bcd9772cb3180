"""Exception hierarchy for the rescav package.

Two broad families matter to callers: configuration/input problems
(wrong files, out-of-range parameters, malformed tables) and numerical
failures (non-convergence, lost root searches, unclassifiable spectra).
The CLI maps the first family to exit code 2 and the second to exit
code 3; library users can catch the two bases separately.
"""


class RescavError(Exception):
    """Base class for all package-specific errors."""


class InputError(RescavError):
    """Invalid input data or arguments (bad values, wrong shapes, bad files)."""


class ConfigError(RescavError):
    """Invalid or inconsistent run configuration."""


class NumericalError(RescavError):
    """A numerical procedure failed to produce a trustworthy result."""


class StitchMismatchError(InputError):
    """Energy gap at the junction of the two reaction steps exceeds tolerance.

    Carries the measured gap so callers can report it.
    """

    def __init__(self, gap: float, tolerance: float):
        self.gap = gap
        self.tolerance = tolerance
        super().__init__(
            f"junction energy mismatch {gap:.6e} hartree exceeds "
            f"tolerance {tolerance:.6e}"
        )


class SolverError(NumericalError):
    """Dense eigensolver failed; message carries LAPACK diagnostics."""


class TrackingError(NumericalError):
    """Eigenvalue continuation along the theta grid became ambiguous or lost."""


class ClassificationError(NumericalError):
    """Resonance set lacks the expected node structure.

    Carries the node counts that were found.
    """

    def __init__(self, message: str, found_nodes=()):
        self.found_nodes = tuple(found_nodes)
        super().__init__(message)


class BranchPointError(NumericalError):
    """Energy coincides with a segment height: zero wavevector."""


class NoPoleFoundError(NumericalError):
    """Complex root search diverged, escaped the lower half plane, or stalled."""


class DegenerateNormalizationError(NumericalError):
    """A c-product self-overlap is numerically zero (self-orthogonal state)."""


class BoundaryWarning(UserWarning):
    """Stationary point of a theta trajectory sits on the grid boundary."""
