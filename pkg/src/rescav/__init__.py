"""Resonance lifetimes over smoothly scaled contours, and what an optical
cavity does to them.

The package prepares a one-dimensional reaction-path potential, finds
its metastable states by following the spectrum of a smoothly scaled
Hamiltonian through a ladder of rotation angles, cross-checks synthetic
cases against an independent transfer-matrix pole search, and feeds the
resulting level table into photon-dressed rate models for one molecule
and for small ensembles sharing a cavity mode.
"""

from .config import PolaritonConfig, RunConfig, coupling_grid, load_config
from .errors import (BoundaryWarning, BranchPointError, ClassificationError,
                     ConfigError, DegenerateNormalizationError, InputError,
                     NoPoleFoundError, NumericalError, RescavError,
                     SolverError, StitchMismatchError, TrackingError)
from .pes import (MassSpec, PathPoint, PesCurve, StitchSpec,
                  arc_length_coordinate, augment_grid, mass_weight_step1,
                  mass_weight_step2, path_to_curve, read_curve_table,
                  read_path_table, resample_uniform, stitch_curves,
                  write_curve_table)
from .polariton import (LevelSet, RateCurve, build_ensemble_h, build_single_h,
                        collective_coupling, completeness_defect,
                        enumerate_basis, gamma_cav, gamma_polariton,
                        levels_from_resonances, ratio_curve, read_levels_json,
                        single_rate_curve)
from .resonances import (CavitySpec, DipoleTable, Resonance, ThetaTrajectory,
                         band_selector, c_product, cavity_from_gap,
                         classify_resonances, count_nodes,
                         default_node_region, detect_stationary,
                         dipole_matrix, find_resonances, gap_to_wavelength_um,
                         interior_fraction, label_landmarks,
                         measure_resonances, region_to_indices,
                         run_theta_trajectory, stationary_poles)
from .ses import (Eigenpair, KineticSpec, SesContour, assemble_hamiltonian,
                  big_F_of_r, cap_terms, derivative_matrices, eigensolve,
                  eigenvalues, f_of_r, g_of_r)
from .synthetic import DoubleBarrierSpec, sample_double_barrier
from .tmoracle import (PiecewisePotential, PoleResult, find_pole,
                       inverse_transmission, scan_poles, staircase_potential,
                       transfer_matrix)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "RescavError", "InputError", "ConfigError", "NumericalError",
    "StitchMismatchError", "SolverError", "TrackingError",
    "ClassificationError", "BranchPointError", "NoPoleFoundError",
    "DegenerateNormalizationError", "BoundaryWarning",
    # potential preparation
    "MassSpec", "PathPoint", "StitchSpec", "PesCurve",
    "mass_weight_step1", "mass_weight_step2", "arc_length_coordinate",
    "path_to_curve", "stitch_curves", "resample_uniform", "augment_grid",
    "read_path_table", "read_curve_table", "write_curve_table",
    # scaled-contour engine
    "SesContour", "KineticSpec", "Eigenpair", "g_of_r", "f_of_r",
    "big_F_of_r", "cap_terms", "derivative_matrices",
    "assemble_hamiltonian", "eigenvalues", "eigensolve",
    # synthetic barriers
    "DoubleBarrierSpec", "sample_double_barrier",
    # resonance extraction
    "ThetaTrajectory", "Resonance", "DipoleTable", "CavitySpec",
    "band_selector", "run_theta_trajectory", "detect_stationary",
    "count_nodes", "interior_fraction", "default_node_region",
    "region_to_indices", "measure_resonances", "label_landmarks",
    "classify_resonances", "c_product", "dipole_matrix",
    "gap_to_wavelength_um", "cavity_from_gap", "stationary_poles",
    "find_resonances",
    # transfer-matrix oracle
    "PiecewisePotential", "PoleResult", "transfer_matrix",
    "inverse_transmission", "find_pole", "scan_poles",
    "staircase_potential",
    # photon-dressed models
    "LevelSet", "RateCurve", "levels_from_resonances", "read_levels_json",
    "build_single_h", "gamma_polariton", "enumerate_basis",
    "build_ensemble_h", "gamma_cav", "completeness_defect",
    "single_rate_curve", "ratio_curve", "collective_coupling",
    # run configuration
    "RunConfig", "PolaritonConfig", "load_config", "coupling_grid",
]
