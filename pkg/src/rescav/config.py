"""Run configuration: one TOML file drives every pipeline stage.

Sections map one-to-one onto pipeline stages; a stage whose section is
absent is simply skipped by the driver. Keys are validated eagerly and
typos are rejected rather than ignored, since a silently dropped key in
a numerics config is worse than a crash. The SHA-256 of the raw config
bytes is stamped into every output so results can be traced back to the
exact file that produced them.
"""

from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .pes import MassSpec
from .ses import KineticSpec, SesContour, STENCILS
from .synthetic import DoubleBarrierSpec
from .units import M_N_AU, M_O_AU, AMU_TO_AU

_DEFAULT_THETA_GRID = (0.02, 0.30, 41)


def _section(raw: dict, name: str) -> dict | None:
    sec = raw.get(name)
    if sec is None:
        return None
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(sec)


def _take(sec: dict, section: str, key: str, kind, default=None,
          required: bool = False):
    if key not in sec:
        if required:
            raise ConfigError(f"[{section}] is missing required key '{key}'")
        return default
    value = sec.pop(key)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"[{section}].{key} must be {getattr(kind, '__name__', kind)}, "
                          f"got {type(value).__name__}")
    return value


def _reject_leftovers(sec: dict, section: str) -> None:
    if sec:
        raise ConfigError(f"[{section}] has unknown keys: {sorted(sec)}")


@dataclass(frozen=True)
class CurveConfig:
    kind: str
    step1: str | None = None
    step2: str | None = None
    step1_energy_shift: float = 0.0
    junction_tolerance: float = 1e-4
    file: str | None = None
    resample_points: int = 0
    n_pad: int = 50
    barrier: DoubleBarrierSpec | None = None
    half_span: float = 0.0
    grid_points: int = 0
    origin: float = 0.0


@dataclass(frozen=True)
class TrajectoryConfig:
    theta_grid: tuple[float, ...]
    track_seed: str = "last"
    track_re_min: float = -math.inf
    track_re_max: float = math.inf
    track_im_min: float = -math.inf
    interior_fraction_min: float = 0.9
    amplitude_floor: float = 0.02
    velocity_threshold: float | None = None
    node_region: tuple[float, float] | None = None


@dataclass(frozen=True)
class OracleConfig:
    delta: float = 2.5e-4
    scan_delta: float = 2e-2
    support_floor: float = 1e-11
    e_min: float = 0.05
    e_max: float | None = None
    n_scan: int = 400


@dataclass(frozen=True)
class PolaritonConfig:
    levels: str = "computed"
    pair: tuple[int, int] = (3, 0)
    single_eps_max: float = 1e-2
    single_eps_points: int = 60
    ensemble_eps_max: float = 6e-5
    ensemble_eps_points: int = 30
    n_list: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10)
    n_cap: int = 10


@dataclass(frozen=True)
class RunConfig:
    path: Path
    sha256: str
    out_dir: str
    masses: MassSpec
    contour: SesContour | None
    kinetic: KineticSpec
    stencil_order: int
    curve: CurveConfig | None
    trajectory: TrajectoryConfig | None
    cavity_pair: tuple[int, int]
    oracle: OracleConfig | None
    polariton: PolaritonConfig | None
    raw: dict = field(repr=False, default_factory=dict)


def _parse_curve(sec: dict) -> CurveConfig:
    kind = _take(sec, "curve", "kind", str, required=True)
    if kind == "files":
        cfg = CurveConfig(
            kind=kind,
            step1=_take(sec, "curve", "step1", str, required=True),
            step2=_take(sec, "curve", "step2", str, required=True),
            step1_energy_shift=_take(sec, "curve", "step1_energy_shift", float, 0.0),
            junction_tolerance=_take(sec, "curve", "junction_tolerance", float, 1e-4),
            resample_points=_take(sec, "curve", "resample_points", int, 0),
            n_pad=_take(sec, "curve", "n_pad", int, 50),
            origin=_take(sec, "curve", "origin", float, 0.0),
        )
    elif kind == "table":
        cfg = CurveConfig(
            kind=kind,
            file=_take(sec, "curve", "file", str, required=True),
            resample_points=_take(sec, "curve", "resample_points", int, 0),
            n_pad=_take(sec, "curve", "n_pad", int, 50),
            origin=_take(sec, "curve", "origin", float, 0.0),
        )
    elif kind == "double_barrier":
        barrier = DoubleBarrierSpec(
            a1=_take(sec, "curve", "a1", float, required=True),
            b1=_take(sec, "curve", "b1", float, required=True),
            h1=_take(sec, "curve", "h1", float, required=True),
            a2=_take(sec, "curve", "a2", float, required=True),
            b2=_take(sec, "curve", "b2", float, required=True),
            h2=_take(sec, "curve", "h2", float, required=True),
            edge_sharpness=_take(sec, "curve", "edge_sharpness", float, required=True),
        )
        cfg = CurveConfig(
            kind=kind,
            barrier=barrier,
            half_span=_take(sec, "curve", "half_span", float, required=True),
            grid_points=_take(sec, "curve", "grid_points", int, required=True),
        )
    else:
        raise ConfigError(f"[curve].kind must be 'files', 'table' or 'double_barrier', "
                          f"got {kind!r}")
    _reject_leftovers(sec, "curve")
    return cfg


def _parse_trajectory(sec: dict) -> TrajectoryConfig:
    grid_list = _take(sec, "trajectory", "theta_grid", list)
    if grid_list is None:
        start = _take(sec, "trajectory", "theta_start", float, _DEFAULT_THETA_GRID[0])
        stop = _take(sec, "trajectory", "theta_stop", float, _DEFAULT_THETA_GRID[1])
        count = _take(sec, "trajectory", "theta_count", int, _DEFAULT_THETA_GRID[2])
        if count < 1 or not start < stop:
            raise ConfigError("[trajectory] theta range is empty or inverted")
        grid = tuple(np.linspace(start, stop, count).tolist())
    else:
        try:
            grid = tuple(float(x) for x in grid_list)
        except (TypeError, ValueError) as exc:
            raise ConfigError("[trajectory].theta_grid must be a list of numbers") from exc
        if len(grid) == 0:
            raise ConfigError("[trajectory].theta_grid must not be empty")
    region_list = _take(sec, "trajectory", "node_region", list)
    region = None
    if region_list is not None:
        if len(region_list) != 2:
            raise ConfigError("[trajectory].node_region must be [r_lo, r_hi]")
        region = (float(region_list[0]), float(region_list[1]))
    seed = _take(sec, "trajectory", "track_seed", str, "last")
    if seed not in ("first", "last"):
        raise ConfigError("[trajectory].track_seed must be 'first' or 'last'")
    cfg = TrajectoryConfig(
        theta_grid=grid,
        track_seed=seed,
        track_re_min=_take(sec, "trajectory", "track_re_min", float, -math.inf),
        track_re_max=_take(sec, "trajectory", "track_re_max", float, math.inf),
        track_im_min=_take(sec, "trajectory", "track_im_min", float, -math.inf),
        interior_fraction_min=_take(sec, "trajectory", "interior_fraction_min", float, 0.9),
        amplitude_floor=_take(sec, "trajectory", "amplitude_floor", float, 0.02),
        velocity_threshold=_take(sec, "trajectory", "velocity_threshold", float),
        node_region=region,
    )
    _reject_leftovers(sec, "trajectory")
    return cfg


def _parse_pair(value, where: str) -> tuple[int, int]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{where} must be a two-element list [upper, lower]")
    upper, lower = value
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in (upper, lower)):
        raise ConfigError(f"{where} entries must be integers")
    return int(upper), int(lower)


def load_config(path) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = tomllib.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc

    digest = hashlib.sha256(blob).hexdigest()

    run = _section(raw, "run") or {}
    out_dir = _take(run, "run", "out_dir", str, "out")
    _reject_leftovers(run, "run")

    masses_sec = _section(raw, "masses") or {}
    m_n = _take(masses_sec, "masses", "m_n_amu", float)
    m_o = _take(masses_sec, "masses", "m_o_amu", float)
    _reject_leftovers(masses_sec, "masses")
    masses = MassSpec(
        m_n=m_n * AMU_TO_AU if m_n is not None else M_N_AU,
        m_o=m_o * AMU_TO_AU if m_o is not None else M_O_AU,
    )

    contour_sec = _section(raw, "contour")
    contour = None
    if contour_sec is not None:
        contour = SesContour(
            theta=_take(contour_sec, "contour", "theta", float, required=True),
            lam=_take(contour_sec, "contour", "lambda", float, required=True),
            r_left=_take(contour_sec, "contour", "r_left", float, required=True),
            r_right=_take(contour_sec, "contour", "r_right", float, required=True),
        )
        _reject_leftovers(contour_sec, "contour")

    kin_sec = _section(raw, "kinetic") or {}
    prefactor = _take(kin_sec, "kinetic", "inverse_mass_prefactor", float)
    stencil_order = _take(kin_sec, "kinetic", "stencil_order", int, 5)
    _reject_leftovers(kin_sec, "kinetic")
    if stencil_order not in STENCILS:
        raise ConfigError(f"[kinetic].stencil_order must be one of {sorted(STENCILS)}")
    kinetic = KineticSpec(inverse_mass_prefactor=prefactor) if prefactor is not None \
        else KineticSpec()

    curve_sec = _section(raw, "curve")
    curve = _parse_curve(curve_sec) if curve_sec is not None else None

    traj_sec = _section(raw, "trajectory")
    trajectory = _parse_trajectory(traj_sec) if traj_sec is not None else None

    cavity_sec = _section(raw, "cavity") or {}
    pair_raw = _take(cavity_sec, "cavity", "pair", list)
    _reject_leftovers(cavity_sec, "cavity")
    cavity_pair = _parse_pair(pair_raw, "[cavity].pair") if pair_raw is not None else (3, 0)

    oracle_sec = _section(raw, "oracle")
    oracle = None
    if oracle_sec is not None:
        oracle = OracleConfig(
            delta=_take(oracle_sec, "oracle", "delta", float, 2.5e-4),
            scan_delta=_take(oracle_sec, "oracle", "scan_delta", float, 2e-2),
            support_floor=_take(oracle_sec, "oracle", "support_floor", float, 1e-11),
            e_min=_take(oracle_sec, "oracle", "e_min", float, 0.05),
            e_max=_take(oracle_sec, "oracle", "e_max", float),
            n_scan=_take(oracle_sec, "oracle", "n_scan", int, 400),
        )
        _reject_leftovers(oracle_sec, "oracle")

    pol_sec = _section(raw, "polariton")
    polariton = None
    if pol_sec is not None:
        pair_raw = _take(pol_sec, "polariton", "pair", list)
        n_list_raw = _take(pol_sec, "polariton", "n_list", list)
        if n_list_raw is not None:
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in n_list_raw):
                raise ConfigError("[polariton].n_list entries must be integers")
            n_list = tuple(int(x) for x in n_list_raw)
        else:
            n_list = PolaritonConfig.n_list
        polariton = PolaritonConfig(
            levels=_take(pol_sec, "polariton", "levels", str, "computed"),
            pair=_parse_pair(pair_raw, "[polariton].pair") if pair_raw is not None else (3, 0),
            single_eps_max=_take(pol_sec, "polariton", "single_eps_max", float, 1e-2),
            single_eps_points=_take(pol_sec, "polariton", "single_eps_points", int, 60),
            ensemble_eps_max=_take(pol_sec, "polariton", "ensemble_eps_max", float, 6e-5),
            ensemble_eps_points=_take(pol_sec, "polariton", "ensemble_eps_points", int, 30),
            n_list=n_list,
            n_cap=_take(pol_sec, "polariton", "n_cap", int, 10),
        )
        _reject_leftovers(pol_sec, "polariton")

    known = {"run", "masses", "contour", "kinetic", "curve", "trajectory",
             "cavity", "oracle", "polariton"}
    extras = set(raw) - known
    if extras:
        raise ConfigError(f"config has unknown sections: {sorted(extras)}")

    return RunConfig(path=path, sha256=digest, out_dir=out_dir, masses=masses,
                     contour=contour, kinetic=kinetic, stencil_order=stencil_order,
                     curve=curve, trajectory=trajectory, cavity_pair=cavity_pair,
                     oracle=oracle, polariton=polariton, raw=raw)


def coupling_grid(eps_max: float, n_points: int) -> np.ndarray:
    """Zero plus a log-spaced ramp up to eps_max.

    The zero point anchors the rate ratio; the log spacing resolves the
    onset of suppression, which happens orders of magnitude below the
    top of the sweep.
    """
    if not eps_max > 0.0:
        raise ConfigError("coupling sweep maximum must be positive")
    if n_points < 2:
        raise ConfigError("coupling sweep needs at least two points")
    ramp = np.geomspace(eps_max * 1e-4, eps_max, n_points - 1)
    return np.concatenate(([0.0], ramp))
