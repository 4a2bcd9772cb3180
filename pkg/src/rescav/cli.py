"""Pipeline driver: config in, tabulated results out.

Each subcommand runs one stage; `all` chains every stage whose config
section is present. Outputs are plain CSV/JSON with the config hash and
package version stamped into each file, and contain nothing
nondeterministic, so rerunning a command with the same config and
inputs reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, coupling_grid, load_config
from .errors import ClassificationError, ConfigError, InputError, RescavError
from .pes import (PesCurve, StitchSpec, augment_grid, path_to_curve,
                  read_curve_table, read_path_table, resample_uniform,
                  stitch_curves, write_curve_table)
from .polariton import (levels_from_resonances, ratio_curve, read_levels_json,
                        single_rate_curve)
from .resonances import (band_selector, cavity_from_gap, detect_stationary,
                         dipole_matrix, label_landmarks, measure_resonances,
                         region_to_indices, run_theta_trajectory)
from .ses import assemble_hamiltonian, eigensolve
from .synthetic import sample_double_barrier
from .tmoracle import find_pole, scan_poles, staircase_potential

_FMT = "{:.16e}".format


def _resolve(cfg: RunConfig, p: str) -> Path:
    """Relative paths in a config resolve against the config's directory."""
    path = Path(p)
    return path if path.is_absolute() else cfg.path.parent / path


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _stamp(cfg: RunConfig) -> list[str]:
    return [f"config_sha256={cfg.sha256}", f"version={__version__}"]


def _write_csv(path: Path, cfg: RunConfig, columns: list[str], rows: list[list[str]]) -> None:
    lines = [f"# {s}" for s in _stamp(cfg)]
    lines.append(",".join(columns))
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def prepare_curve(cfg: RunConfig) -> tuple[PesCurve, dict]:
    """Build the working potential curve for this config.

    Returns the curve and a provenance record (input digests and the
    parameters that shaped the grid).
    """
    cc = cfg.curve
    if cc is None:
        raise ConfigError("this stage needs a [curve] section")
    if cc.kind == "files":
        p1, p2 = _resolve(cfg, cc.step1), _resolve(cfg, cc.step2)
        pts1 = read_path_table(p1, 1, cfg.masses)
        pts2 = read_path_table(p2, 2, cfg.masses)
        c1 = path_to_curve(pts1, "decreasing")
        c2 = path_to_curve(pts2, "increasing")
        stitched = stitch_curves(c1, c2, StitchSpec(cc.step1_energy_shift,
                                                    cc.junction_tolerance))
        if cc.resample_points < 4:
            raise ConfigError("[curve].resample_points must be >= 4 for stitched input")
        curve = resample_uniform(stitched, cc.resample_points)
        curve = augment_grid(curve, cc.n_pad)
        prov = {"kind": cc.kind, "step1": cc.step1, "step2": cc.step2,
                "step1_sha256": _sha256_file(p1), "step2_sha256": _sha256_file(p2),
                "step1_energy_shift": cc.step1_energy_shift,
                "resample_points": cc.resample_points, "n_pad": cc.n_pad,
                "origin": cc.origin}
    elif cc.kind == "table":
        p = _resolve(cfg, cc.file)
        curve = read_curve_table(p)
        if cc.resample_points >= 4:
            curve = resample_uniform(curve, cc.resample_points)
        elif not curve.uniform:
            raise ConfigError("[curve].resample_points must be >= 4 for a non-uniform table")
        curve = augment_grid(curve, cc.n_pad)
        prov = {"kind": cc.kind, "file": cc.file, "file_sha256": _sha256_file(p),
                "resample_points": cc.resample_points, "n_pad": cc.n_pad,
                "origin": cc.origin}
    else:
        curve = sample_double_barrier(cc.barrier, cc.half_span, cc.grid_points)
        b = cc.barrier
        prov = {"kind": cc.kind,
                "barrier": {"a1": b.a1, "b1": b.b1, "h1": b.h1,
                            "a2": b.a2, "b2": b.b2, "h2": b.h2,
                            "edge_sharpness": b.edge_sharpness},
                "half_span": cc.half_span, "grid_points": cc.grid_points}
    if cc.origin != 0.0:
        curve = PesCurve(curve.r - cc.origin, curve.v)
    return curve, prov


def cmd_ingest(cfg: RunConfig, out: Path, state: dict) -> dict:
    curve, prov = prepare_curve(cfg)
    write_curve_table(curve, out / "curve.csv", header_lines=_stamp(cfg))
    print(f"wrote {out / 'curve.csv'}")
    meta = {"config_sha256": cfg.sha256, "version": __version__,
            "provenance": prov, "n_points": len(curve), "spacing": curve.spacing,
            "r_min": float(curve.r[0]), "r_max": float(curve.r[-1])}
    _write_json(out / "ingest_meta.json", meta)
    state["curve"] = curve
    return state


def _tracking_selector(cfg: RunConfig):
    tj = cfg.trajectory
    return band_selector(tj.track_re_min, tj.track_re_max, tj.track_im_min)


def cmd_resonances(cfg: RunConfig, out: Path, state: dict) -> dict:
    if cfg.contour is None or cfg.trajectory is None:
        raise ConfigError("the resonance stage needs [contour] and [trajectory] sections")
    curve = state.get("curve")
    if curve is None:
        curve, _ = prepare_curve(cfg)
        state["curve"] = curve
    tj = cfg.trajectory
    theta = np.asarray(tj.theta_grid, dtype=float)

    captured: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        trajectories = run_theta_trajectory(curve, cfg.contour, theta, cfg.kinetic,
                                            select=_tracking_selector(cfg),
                                            stencil_order=cfg.stencil_order,
                                            seed_at=tj.track_seed)
        if theta.size >= 3:
            theta_ref = max(detect_stationary(t)[0] for t in trajectories)
        else:
            theta_ref = float(theta[-1])
        h = assemble_hamiltonian(curve, cfg.contour.with_theta(theta_ref), cfg.kinetic,
                                 stencil_order=cfg.stencil_order)
        pairs = eigensolve(h)
        region = region_to_indices(curve, *tj.node_region) if tj.node_region else None
        measured = measure_resonances(
            pairs, trajectories, curve=curve, contour=cfg.contour, theta_ref=theta_ref,
            node_region=region, amplitude_floor=tj.amplitude_floor,
            interior_min=tj.interior_fraction_min,
            velocity_threshold=tj.velocity_threshold)
        classification_error = None
        try:
            resonances = label_landmarks(measured)
        except ClassificationError as exc:
            resonances = measured
            classification_error = str(exc)
        captured.extend(str(w.message) for w in caught)

    rows = []
    for k, traj in enumerate(trajectories):
        for th, en in zip(traj.theta_values, traj.energies):
            rows.append([str(k), _FMT(th), _FMT(en.real), _FMT(en.imag)])
    _write_csv(out / "trajectory.csv", cfg, ["state", "theta", "re_e", "im_e"], rows)

    rows = []
    for k, res in enumerate(resonances):
        rows.append([str(k), str(res.nodes), _FMT(res.position), _FMT(res.width),
                     _FMT(res.theta_star), _FMT(res.interior_fraction),
                     str(int(res.is_ground_like)), str(int(res.is_barrier_top))])
    _write_csv(out / "resonances.csv", cfg,
               ["index", "nodes", "e_r", "gamma", "theta_star",
                "interior_fraction", "is_ground_like", "is_barrier_top"], rows)

    dipoles = None
    cavity = None
    if classification_error is None:
        top = next(res for res in resonances if res.is_barrier_top)
        vectors = None
        if top.theta_star != theta_ref:
            h_top = assemble_hamiltonian(curve, cfg.contour.with_theta(top.theta_star),
                                         cfg.kinetic, stencil_order=cfg.stencil_order)
            pairs_top = eigensolve(h_top)
            pool = np.array([p.energy for p in pairs_top])
            vectors = [pairs_top[int(np.argmin(np.abs(pool - res.energy)))].vector
                       for res in resonances]
        dipoles = dipole_matrix(resonances, curve, cfg.contour,
                                theta_star=top.theta_star, vectors=vectors)
        rows = []
        for i in range(dipoles.n_states):
            for j in range(i, dipoles.n_states):
                d = dipoles.values[i, j]
                rows.append([str(i), str(j), _FMT(d.real), _FMT(d.imag)])
        _write_csv(out / "dipoles.csv", cfg, ["i", "j", "re_d", "im_d"], rows)

        cavity = cavity_from_gap(resonances, cfg.cavity_pair)
        _write_json(out / "cavity.json", {
            "pair": list(cavity.pair),
            "hbar_omega_au": cavity.hbar_omega_au,
            "wavelength_um": cavity.wavelength_um,
            "mirror_distance_um": cavity.mirror_distance_um,
        })

    meta = {"config_sha256": cfg.sha256, "version": __version__,
            "theta_ref": theta_ref, "n_tracked": len(trajectories),
            "n_retained": len(resonances),
            "classification": classification_error or "ok",
            "warnings": captured}
    _write_json(out / "resonances_meta.json", meta)

    state.update(resonances=resonances, dipoles=dipoles, cavity=cavity,
                 classification_error=classification_error)
    return state


def cmd_oracle(cfg: RunConfig, out: Path, state: dict) -> dict:
    if cfg.oracle is None:
        raise ConfigError("the oracle stage needs an [oracle] section")
    cc = cfg.curve
    if cc is None or cc.kind != "double_barrier":
        raise ConfigError("the oracle stage works on double_barrier curves only")
    oc = cfg.oracle
    spec = cc.barrier
    cut = spec.support_radius(oc.support_floor)
    # Seeds come from a coarse staircase where scanning is cheap; each
    # seed is then polished on the fine staircase that sets the accuracy.
    coarse = staircase_potential(spec.profile(), cut, oc.scan_delta)
    fine = staircase_potential(spec.profile(), cut, oc.delta)
    e_max = oc.e_max if oc.e_max is not None else 0.98 * min(spec.h1, spec.h2)
    seeds = scan_poles(coarse, oc.e_min, e_max, cfg.kinetic, n_scan=oc.n_scan)
    poles = [find_pole(fine, seed.energy, cfg.kinetic) for seed in seeds]

    rows = []
    for k, pole in enumerate(poles):
        rows.append([str(k), "-1", _FMT(pole.energy.real), _FMT(-2.0 * pole.energy.imag),
                     "nan", "nan", "transfer_matrix"])
    _write_csv(out / "oracle_poles.csv", cfg,
               ["index", "nodes", "e_r", "gamma", "theta_star",
                "interior_fraction", "source"], rows)
    meta = {"config_sha256": cfg.sha256, "version": __version__,
            "delta": oc.delta, "scan_delta": oc.scan_delta, "support_cut": cut,
            "n_segments": len(fine.heights), "n_poles": len(poles),
            "max_residual": max((p.residual for p in poles), default=0.0)}
    _write_json(out / "oracle_meta.json", meta)
    state["oracle_poles"] = poles
    return state


def cmd_polariton(cfg: RunConfig, out: Path, state: dict) -> dict:
    pc = cfg.polariton
    if pc is None:
        raise ConfigError("the polariton stage needs a [polariton] section")
    if pc.levels == "computed":
        if "resonances" not in state:
            state = cmd_resonances(cfg, out, state)
        if state.get("classification_error"):
            raise InputError("computed level table needs a successful classification: "
                             + state["classification_error"])
        resonances = state["resonances"]
        if len(resonances) != 4:
            raise InputError(f"computed level table needs exactly 4 states, "
                             f"got {len(resonances)}")
        levels = levels_from_resonances(resonances, state["dipoles"], pair=pc.pair)
    else:
        levels = read_levels_json(_resolve(cfg, pc.levels))

    eps_single = coupling_grid(pc.single_eps_max, pc.single_eps_points)
    rc_single = single_rate_curve(levels, eps_single)
    rows = [[_FMT(e), _FMT(g), _FMT(q)]
            for e, g, q in zip(rc_single.epsilon_values, rc_single.rates, rc_single.ratios)]
    _write_csv(out / "rates_single.csv", cfg, ["epsilon", "gamma", "ratio"], rows)

    # Every N sweeps the same per-molecule coupling axis, which is what
    # makes the N = 1 and N = 10 suppression curves directly comparable.
    eps_ens = coupling_grid(pc.ensemble_eps_max, pc.ensemble_eps_points)
    rows = []
    min_ratio_by_n = {}
    for n in pc.n_list:
        rc = ratio_curve(levels, n, eps_ens, pair=pc.pair, n_cap=pc.n_cap)
        min_ratio_by_n[str(n)] = float(rc.ratios.min())
        for e, g, q in zip(rc.epsilon_values, rc.rates, rc.ratios):
            rows.append([str(n), _FMT(e), _FMT(g), _FMT(q)])
    _write_csv(out / "rates_ensemble.csv", cfg,
               ["n_mol", "epsilon", "gamma", "ratio"], rows)

    summary = {"config_sha256": cfg.sha256, "version": __version__,
               "levels_source": pc.levels,
               "hbar_omega": levels.hbar_omega,
               "gamma_zero_coupling": float(rc_single.rates[0]),
               "min_single_ratio": float(rc_single.ratios.min()),
               "min_ratio_by_n": min_ratio_by_n}
    _write_json(out / "polariton_summary.json", summary)
    state["levels"] = levels
    return state


def cmd_all(cfg: RunConfig, out: Path, state: dict) -> dict:
    ran = []
    if cfg.curve is not None:
        state = cmd_ingest(cfg, out, state)
        ran.append("ingest")
    if cfg.curve is not None and cfg.contour is not None and cfg.trajectory is not None:
        state = cmd_resonances(cfg, out, state)
        ran.append("resonances")
    if cfg.oracle is not None and cfg.curve is not None \
            and cfg.curve.kind == "double_barrier":
        state = cmd_oracle(cfg, out, state)
        ran.append("oracle")
    if cfg.polariton is not None:
        state = cmd_polariton(cfg, out, state)
        ran.append("polariton")
    if not ran:
        raise ConfigError("config enables no pipeline stage")
    print("stages: " + " ".join(ran))
    return state


_COMMANDS = {
    "ingest": cmd_ingest,
    "resonances": cmd_resonances,
    "oracle": cmd_oracle,
    "polariton": cmd_polariton,
    "all": cmd_all,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rescav",
        description="Resonances over scaled contours, with cavity-dressed rate models.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("ingest", "prepare the potential curve"),
        ("resonances", "track, stabilize and classify resonances"),
        ("oracle", "independent transfer-matrix poles for synthetic barriers"),
        ("polariton", "cavity-dressed decay-rate sweeps"),
        ("all", "run every stage the config enables"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default=None, help="output directory (default from config)")

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out) if args.out is not None else _resolve(cfg, cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](cfg, out, {})
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RescavError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
