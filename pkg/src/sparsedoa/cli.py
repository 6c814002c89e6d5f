"""Command-line interface: geometry reports, one-shot simulation/estimation,
bound evaluation and Monte Carlo sweeps."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .coarray import CoarrayError
from .crlb import CrlbError, assemble_fim, crlb_fc_up, crlb_theta
from .estimators import EstimationError
from .geometry import GeometryError, difference_coarray, theorem1_bound
from .harness import ConfigError, ExperimentConfig, load_config, resolve_layout
from .signal_model import CalibrationSet, ModelError, default_calibration, simulate

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "out", None) is not None:
        overrides["output"] = args.out
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    return config


def cmd_geometry(args) -> int:
    config = _load(args)
    layout = resolve_layout(config)
    full = layout.full_array
    profile = difference_coarray(full)
    print(f"sensors ({len(full)}): {list(full.positions)}")
    print(f"subarrays: {layout.num_subarrays} kind={layout.kind} mu={layout.mu}")
    print(f"dof={profile.dof} udof={profile.udof}")
    print(f"D: {list(profile.diff_set)}")
    print(f"U: {list(profile.central_set)}")
    print("lag weights:")
    for m in profile.central_set:
        if m >= 0:
            print(f"  w({m:+d}) = {profile.weight_at(m)}")
    if layout.kind == "type-II" and layout.num_subarrays >= 1:
        ref = layout.subarrays[0]
        sprof = difference_coarray(ref)
        if sprof.dof == sprof.udof:
            bound, regime = theorem1_bound(
                sprof.dof, layout.num_subarrays, layout.mu, ref.aperture
            )
            print(f"dof bound: {bound} ({regime}); actual {profile.dof}")
    if args.out:
        lines = ["lag,weight"]
        for m in profile.diff_set:
            lines.append(f"{m},{profile.weight_at(m)}")
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_simulate(args) -> int:
    config = _load(args)
    layout = resolve_layout(config)
    seed = harness._trial_seed(config.base_seed, 0, 0)
    scene = harness._scene_for(config, config.sweep_values[0], seed)
    calib = (
        default_calibration(layout, scene.thetas)
        if layout.mu is not None
        else CalibrationSet(np.ones((1, scene.num_sources), dtype=complex))
    )
    data = simulate(layout, scene, calib)
    out = args.out or "snapshots.npz"
    np.savez(out, **{f"block_{l}": b for l, b in enumerate(data.blocks)})
    print(f"wrote {out}: {len(data.blocks)} blocks, T={data.snapshots}")
    return 0


def cmd_estimate(args) -> int:
    config = _load(args)
    layout = resolve_layout(config)
    seed = harness._trial_seed(config.base_seed, 0, 0)
    scene = harness._scene_for(config, config.sweep_values[0], seed)
    calib = (
        default_calibration(layout, scene.thetas)
        if layout.mu is not None
        else CalibrationSet(np.ones((1, scene.num_sources), dtype=complex))
    )
    data = simulate(layout, scene, calib)
    truth = np.asarray(scene.thetas)
    print(f"truth: {np.round(truth, 6).tolist()}")
    for name in config.estimators:
        try:
            est = harness.run_estimator(
                name, data, layout, config.grid_size, scene.num_sources
            )
        except EstimationError as exc:
            print(f"{name}: FAILED ({exc})")
            continue
        print(f"{name}: {np.round(est, 6).tolist()}  rmse={harness.rmse(est, truth):.6g}")
    return 0


def cmd_crlb(args) -> int:
    config = _load(args)
    layout = resolve_layout(config)
    if config.sweep_axis != "snr":
        raise ConfigError("crlb subcommand sweeps SNR; set sweep_axis = snr")
    rows = ["snr_db,source_index,crlb_value,bound_name"]
    for snr in config.sweep_values:
        scene = harness._scene_for(config, snr, seed=0)
        geometric = layout.mu is not None
        calib = (
            default_calibration(layout, scene.thetas)
            if geometric
            else CalibrationSet(
                np.ones((layout.num_subarrays, scene.num_sources), dtype=complex)
            )
        )
        fim = assemble_fim(
            layout, scene, calib, scene.snapshots, geometric_calibration=geometric
        )
        pc = crlb_theta(fim)
        fc = crlb_fc_up(layout.full_array, scene, scene.snapshots)
        for d in range(scene.num_sources):
            rows.append(f"{snr!r},{d},{pc.theta_bound[d, d]!r},pc-up-prop")
        for d in range(scene.num_sources):
            rows.append(f"{snr!r},{d},{fc.theta_bound[d, d]!r},fc-up")
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    config = _load(args)
    records = harness.run_experiment(config, output_path=config.output)
    print(f"wrote {config.output} ({len(records)} records)")
    for rec in records:
        print(
            f"  {rec.estimator} {rec.axis}={rec.value:g} rmse={rec.rmse:.6g} "
            f"failures={rec.failures}/{rec.trials}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsedoa",
        description="Sparse subarray design, coarray DOA estimation and bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_out in (
        ("geometry", cmd_geometry, True),
        ("simulate", cmd_simulate, True),
        ("estimate", cmd_estimate, False),
        ("crlb", cmd_crlb, True),
        ("sweep", cmd_sweep, True),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        if needs_out:
            p.add_argument("--out", default=None)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GeometryError, ModelError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CrlbError, CoarrayError, EstimationError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
