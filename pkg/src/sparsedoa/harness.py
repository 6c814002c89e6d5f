"""Batch experiment driver: seeded Monte Carlo sweeps over SNR or snapshot
count, RMSE accounting and CSV output."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .coarray import coarray_vectorize, noise_subspace, sample_covariance, spatial_smooth
from .crlb import assemble_fim, crlb_fc_up, crlb_theta
from .estimators import (
    EstimationError,
    InsufficientPeaksError,
    gca_music,
    gca_rmusic,
    ss_music_baseline,
)
from .geometry import (
    GeometryError,
    SensorSet,
    SubarrayLayout,
    build_type2,
    generate_mra,
    generate_naq2,
    generate_snaq2,
    split_type1,
)
from .signal_model import (
    CalibrationSet,
    SceneConfig,
    SnapshotData,
    default_calibration,
    noise_var_for_snr_db,
    simulate,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RmseRecord",
    "rmse",
    "naive_rmse",
    "resolve_layout",
    "run_experiment",
    "write_csv",
    "ESTIMATOR_NAMES",
]

ESTIMATOR_NAMES = ("gca-music", "gca-rmusic", "ss-music")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: str = "mra"  # builtin name or "explicit"
    geometry_n: int = 7
    geometry_n1: int = 4
    geometry_n2: int = 3
    positions: tuple[int, ...] = ()
    subarrays: int = 2
    mu: int = 8
    thetas: tuple[float, ...] = ()
    powers: tuple[float, ...] = ()  # empty: unit power per source
    snapshots: int = 2000
    snr_db: float = 0.0
    sweep_axis: str = "snr"  # "snr" | "snapshots"
    sweep_values: tuple[float, ...] = (0.0,)
    trials: int = 1000
    estimators: tuple[str, ...] = ESTIMATOR_NAMES
    grid_size: int = 4001
    include_crlb: bool = False
    base_seed: int = 0
    workers: int = 1
    output: str = "sweep.csv"

    def __post_init__(self):
        if self.sweep_axis not in ("snr", "snapshots"):
            raise ConfigError(f"unknown sweep axis {self.sweep_axis!r}")
        if not self.sweep_values:
            raise ConfigError("sweep needs at least one value")
        if not all(np.isfinite(v) for v in self.sweep_values):
            raise ConfigError("sweep values must be finite")
        if self.trials < 1:
            raise ConfigError("need at least one trial")
        bad = [e for e in self.estimators if e not in ESTIMATOR_NAMES]
        if bad:
            raise ConfigError(f"unknown estimators: {bad}")
        if not self.thetas:
            raise ConfigError("config must list source directions (thetas)")
        if self.powers and len(self.powers) != len(self.thetas):
            raise ConfigError("powers must match thetas in length")


_LIST_KEYS = {"thetas", "powers", "sweep_values", "positions", "estimators"}
_INT_KEYS = {
    "geometry_n", "geometry_n1", "geometry_n2", "subarrays", "mu", "snapshots",
    "trials", "grid_size", "base_seed", "workers",
}
_FLOAT_KEYS = {"snr_db"}
_BOOL_KEYS = {"include_crlb"}


def parse_config_text(text: str) -> ExperimentConfig:
    """Flat ``key = value`` config; '#' comments; unknown keys are an error."""
    valid = set(ExperimentConfig.__dataclass_fields__)
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in valid:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _LIST_KEYS:
                items = [v.strip() for v in val.split(",") if v.strip()]
                if key == "estimators":
                    values[key] = tuple(items)
                elif key == "positions":
                    values[key] = tuple(int(v) for v in items)
                else:
                    values[key] = tuple(float(v) for v in items)
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _BOOL_KEYS:
                if val.lower() not in ("true", "false", "0", "1", "yes", "no"):
                    raise ValueError(val)
                values[key] = val.lower() in ("true", "1", "yes")
            else:
                values[key] = val
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def resolve_reference(config: ExperimentConfig) -> SensorSet:
    name = config.geometry.lower()
    if name == "mra":
        return generate_mra(config.geometry_n)
    if name == "naq2":
        return generate_naq2(config.geometry_n1, config.geometry_n2)
    if name in ("snaq2", "snaq2-7"):
        return generate_snaq2(7 if name == "snaq2-7" else config.geometry_n)
    if name == "explicit":
        if not config.positions:
            raise ConfigError("explicit geometry needs positions")
        return SensorSet(config.positions)
    raise ConfigError(f"unknown geometry {config.geometry!r}")


def resolve_layout(config: ExperimentConfig) -> SubarrayLayout:
    reference = resolve_reference(config).canonical()
    if config.subarrays == 1:
        return SubarrayLayout(subarrays=(reference,), kind="custom", mu=None)
    return build_type2(reference, config.subarrays, config.mu)


def rmse(estimates, truth) -> float:
    """Root mean squared error with order-statistic pairing."""
    est = np.sort(np.asarray(estimates, dtype=float))
    tru = np.sort(np.asarray(truth, dtype=float))
    if est.shape != tru.shape:
        raise ValueError("estimate and truth lengths differ")
    return float(np.sqrt(np.mean((est - tru) ** 2)))


def naive_rmse(truth) -> float:
    """RMSE of a direction guess drawn uniformly over the search interval."""
    tru = np.asarray(truth, dtype=float)
    return float(np.sqrt(1.0 / 3.0 + np.mean(tru**2)))


@dataclass(frozen=True)
class RmseRecord:
    estimator: str
    axis: str
    value: float
    rmse: float
    failures: int
    trials: int
    mean_runtime_s: float
    crlb_pc_up: float | None = None
    crlb_fc_up: float | None = None


def _subarray_subspaces(data: SnapshotData, layout: SubarrayLayout, d: int):
    subs = []
    for block, sub in zip(data.blocks, layout.subarrays):
        sig = coarray_vectorize(sample_covariance(block), sub)
        subs.append(noise_subspace(spatial_smooth(sig), d))
    return subs


def run_estimator(
    name: str,
    data: SnapshotData,
    layout: SubarrayLayout,
    grid_size: int,
    d: int,
) -> np.ndarray:
    """One estimator, end to end from snapshots.  Raises EstimationError on
    a resolution failure."""
    if name == "gca-music":
        subs = _subarray_subspaces(data, layout, d)
        return gca_music(subs, grid_size, d).estimates
    if name == "gca-rmusic":
        subs = _subarray_subspaces(data, layout, d)
        result = gca_rmusic(subs, d)
        if result.deficient:
            raise EstimationError("root selection fell back to outside roots")
        return result.estimates
    if name == "ss-music":
        return ss_music_baseline(data, layout, grid_size, d).estimates
    raise ConfigError(f"unknown estimator {name!r}")


def _scene_for(config: ExperimentConfig, sweep_value: float, seed: int) -> SceneConfig:
    powers = config.powers or tuple(1.0 for _ in config.thetas)
    if config.sweep_axis == "snr":
        noise_var = noise_var_for_snr_db(float(sweep_value))
        snapshots = config.snapshots
    else:
        noise_var = noise_var_for_snr_db(config.snr_db)
        snapshots = int(sweep_value)
    return SceneConfig(config.thetas, powers, noise_var, snapshots, seed=seed)


def _trial_seed(base_seed: int, sweep_index: int, trial_index: int) -> int:
    ss = np.random.SeedSequence((base_seed, sweep_index, trial_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_trial(args):
    config, layout, sweep_index, sweep_value, trial_index = args
    seed = _trial_seed(config.base_seed, sweep_index, trial_index)
    scene = _scene_for(config, sweep_value, seed)
    calib = (
        default_calibration(layout, scene.thetas)
        if layout.mu is not None
        else CalibrationSet(np.ones((1, scene.num_sources), dtype=complex))
    )
    data = simulate(layout, scene, calib)
    d = scene.num_sources
    out = {}
    for name in config.estimators:
        start = time.perf_counter()
        try:
            estimates = run_estimator(name, data, layout, config.grid_size, d)
            err = float(np.mean((np.sort(estimates) - np.asarray(scene.thetas)) ** 2))
            ok = True
        except (EstimationError, InsufficientPeaksError):
            err = 0.0
            ok = False
        out[name] = (ok, err, time.perf_counter() - start)
    return trial_index, out


def _crlb_values(config: ExperimentConfig, layout: SubarrayLayout, sweep_value: float):
    """RMS-over-sources square-root bounds for the partially- and
    fully-calibrated cases at one sweep point."""
    scene = _scene_for(config, sweep_value, seed=0)
    calib = default_calibration(layout, scene.thetas)
    t = scene.snapshots
    fim = assemble_fim(layout, scene, calib, t)
    pc = crlb_theta(fim)
    fc = crlb_fc_up(layout.full_array, scene, t)
    pc_rms = float(np.sqrt(np.mean(np.diag(pc.theta_bound))))
    fc_rms = float(np.sqrt(np.mean(np.diag(fc.theta_bound))))
    return pc_rms, fc_rms


def run_experiment(config: ExperimentConfig, output_path=None) -> list[RmseRecord]:
    layout = resolve_layout(config)
    records: list[RmseRecord] = []
    for sweep_index, sweep_value in enumerate(config.sweep_values):
        tasks = [
            (config, layout, sweep_index, sweep_value, trial)
            for trial in range(config.trials)
        ]
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(_run_trial, tasks, chunksize=8))
        else:
            results = [_run_trial(t) for t in tasks]
        results.sort(key=lambda r: r[0])  # deterministic merge by trial index

        crlb_pc = crlb_fc = None
        if config.include_crlb:
            crlb_pc, crlb_fc = _crlb_values(config, layout, sweep_value)

        for name in config.estimators:
            sq_sum = 0.0
            successes = 0
            runtime = 0.0
            for _, out in results:
                ok, err, dt = out[name]
                runtime += dt
                if ok:
                    sq_sum += err
                    successes += 1
            value = float(np.sqrt(sq_sum / successes)) if successes else float("nan")
            records.append(
                RmseRecord(
                    estimator=name,
                    axis=config.sweep_axis,
                    value=float(sweep_value),
                    rmse=value,
                    failures=config.trials - successes,
                    trials=config.trials,
                    mean_runtime_s=runtime / config.trials,
                    crlb_pc_up=crlb_pc,
                    crlb_fc_up=crlb_fc,
                )
            )
    if output_path is not None:
        write_csv(records, output_path, include_crlb=config.include_crlb)
    return records


def write_csv(records: list[RmseRecord], path, include_crlb: bool = False) -> None:
    header = "estimator,axis,value,rmse,failures,trials,mean_runtime_s"
    if include_crlb:
        header += ",crlb_pc_up,crlb_fc_up"
    lines = [header]
    for rec in records:
        row = (
            f"{rec.estimator},{rec.axis},{rec.value!r},{rec.rmse!r},"
            f"{rec.failures},{rec.trials},{rec.mean_runtime_s!r}"
        )
        if include_crlb:
            row += f",{rec.crlb_pc_up!r},{rec.crlb_fc_up!r}"
        lines.append(row)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
