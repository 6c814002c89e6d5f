"""Synthetic snapshot generation and exact covariances for the
partially-calibrated subarray model.

Directions are normalized (sine of the physical angle) in [-1, 1).  Each
subarray is internally coherent and referenced to its own first sensor; the
unknown inter-subarray phases live in the calibration matrix ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import SensorSet, SubarrayLayout

__all__ = [
    "SceneConfig",
    "CalibrationSet",
    "SnapshotData",
    "steering_vector",
    "simulate",
    "default_calibration",
    "exact_subarray_covariance",
    "exact_full_covariance",
    "noise_var_for_snr_db",
]


class ModelError(ValueError):
    """Inconsistent scene / calibration / layout dimensions."""


@dataclass(frozen=True)
class SceneConfig:
    """Source directions, powers, noise level and snapshot count."""

    thetas: tuple[float, ...]
    powers: tuple[float, ...]
    noise_var: float
    snapshots: int
    seed: int = 0

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        powers = tuple(float(p) for p in self.powers)
        if len(thetas) != len(powers):
            raise ModelError("need one power per direction")
        if any(b <= a for a, b in zip(thetas, thetas[1:])):
            raise ModelError("directions must be strictly ascending")
        if any(p <= 0 for p in powers):
            raise ModelError("source powers must be positive")
        if self.noise_var <= 0:
            raise ModelError("noise variance must be positive")
        if self.snapshots < 1:
            raise ModelError("need at least one snapshot")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "powers", powers)

    @property
    def num_sources(self) -> int:
        return len(self.thetas)


@dataclass(frozen=True)
class CalibrationSet:
    """Unit-modulus inter-subarray phases, one row per subarray (row 1 = ones)."""

    h: np.ndarray = field(repr=False)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        if h.ndim != 2:
            raise ModelError("calibration matrix must be L x D")
        if not np.allclose(np.abs(h), 1.0, atol=1e-10):
            raise ModelError("calibration entries must have unit modulus")
        if not np.allclose(h[0], 1.0, atol=1e-10):
            raise ModelError("reference subarray row must be all ones")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def num_subarrays(self) -> int:
        return self.h.shape[0]

    @property
    def num_sources(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True)
class SnapshotData:
    """Per-subarray snapshot blocks sharing the same source realizations."""

    blocks: tuple[np.ndarray, ...]

    @property
    def snapshots(self) -> int:
        return self.blocks[0].shape[1]

    def stacked(self) -> np.ndarray:
        """Full-array data matrix (rows follow subarray order)."""
        return np.vstack(self.blocks)


def steering_vector(array: SensorSet, theta: float) -> np.ndarray:
    """exp(j*pi*n*theta) for each sensor position n."""
    n = np.asarray(array.positions, dtype=float)
    return np.exp(1j * np.pi * n * theta)


def _local_manifold(sub: SensorSet, thetas) -> np.ndarray:
    """Subarray manifold referenced to its own first sensor."""
    n = np.asarray(sub.positions, dtype=float)
    n = n - n[0]
    return np.exp(1j * np.pi * np.outer(n, np.asarray(thetas, dtype=float)))


def default_calibration(layout: SubarrayLayout, thetas) -> CalibrationSet:
    """Geometric calibration phases of a type-II layout: subarray l lags the
    reference by (l-1)*(mu+kappa) sensor spacings."""
    if layout.mu is None:
        raise ModelError("layout has no intersubarray spacing; supply calibration explicitly")
    delta = layout.mu + layout.subarrays[0].aperture
    thetas = np.asarray(thetas, dtype=float)
    l_idx = np.arange(layout.num_subarrays)[:, None]
    return CalibrationSet(np.exp(1j * np.pi * l_idx * delta * thetas[None, :]))


def mixing_matrix(layout: SubarrayLayout, scene: SceneConfig, calib: CalibrationSet) -> np.ndarray:
    """Effective N x D manifold: stacked local subarray manifolds scaled by
    the calibration phases."""
    if calib.num_subarrays != layout.num_subarrays:
        raise ModelError("calibration rows must match the subarray count")
    if calib.num_sources != scene.num_sources:
        raise ModelError("calibration columns must match the source count")
    blocks = [
        _local_manifold(sub, scene.thetas) * calib.h[l][None, :]
        for l, sub in enumerate(layout.subarrays)
    ]
    return np.vstack(blocks)


def simulate(layout: SubarrayLayout, scene: SceneConfig, calib: CalibrationSet) -> SnapshotData:
    """Draw snapshots: circular Gaussian sources shared across subarrays,
    independent white circular Gaussian noise.  Deterministic given the seed."""
    w = mixing_matrix(layout, scene, calib)
    d, t = scene.num_sources, scene.snapshots
    n = w.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(scene.seed))
    amp = np.sqrt(np.asarray(scene.powers))[:, None] / np.sqrt(2.0)
    s = amp * (rng.standard_normal((d, t)) + 1j * rng.standard_normal((d, t)))
    sigma = np.sqrt(scene.noise_var / 2.0)
    noise = sigma * (rng.standard_normal((n, t)) + 1j * rng.standard_normal((n, t)))
    x = w @ s + noise
    blocks = []
    start = 0
    for sub in layout.subarrays:
        blocks.append(x[start : start + len(sub)])
        start += len(sub)
    return SnapshotData(blocks=tuple(blocks))


def exact_subarray_covariance(array_l: SensorSet, scene: SceneConfig) -> np.ndarray:
    """Asymptotic covariance of one subarray; calibration-free because the
    calibration phases have unit modulus."""
    a = _local_manifold(array_l, scene.thetas)
    r = (a * np.asarray(scene.powers)[None, :]) @ a.conj().T
    r += scene.noise_var * np.eye(len(array_l))
    return 0.5 * (r + r.conj().T)


def exact_full_covariance(
    layout: SubarrayLayout, scene: SceneConfig, calib: CalibrationSet
) -> np.ndarray:
    """Asymptotic covariance of the stacked array, calibration included."""
    w = mixing_matrix(layout, scene, calib)
    r = (w * np.asarray(scene.powers)[None, :]) @ w.conj().T
    r += scene.noise_var * np.eye(w.shape[0])
    return 0.5 * (r + r.conj().T)


def noise_var_for_snr_db(snr_db: float) -> float:
    """Unit-power-source convention: noise variance 10^(-SNR/10)."""
    return 10.0 ** (-snr_db / 10.0)
