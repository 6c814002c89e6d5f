"""Subspace DOA estimators on the smoothed coarray: grid-search and
polynomial-rooting variants that fuse per-subarray noise subspaces, plus the
fully-calibrated smoothing baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coarray import (
    NoiseSubspace,
    coarray_vectorize,
    noise_subspace,
    sample_covariance,
    spatial_smooth,
)
from .geometry import SubarrayLayout
from .signal_model import SnapshotData

__all__ = [
    "SpectrumResult",
    "RootResult",
    "EstimationError",
    "InsufficientPeaksError",
    "coarray_steering",
    "gca_music",
    "build_global_projection",
    "gca_rmusic",
    "ss_music_baseline",
]


class EstimationError(RuntimeError):
    pass


class InsufficientPeaksError(EstimationError):
    """Fewer local maxima than sources: the trial failed to resolve."""


@dataclass(frozen=True)
class SpectrumResult:
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    estimates: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class RootResult:
    roots_all: np.ndarray = field(repr=False)
    selected: np.ndarray = field(repr=False)
    estimates: np.ndarray = field(repr=False)
    deficient: bool = False  # fewer than d roots inside the unit circle


def coarray_steering(m: int, theta: float) -> np.ndarray:
    """Virtual-ULA steering vector [1, e^{j pi theta}, ..., e^{j pi (m-1) theta}]."""
    if m < 1:
        raise ValueError("steering vector length must be positive")
    return np.exp(1j * np.pi * theta * np.arange(m))


def _spectrum_grid(grid_size: int) -> np.ndarray:
    """Uniform grid over (-1, 1]."""
    g = int(grid_size)
    if g < 3:
        raise ValueError("grid must have at least 3 points")
    return -1.0 + 2.0 * np.arange(1, g + 1) / g


def _denominator(subspaces: Sequence[NoiseSubspace], grid: np.ndarray) -> np.ndarray:
    """Sum over subarrays of the squared projection of the virtual-ULA
    steering vector onto each noise subspace."""
    den = np.zeros(grid.size)
    for sub in subspaces:
        k = np.arange(sub.m)
        steer = np.exp(1j * np.pi * np.outer(k, grid))  # m x g
        proj = sub.basis.conj().T @ steer  # (m-d) x g
        den += np.sum(np.abs(proj) ** 2, axis=0)
    return den


def _pick_peaks(grid: np.ndarray, values: np.ndarray, d: int) -> np.ndarray:
    # strict rise on the left, non-strict fall on the right, so a plateau of
    # equal values (a symmetric peak split across two grid points) counts once
    inner = values[1:-1]
    is_peak = (inner > values[:-2]) & (inner >= values[2:])
    idx = np.flatnonzero(is_peak) + 1
    if idx.size < d:
        raise InsufficientPeaksError(
            f"found {idx.size} spectrum peaks but need {d}"
        )
    top = idx[np.argsort(values[idx])[::-1][:d]]
    return np.sort(grid[top])


def gca_music(
    subspaces: Sequence[NoiseSubspace], grid_size: int, d: int
) -> SpectrumResult:
    """Grid-search estimator fusing the noise subspaces of every subarray."""
    if not subspaces:
        raise EstimationError("need at least one noise subspace")
    if d > min(s.m - 1 for s in subspaces):
        raise EstimationError("more sources than the smallest window supports")
    grid = _spectrum_grid(grid_size)
    den = _denominator(subspaces, grid)
    values = 1.0 / np.maximum(den, np.finfo(float).tiny)
    estimates = _pick_peaks(grid, values, d)
    return SpectrumResult(grid=grid, values=values, estimates=estimates)


def build_global_projection(subspaces: Sequence[NoiseSubspace]) -> np.ndarray:
    """Sum of the per-subarray noise projectors, smaller ones embedded in the
    trailing principal block of the largest window size."""
    if not subspaces:
        raise EstimationError("need at least one noise subspace")
    m_max = max(s.m for s in subspaces)
    total = np.zeros((m_max, m_max), dtype=complex)
    for sub in subspaces:
        off = m_max - sub.m
        total[off:, off:] += sub.projector()
    return 0.5 * (total + total.conj().T)


_MERGE_TOL = 1e-5  # normalized-angle gap below which roots count as one zero


def _select_distinct(pool: np.ndarray, d: int) -> np.ndarray:
    """Pick the d roots closest to the unit circle, merging near-coincident
    angles.  A double zero on the circle splits numerically into two roots a
    few ulps apart; without merging, both copies would crowd out another
    true direction."""
    order = np.argsort(np.abs(1.0 - np.abs(pool)))
    selected: list[complex] = []
    skipped: list[complex] = []
    for z in pool[order]:
        ang = np.angle(z) / np.pi
        gaps = [min(abs(ang - np.angle(s) / np.pi) % 2.0,
                    2.0 - abs(ang - np.angle(s) / np.pi) % 2.0)
                for s in selected]
        if any(gap < _MERGE_TOL for gap in gaps):
            skipped.append(z)
            continue
        selected.append(z)
        if len(selected) == d:
            break
    # pathological fallback: genuinely coincident zeros
    for z in skipped:
        if len(selected) == d:
            break
        selected.append(z)
    return np.array(selected[:d])


def gca_rmusic(subspaces: Sequence[NoiseSubspace], d: int) -> RootResult:
    """Rooting estimator: roots of the fused noise-projection polynomial,
    keeping the d roots inside and closest to the unit circle."""
    if not subspaces:
        raise EstimationError("need at least one noise subspace")
    p_tilde = build_global_projection(subspaces)
    m = p_tilde.shape[0]
    if d > m - 1:
        raise EstimationError("more sources than the polynomial degree supports")
    # coefficient of z^k is the k-th superdiagonal sum, k = -(m-1)..m-1
    coeffs = np.array(
        [np.trace(p_tilde, offset=k) for k in range(-(m - 1), m)], dtype=complex
    )
    roots = np.roots(coeffs[::-1])  # np.roots wants descending powers
    inside = roots[np.abs(roots) <= 1.0 + 1e-9]
    deficient = inside.size < d
    pool = roots if deficient else inside
    selected = _select_distinct(pool, d)
    estimates = np.sort(np.angle(selected) / np.pi)
    return RootResult(
        roots_all=roots, selected=selected, estimates=estimates, deficient=deficient
    )


def ss_music_baseline(
    full_data: SnapshotData,
    layout: SubarrayLayout,
    grid_size: int,
    d: int,
) -> SpectrumResult:
    """Coarray MUSIC on the full calibrated array: smoothing over the central
    contiguous coarray of the union of all subarrays."""
    full_array = layout.full_array
    r_hat = sample_covariance(full_data.stacked())
    sig = coarray_vectorize(r_hat, full_array)
    rss = spatial_smooth(sig)
    sub = noise_subspace(rss, d)
    return gca_music([sub], grid_size, d)
