"""Coarray-domain processing: covariance vectorization, spatial smoothing
and noise-subspace extraction."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import SensorSet, difference_coarray

__all__ = [
    "CoarraySignal",
    "SmoothedCovariance",
    "NoiseSubspace",
    "sample_covariance",
    "coarray_vectorize",
    "spatial_smooth",
    "noise_subspace",
]


class CoarrayError(ValueError):
    pass


@dataclass(frozen=True)
class CoarraySignal:
    """Lag-domain signal on the central contiguous coarray segment."""

    lags: tuple[int, ...]
    values: np.ndarray = field(repr=False)
    dropped_lags: int = 0  # lags outside the contiguous segment, discarded

    @property
    def udof(self) -> int:
        return len(self.lags)

    @property
    def half_size(self) -> int:
        """Window length M = (udof + 1) / 2."""
        return (len(self.lags) + 1) // 2


@dataclass(frozen=True)
class SmoothedCovariance:
    matrix: np.ndarray = field(repr=False)
    m: int = 0


@dataclass(frozen=True)
class NoiseSubspace:
    basis: np.ndarray = field(repr=False)
    m: int = 0
    d: int = 0

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def sample_covariance(block: np.ndarray) -> np.ndarray:
    """(1/T) X X^H for an N x T snapshot block."""
    block = np.asarray(block)
    if block.ndim != 2 or block.shape[1] == 0:
        raise CoarrayError("snapshot block must be N x T with T >= 1")
    t = block.shape[1]
    r = block @ block.conj().T / t
    return 0.5 * (r + r.conj().T)


def coarray_vectorize(r_hat: np.ndarray, array: SensorSet) -> CoarraySignal:
    """Average the covariance entries at each lag of the central contiguous
    coarray segment of ``array``."""
    r_hat = np.asarray(r_hat)
    n = len(array)
    if r_hat.shape != (n, n):
        raise CoarrayError(f"covariance must be {n}x{n} for this array")
    profile = difference_coarray(array)
    central = {m for m in profile.central_set if m >= 0}
    sums: dict[int, complex] = {m: 0.0 + 0.0j for m in central}
    pos = array.positions
    for i in range(n):
        for k in range(n):
            m = pos[i] - pos[k]
            if m in central:
                sums[m] += r_hat[i, k]
    # negative lags mirror the positive ones, keeping conjugate symmetry
    # exact; lag 0 of a Hermitian input is real up to rounding residue
    averaged = {m: sums[m] / profile.weight_at(m) for m in central}
    averaged[0] = complex(averaged[0].real)
    values = np.array(
        [
            averaged[m] if m >= 0 else np.conj(averaged[-m])
            for m in profile.central_set
        ],
        dtype=complex,
    )
    return CoarraySignal(
        lags=profile.central_set,
        values=values,
        dropped_lags=profile.dof - profile.udof,
    )


def spatial_smooth(sig: CoarraySignal) -> SmoothedCovariance:
    """Forward spatial smoothing over length-M windows of the lag signal,
    sliding from the positive-lag end toward negative lags."""
    if sig.udof < 3:
        raise CoarrayError("need at least 3 contiguous lags to smooth")
    m = sig.half_size
    x = np.asarray(sig.values)
    acc = np.zeros((m, m), dtype=complex)
    # window i = 1 ends at the maximum lag; entry k of each window carries
    # phase exp(j*pi*k*theta) up to a common factor
    for i in range(1, m + 1):
        win = x[m - i : 2 * m - i]
        acc += np.outer(win, win.conj())
    rss = acc / m
    rss = 0.5 * (rss + rss.conj().T)
    return SmoothedCovariance(matrix=rss, m=m)


def noise_subspace(rss: SmoothedCovariance, d: int) -> NoiseSubspace:
    """Eigenvectors of the M - d smallest eigenvalues, deterministically
    ordered and phase-fixed."""
    m = rss.m
    if d >= m:
        raise CoarrayError(f"cannot separate {d} sources with window size {m}")
    evals, evecs = np.linalg.eigh(rss.matrix)
    trace = float(np.sum(np.clip(evals, 0.0, None))) + np.finfo(float).tiny
    if evals.min() < -1e-10 * max(trace, 1.0):
        warnings.warn("smoothed covariance has a significantly negative eigenvalue")
    order = np.argsort(evals)[::-1]  # descending
    basis = evecs[:, order[d:]]
    # rotate each vector so its first significant entry is real positive
    fixed = basis.copy()
    for k in range(fixed.shape[1]):
        col = fixed[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
        if nz.size:
            phase = col[nz[0]] / np.abs(col[nz[0]])
            fixed[:, k] = col / phase
    return NoiseSubspace(basis=fixed, m=m, d=d)
