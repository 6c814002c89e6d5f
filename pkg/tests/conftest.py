"""Shared fixtures: the wide eleven-source benchmark scene and its layout."""

import numpy as np
import pytest

from sparsedoa.coarray import coarray_vectorize, noise_subspace, spatial_smooth
from sparsedoa.geometry import SubarrayLayout, build_type2, generate_mra
from sparsedoa.signal_model import (
    CalibrationSet,
    SceneConfig,
    exact_subarray_covariance,
)

ELEVEN_THETAS = tuple(np.round(np.linspace(-0.75, 0.75, 11), 12))


@pytest.fixture(scope="session")
def wide_layout() -> SubarrayLayout:
    """Two translated copies of the 7-sensor MRA, spacing mu = 8."""
    return build_type2(generate_mra(7), 2, 8)


@pytest.fixture(scope="session")
def wide_scene() -> SceneConfig:
    return SceneConfig(
        thetas=ELEVEN_THETAS,
        powers=(1.0,) * 11,
        noise_var=1.0,
        snapshots=2000,
        seed=0,
    )


def exact_subspaces(layout, scene):
    """Per-subarray noise subspaces from exact (asymptotic) covariances.

    White noise only shifts the smoothed-covariance spectrum, so the exact
    noise subspace is recovered even at finite noise power.
    """
    subs = []
    for sub in layout.subarrays:
        r = exact_subarray_covariance(sub, scene)
        sig = coarray_vectorize(r, sub)
        subs.append(noise_subspace(spatial_smooth(sig), scene.num_sources))
    return subs


def ones_calibration(num_subarrays: int, num_sources: int) -> CalibrationSet:
    return CalibrationSet(np.ones((num_subarrays, num_sources), dtype=complex))
