"""Estimator correctness on exact-covariance data plus structural invariants
of the fused projections and rooting."""

import numpy as np
import pytest

from conftest import exact_subspaces, ones_calibration
from sparsedoa.coarray import (
    NoiseSubspace,
    coarray_vectorize,
    noise_subspace,
    spatial_smooth,
)
from sparsedoa.estimators import (
    EstimationError,
    InsufficientPeaksError,
    build_global_projection,
    coarray_steering,
    gca_music,
    gca_rmusic,
    ss_music_baseline,
)
from sparsedoa.geometry import SensorSet, SubarrayLayout, generate_mra
from sparsedoa.signal_model import (
    SceneConfig,
    default_calibration,
    exact_subarray_covariance,
    simulate,
)

GRID = 4001


def single_subspace(arr, scene):
    sig = coarray_vectorize(exact_subarray_covariance(arr, scene), arr)
    return noise_subspace(spatial_smooth(sig), scene.num_sources)


def random_subspace(m, d, rng):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, _ = np.linalg.qr(a)
    return NoiseSubspace(basis=q[:, d:], m=m, d=d)


class TestCoarraySteering:
    def test_broadside(self):
        assert np.allclose(coarray_steering(3, 0.0), 1.0)

    def test_alternating(self):
        assert np.allclose(coarray_steering(2, 1.0), [1.0, -1.0])

    def test_quarter_turns(self):
        assert np.allclose(coarray_steering(4, 0.5), [1.0, 1j, -1.0, -1j])


class TestGcaMusic:
    def test_two_sources_exact(self):
        arr = generate_mra(5)
        scene = SceneConfig((-0.4, 0.2), (1.0, 1.0), 0.5, 4)
        result = gca_music([single_subspace(arr, scene)], GRID, 2)
        assert np.max(np.abs(result.estimates - np.array([-0.4, 0.2]))) <= 2.0 / GRID

    def test_single_source_at_zero(self):
        arr = generate_mra(5)
        scene = SceneConfig((0.0,), (1.0,), 0.5, 4)
        result = gca_music([single_subspace(arr, scene)], GRID, 1)
        assert abs(result.estimates[0]) <= 1.0 / GRID

    def test_eleven_sources_exact(self, wide_layout, wide_scene):
        subs = exact_subspaces(wide_layout, wide_scene)
        result = gca_music(subs, GRID, wide_scene.num_sources)
        err = np.max(np.abs(result.estimates - np.array(wide_scene.thetas)))
        assert err <= 2.0 / GRID

    def test_null_spectrum_at_truth(self, wide_layout, wide_scene):
        subs = exact_subspaces(wide_layout, wide_scene)
        for theta in wide_scene.thetas:
            den = sum(
                np.linalg.norm(s.basis.conj().T @ coarray_steering(s.m, theta)) ** 2
                for s in subs
            )
            assert den < 1e-12

    def test_insufficient_peaks(self):
        from sparsedoa.estimators import _pick_peaks

        grid = np.linspace(-1.0, 1.0, 11)
        values = np.arange(11, dtype=float)  # monotone: no interior maximum
        with pytest.raises(InsufficientPeaksError):
            _pick_peaks(grid, values, 1)

    def test_too_many_sources(self):
        rng = np.random.default_rng(0)
        sub = random_subspace(5, 2, rng)
        with pytest.raises(EstimationError):
            gca_music([sub], GRID, 5)

    def test_estimates_are_strict_local_maxima(self, wide_layout, wide_scene):
        subs = exact_subspaces(wide_layout, wide_scene)
        result = gca_music(subs, GRID, wide_scene.num_sources)
        for est in result.estimates:
            i = int(np.argmin(np.abs(result.grid - est)))
            assert result.values[i] > result.values[i - 1]
            assert result.values[i] > result.values[i + 1]


class TestGlobalProjection:
    def test_single_subarray(self):
        rng = np.random.default_rng(1)
        sub = random_subspace(6, 2, rng)
        assert np.allclose(build_global_projection([sub]), sub.projector())

    def test_equal_sizes_sum(self):
        rng = np.random.default_rng(2)
        subs = [random_subspace(6, 2, rng) for _ in range(3)]
        expected = sum(s.projector() for s in subs)
        assert np.allclose(build_global_projection(subs), expected)

    def test_heterogeneous_trailing_embedding(self):
        rng = np.random.default_rng(3)
        big = random_subspace(3, 1, rng)
        small = random_subspace(2, 1, rng)
        total = build_global_projection([big, small])
        # leading row/column receives no contribution from the smaller window
        assert total[0, 0] == pytest.approx(big.projector()[0, 0])
        assert np.allclose(total[1:, 1:], big.projector()[1:, 1:] + small.projector())

    def test_hermitian(self):
        rng = np.random.default_rng(4)
        subs = [random_subspace(7, 3, rng) for _ in range(2)]
        total = build_global_projection(subs)
        assert np.allclose(total, total.conj().T)

    def test_stacked_projector_idempotent(self, wide_layout, wide_scene):
        subs = exact_subspaces(wide_layout, wide_scene)
        blocks = [s.projector() for s in subs]
        n = sum(b.shape[0] for b in blocks)
        stacked = np.zeros((n, n), dtype=complex)
        off = 0
        for b in blocks:
            stacked[off : off + b.shape[0], off : off + b.shape[0]] = b
            off += b.shape[0]
        assert np.linalg.norm(stacked @ stacked - stacked) < 1e-10


class TestGcaRmusic:
    def test_two_sources_exact(self):
        arr = generate_mra(5)
        scene = SceneConfig((-0.4, 0.2), (1.0, 1.0), 0.5, 4)
        result = gca_rmusic([single_subspace(arr, scene)], 2)
        assert not result.deficient
        for theta in scene.thetas:
            target = np.exp(1j * np.pi * theta)
            assert np.min(np.abs(result.selected - target)) < 1e-6

    def test_single_source_root_at_one(self):
        arr = generate_mra(5)
        scene = SceneConfig((0.0,), (1.0,), 0.5, 4)
        result = gca_rmusic([single_subspace(arr, scene)], 1)
        assert abs(result.selected[0] - 1.0) < 1e-8

    def test_eleven_sources_exact(self, wide_layout, wide_scene):
        subs = exact_subspaces(wide_layout, wide_scene)
        result = gca_rmusic(subs, wide_scene.num_sources)
        assert np.max(np.abs(result.estimates - np.array(wide_scene.thetas))) < 1e-6
        for theta in wide_scene.thetas:
            target = np.exp(1j * np.pi * theta)
            assert np.min(np.abs(result.selected - target)) < 1e-6

    def test_selected_roots_inside(self, wide_layout, wide_scene):
        subs = exact_subspaces(wide_layout, wide_scene)
        result = gca_rmusic(subs, wide_scene.num_sources)
        assert np.all(np.abs(result.selected) <= 1.0 + 1e-9)

    def test_conjugate_reciprocal_pairing(self):
        rng = np.random.default_rng(5)
        subs = [random_subspace(6, 2, rng) for _ in range(2)]
        result = gca_rmusic(subs, 2)
        for z in result.roots_all:
            partner = 1.0 / np.conj(z)
            assert np.min(np.abs(result.roots_all - partner)) < 1e-6

    def test_polynomial_matches_spectrum(self, wide_layout, wide_scene):
        """On the unit circle the rooted polynomial value equals the
        grid-search denominator."""
        subs = exact_subspaces(wide_layout, wide_scene)
        p_tilde = build_global_projection(subs)
        m = p_tilde.shape[0]
        coeffs = np.array(
            [np.trace(p_tilde, offset=k) for k in range(-(m - 1), m)]
        )
        rng = np.random.default_rng(6)
        for theta in rng.uniform(-1.0, 1.0, size=100):
            z = np.exp(1j * np.pi * theta)
            q = np.sum(coeffs * z ** np.arange(-(m - 1), m))
            den = sum(
                np.linalg.norm(s.basis.conj().T @ coarray_steering(s.m, theta)) ** 2
                for s in subs
            )
            assert abs(q - den) < 1e-10

    def test_invariant_under_subspace_rebasing(self, wide_layout, wide_scene):
        subs = exact_subspaces(wide_layout, wide_scene)
        rng = np.random.default_rng(7)
        rotated = []
        for s in subs:
            k = s.basis.shape[1]
            a = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
            q, _ = np.linalg.qr(a)
            rotated.append(NoiseSubspace(basis=s.basis @ q, m=s.m, d=s.d))
        a = gca_rmusic(subs, wide_scene.num_sources)
        b = gca_rmusic(rotated, wide_scene.num_sources)
        assert np.max(np.abs(a.estimates - b.estimates)) < 1e-7

    def test_too_many_sources(self):
        rng = np.random.default_rng(8)
        with pytest.raises(EstimationError):
            gca_rmusic([random_subspace(4, 1, rng)], 4)


class TestSsMusicBaseline:
    def test_matches_single_subarray_music(self):
        arr = generate_mra(6)
        layout = SubarrayLayout((arr,))
        scene = SceneConfig((-0.3, 0.1, 0.5), (1.0, 1.0, 1.0), 0.7, 512, seed=2)
        data = simulate(layout, scene, ones_calibration(1, 3))
        baseline = ss_music_baseline(data, layout, GRID, 3)
        from sparsedoa.coarray import sample_covariance

        sig = coarray_vectorize(sample_covariance(data.blocks[0]), arr)
        direct = gca_music([noise_subspace(spatial_smooth(sig), 3)], GRID, 3)
        assert np.max(np.abs(baseline.values - direct.values)) < 1e-12
        assert np.array_equal(baseline.estimates, direct.estimates)

    def test_eleven_sources_exact_covariance(self, wide_layout, wide_scene):
        from sparsedoa.signal_model import exact_full_covariance

        calib = default_calibration(wide_layout, wide_scene.thetas)
        r = exact_full_covariance(wide_layout, wide_scene, calib)
        full = wide_layout.full_array
        sig = coarray_vectorize(r, full)
        sub = noise_subspace(spatial_smooth(sig), wide_scene.num_sources)
        result = gca_music([sub], GRID, wide_scene.num_sources)
        err = np.max(np.abs(result.estimates - np.array(wide_scene.thetas)))
        assert err <= 2.0 / GRID

    def test_identifiability_limit(self):
        arr = SensorSet((0, 1, 2))  # udof 5, at most 2 sources
        layout = SubarrayLayout((arr,))
        scene = SceneConfig((-0.3, 0.1, 0.5), (1.0,) * 3, 0.5, 64, seed=3)
        data = simulate(layout, scene, ones_calibration(1, 3))
        from sparsedoa.coarray import CoarrayError

        with pytest.raises((EstimationError, CoarrayError)):
            ss_music_baseline(data, layout, GRID, 3)


class TestUnderdeterminedScenario:
    def test_more_sources_than_sensors(self, wide_layout, wide_scene):
        """Eleven sources resolved by seven-sensor subarrays on exact data."""
        assert wide_scene.num_sources > len(wide_layout.subarrays[0])
        subs = exact_subspaces(wide_layout, wide_scene)
        music = gca_music(subs, GRID, wide_scene.num_sources)
        rmusic = gca_rmusic(subs, wide_scene.num_sources)
        truth = np.array(wide_scene.thetas)
        assert np.max(np.abs(music.estimates - truth)) <= 2.0 / GRID
        assert np.max(np.abs(rmusic.estimates - truth)) < 1e-6
