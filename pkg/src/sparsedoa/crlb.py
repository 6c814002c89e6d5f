"""Fisher information and Cramer-Rao bounds for the partially-calibrated
uncorrelated-sources model.

The parameter vector is [thetas, powers, noise_var, nu_2..nu_L, eta_2..eta_L],
where nu/eta are the real and imaginary parts of the inter-subarray
calibration phases (subarray 1 is the reference and carries none).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import SensorSet, SubarrayLayout
from .signal_model import CalibrationSet, SceneConfig, mixing_matrix

__all__ = [
    "FimMatrix",
    "CrlbResult",
    "CrlbError",
    "model_matrices",
    "derivative_wrt_theta",
    "derivative_wrt_power",
    "derivative_wrt_noise",
    "derivative_wrt_nu",
    "derivative_wrt_eta",
    "assemble_fim",
    "crlb_theta",
    "crlb_fc_up",
]

_IMAG_RESIDUE_TOL = 1e-10


class CrlbError(RuntimeError):
    pass


@dataclass(frozen=True)
class FimMatrix:
    matrix: np.ndarray = field(repr=False)
    num_sources: int = 0
    num_subarrays: int = 0

    @property
    def theta_slice(self) -> slice:
        return slice(0, self.num_sources)

    def block(self, name: str) -> np.ndarray:
        """Named block access; names like 'theta,p', 'nu2,eta3', 'sigma,sigma'."""
        d, l = self.num_sources, self.num_subarrays
        spans = {"theta": slice(0, d), "p": slice(d, 2 * d), "sigma": slice(2 * d, 2 * d + 1)}
        off = 2 * d + 1
        for k in range(2, l + 1):
            spans[f"nu{k}"] = slice(off, off + d)
            off += d
        for k in range(2, l + 1):
            spans[f"eta{k}"] = slice(off, off + d)
            off += d
        a, b = name.split(",")
        return self.matrix[spans[a], spans[b]]


@dataclass(frozen=True)
class CrlbResult:
    theta_bound: np.ndarray = field(repr=False)

    @property
    def per_source_std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.theta_bound))


@dataclass(frozen=True)
class ModelState:
    """Precomputed quantities shared by every derivative and FIM block."""

    layout: SubarrayLayout
    scene: SceneConfig
    calib: CalibrationSet
    w: np.ndarray = field(repr=False)  # N x D mixing matrix
    d_mat: np.ndarray = field(repr=False)  # columnwise theta-derivative of w
    a_mat: np.ndarray = field(repr=False)  # stacked local manifolds, no calibration
    r: np.ndarray = field(repr=False)  # N x N covariance
    r_inv: np.ndarray = field(repr=False)
    block_rows: tuple[slice, ...] = ()

    @property
    def rs(self) -> np.ndarray:
        return np.diag(self.scene.powers)


def model_matrices(
    layout: SubarrayLayout,
    scene: SceneConfig,
    calib: CalibrationSet,
    geometric_calibration: bool = True,
) -> ModelState:
    """Build the mixing matrix, its direction derivative and the covariance.

    With ``geometric_calibration`` the calibration phases are treated as the
    deterministic function of direction induced by the subarray translations
    (type-II layouts), so the direction derivative includes their variation;
    otherwise the calibration is held constant.
    """
    thetas = np.asarray(scene.thetas)
    powers = np.asarray(scene.powers)
    w = mixing_matrix(layout, scene, calib)
    n = w.shape[0]

    blocks = []
    start = 0
    for sub in layout.subarrays:
        blocks.append(slice(start, start + len(sub)))
        start += len(sub)

    # local sensor offsets per row, and per-row subarray index
    local = np.concatenate(
        [np.asarray(sub.positions, float) - sub.positions[0] for sub in layout.subarrays]
    )
    a_mat = np.exp(1j * np.pi * np.outer(local, thetas))

    phase_rate = np.zeros((n, len(thetas)))  # d(phase)/d(theta) per entry / (j*pi)
    phase_rate += local[:, None]
    if geometric_calibration:
        if layout.mu is None:
            raise CrlbError("geometric calibration derivative needs a type-II layout")
        delta = layout.mu + layout.subarrays[0].aperture
        for l, sl in enumerate(blocks):
            phase_rate[sl, :] += l * delta
    d_mat = 1j * np.pi * phase_rate * w

    r = (w * powers[None, :]) @ w.conj().T + scene.noise_var * np.eye(n)
    r = 0.5 * (r + r.conj().T)
    if scene.noise_var <= 0:
        raise CrlbError("covariance is singular without noise")
    r_inv = np.linalg.inv(r)
    return ModelState(
        layout=layout,
        scene=scene,
        calib=calib,
        w=w,
        d_mat=d_mat,
        a_mat=a_mat,
        r=r,
        r_inv=r_inv,
        block_rows=tuple(blocks),
    )


def _check_source(state: ModelState, i: int) -> None:
    if not 0 <= i < state.scene.num_sources:
        raise IndexError(f"source index {i} out of range")


def _check_subarray(state: ModelState, l: int) -> None:
    if not 2 <= l <= state.layout.num_subarrays:
        raise IndexError("calibration derivatives exist for subarrays 2..L only")


def derivative_wrt_theta(state: ModelState, i: int) -> np.ndarray:
    """d(covariance)/d(theta_i): rank-two Hermitian update."""
    _check_source(state, i)
    p_i = state.scene.powers[i]
    d_i = state.d_mat[:, i]
    w_i = state.w[:, i]
    out = p_i * (np.outer(d_i, w_i.conj()) + np.outer(w_i, d_i.conj()))
    return out


def derivative_wrt_power(state: ModelState, i: int) -> np.ndarray:
    _check_source(state, i)
    w_i = state.w[:, i]
    return np.outer(w_i, w_i.conj())


def derivative_wrt_noise(state: ModelState) -> np.ndarray:
    return np.eye(state.w.shape[0], dtype=complex)


def _masked_column(state: ModelState, l: int, i: int) -> np.ndarray:
    """Column i of the uncalibrated manifold, zeroed outside subarray l's rows."""
    g = np.zeros_like(state.a_mat[:, i])
    sl = state.block_rows[l - 1]
    g[sl] = state.a_mat[sl, i]
    return g


def derivative_wrt_nu(state: ModelState, l: int, i: int) -> np.ndarray:
    """Derivative in the real part of calibration phase h_{l,i}."""
    _check_source(state, i)
    _check_subarray(state, l)
    p_i = state.scene.powers[i]
    g = _masked_column(state, l, i)
    w_i = state.w[:, i]
    return p_i * (np.outer(g, w_i.conj()) + np.outer(w_i, g.conj()))


def derivative_wrt_eta(state: ModelState, l: int, i: int) -> np.ndarray:
    """Derivative in the imaginary part of calibration phase h_{l,i}."""
    _check_source(state, i)
    _check_subarray(state, l)
    p_i = state.scene.powers[i]
    g = _masked_column(state, l, i)
    w_i = state.w[:, i]
    return 1j * p_i * (np.outer(g, w_i.conj()) - np.outer(w_i, g.conj()))


def _real_block(block: np.ndarray, name: str) -> np.ndarray:
    resid = np.max(np.abs(block.imag)) if block.size else 0.0
    scale = max(np.max(np.abs(block)), 1.0)
    if resid > _IMAG_RESIDUE_TOL * scale:
        raise CrlbError(f"FIM block {name} has non-negligible imaginary residue {resid:g}")
    return np.ascontiguousarray(block.real)


def assemble_fim(
    layout: SubarrayLayout,
    scene: SceneConfig,
    calib: CalibrationSet,
    t: int,
    geometric_calibration: bool = True,
) -> FimMatrix:
    """Assemble the full Fisher information matrix from closed-form blocks.

    Every block is a Hadamard-product expression in a handful of shared
    N x N / N x D products; the generic trace formula is kept as a test
    oracle only.
    """
    state = model_matrices(layout, scene, calib, geometric_calibration)
    d = scene.num_sources
    nl = layout.num_subarrays
    rs = state.rs
    r_inv = state.r_inv
    w, dm, a = state.w, state.d_mat, state.a_mat

    def masked(l: int) -> np.ndarray:
        out = np.zeros_like(a)
        sl = state.block_rows[l - 1]
        out[sl, :] = a[sl, :]
        return out

    riw = r_inv @ w
    rid = r_inv @ dm
    ri2 = r_inv @ r_inv
    rswh_ri = rs @ w.conj().T @ r_inv  # D x N
    rswh_rid = rswh_ri @ dm
    rswh_riw_rs = rswh_ri @ w @ rs
    whriw = w.conj().T @ riw
    whrid = w.conj().T @ rid
    dhrid = dm.conj().T @ rid
    dhriw_rs = dm.conj().T @ riw @ rs
    rswh_ri2 = rs @ w.conj().T @ ri2

    ga = {l: masked(l) for l in range(2, nl + 1)}
    ri_ga = {l: r_inv @ ga[l] for l in range(2, nl + 1)}

    dim = 2 * d + 1 + 2 * (nl - 1) * d
    fim = np.zeros((dim, dim))
    sl_theta = slice(0, d)
    sl_p = slice(d, 2 * d)
    i_sig = 2 * d
    sl_nu = {l: slice(2 * d + 1 + (l - 2) * d, 2 * d + 1 + (l - 1) * d) for l in range(2, nl + 1)}
    off_eta = 2 * d + 1 + (nl - 1) * d
    sl_eta = {l: slice(off_eta + (l - 2) * d, off_eta + (l - 1) * d) for l in range(2, nl + 1)}

    fim[sl_theta, sl_theta] = 2 * t * (
        (rswh_rid * rswh_rid.T) + (rswh_riw_rs * dhrid.T)
    ).real
    fim[sl_p, sl_p] = _real_block(t * (whriw * whriw.T), "pp")
    fim[i_sig, i_sig] = t * np.trace(ri2).real
    fim[sl_theta, sl_p] = 2 * t * ((rs @ whriw) * whrid.T).real
    fim[sl_p, sl_theta] = fim[sl_theta, sl_p].T
    fim[sl_theta, i_sig] = 2 * t * np.diag(rswh_ri2 @ dm).real
    fim[i_sig, sl_theta] = fim[sl_theta, i_sig]
    fim[sl_p, i_sig] = _real_block(t * np.diag(w.conj().T @ ri2 @ w), "p,sigma")
    fim[i_sig, sl_p] = fim[sl_p, i_sig]

    for l in range(2, nl + 1):
        rswh_ri_gl = rswh_ri @ ga[l]
        # theta-nu and theta-eta share the same four Hadamard terms
        t1 = rswh_ri_gl * rswh_rid.T
        t2 = rswh_riw_rs * (ga[l].conj().T @ rid).T
        t3 = (dm.conj().T @ ri_ga[l]) * rswh_riw_rs.T
        t4 = dhriw_rs * (ga[l].conj().T @ riw @ rs).T
        fim[sl_theta, sl_nu[l]] = _real_block(t * (t1 + t2 + t3 + t4), f"theta,nu{l}")
        fim[sl_nu[l], sl_theta] = fim[sl_theta, sl_nu[l]].T
        blk = 1j * t * (t1 - t2 + t3 - t4)
        fim[sl_theta, sl_eta[l]] = _real_block(blk, f"theta,eta{l}")
        fim[sl_eta[l], sl_theta] = fim[sl_theta, sl_eta[l]].T

        fim[sl_p, sl_nu[l]] = 2 * t * ((w.conj().T @ ri_ga[l]) * (rs @ whriw).T).real
        fim[sl_nu[l], sl_p] = fim[sl_p, sl_nu[l]].T
        fim[sl_p, sl_eta[l]] = -2 * t * ((w.conj().T @ ri_ga[l]) * (rs @ whriw).T).imag
        fim[sl_eta[l], sl_p] = fim[sl_p, sl_eta[l]].T

        diag_l = np.diag(rswh_ri2 @ ga[l])
        fim[i_sig, sl_nu[l]] = 2 * t * diag_l.real
        fim[sl_nu[l], i_sig] = fim[i_sig, sl_nu[l]]
        fim[i_sig, sl_eta[l]] = -2 * t * diag_l.imag
        fim[sl_eta[l], i_sig] = fim[i_sig, sl_eta[l]]

    for l in range(2, nl + 1):
        for k in range(2, nl + 1):
            u1 = (rswh_ri @ ga[k]) * (rswh_ri @ ga[l]).T
            u2 = rswh_riw_rs * (ga[k].conj().T @ ri_ga[l]).T
            fim[sl_nu[l], sl_nu[k]] = 2 * t * (u1 + u2).real
            fim[sl_eta[l], sl_eta[k]] = -2 * t * (u1 - u2).real
            cross = (ga[l].conj().T @ ri_ga[k]) * rswh_riw_rs.T
            fim[sl_nu[l], sl_eta[k]] = -2 * t * (u1 + cross).imag
            fim[sl_eta[k], sl_nu[l]] = fim[sl_nu[l], sl_eta[k]].T

    fim = 0.5 * (fim + fim.T)
    return FimMatrix(matrix=fim, num_sources=d, num_subarrays=nl)


def _thresholded_pinv(mat: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    evals, evecs = np.linalg.eigh(0.5 * (mat + mat.T))
    cutoff = rel_tol * max(np.max(np.abs(evals)), np.finfo(float).tiny)
    inv = np.where(np.abs(evals) > cutoff, 1.0 / evals, 0.0)
    return (evecs * inv[None, :]) @ evecs.T


def crlb_theta(fim: FimMatrix) -> CrlbResult:
    """Direction bound via the Schur complement on the nuisance block."""
    d = fim.num_sources
    m = fim.matrix
    f11 = m[:d, :d]
    f12 = m[:d, d:]
    f22 = m[d:, d:]
    schur = f11 - f12 @ _thresholded_pinv(f22) @ f12.T
    schur = 0.5 * (schur + schur.T)
    cond = np.linalg.cond(schur)
    if not np.isfinite(cond) or cond > 1e12:
        raise CrlbError(f"direction information is numerically singular (cond={cond:.3g})")
    bound = np.linalg.inv(schur)
    bound = 0.5 * (bound + bound.T)
    return CrlbResult(theta_bound=bound)


def crlb_fc_up(full_array: SensorSet, scene: SceneConfig, t: int) -> CrlbResult:
    """Fully-calibrated uncorrelated-prior bound: single subarray, no
    calibration parameters."""
    layout = SubarrayLayout(subarrays=(full_array,), kind="custom", mu=None)
    calib = CalibrationSet(np.ones((1, scene.num_sources), dtype=complex))
    fim = assemble_fim(layout, scene, calib, t, geometric_calibration=False)
    return crlb_theta(fim)
