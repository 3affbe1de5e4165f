"""Gaussian-process sensor model with an altitude-dependent Gibbs kernel.

The latent field is "belief that the person is here".  Its prior mean is the
Monte Carlo heatmap rescaled so the most likely cell has value 1.  Every
sensor reading is an observation of that field from a 3D point whose
altitude (above ground) widens the horizontal lengthscale of the kernel and
inflates the observation noise.  Predictions are made on the ground plane at
every cell center.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import InvalidArgument, NumericalFailure
from .lost_person import BeliefGrid
from .morton import morton_sort

JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class GibbsKernelParams:
    sigma_f: float = 1.0
    l0: float = 8.0
    gamma: float = 0.8
    l_vert: float = 10.0
    noise0: float = 1e-3
    noise_alt: float = 2e-5

    def __post_init__(self):
        if not (self.sigma_f > 0 and self.l0 > 0 and self.l_vert > 0 and self.noise0 > 0):
            raise InvalidArgument("sigma_f, l0, l_vert and noise0 must be positive")
        if self.gamma < 0 or self.noise_alt < 0:
            raise InvalidArgument("gamma and noise_alt must be non-negative")

    def lengthscale(self, alt):
        return self.l0 + self.gamma * np.asarray(alt, dtype=float)

    def noise(self, alt):
        alt = np.asarray(alt, dtype=float)
        return self.noise0 + self.noise_alt * alt**2


def kernel_matrix(P, Q, params: GibbsKernelParams):
    """Gibbs covariance between the rows of ``P`` (n, 3) and ``Q`` (m, 3).

    The two horizontal axes share the lengthscale ``l0 + gamma * altitude``;
    the vertical axis uses the constant ``l_vert``, so its normalizing factor
    is 1.
    """
    P = np.asarray(P, dtype=float).reshape(-1, 3)
    Q = np.asarray(Q, dtype=float).reshape(-1, 3)
    lp = params.lengthscale(P[:, 2])[:, None]
    lq = params.lengthscale(Q[:, 2])[None, :]
    s = lp**2 + lq**2
    dx = P[:, 0:1] - Q[:, 0][None, :]
    dy = P[:, 1:2] - Q[:, 1][None, :]
    dz = P[:, 2:3] - Q[:, 2][None, :]
    # product of the two per-axis sqrt(2 lp lq / s) factors
    pref = 2.0 * lp * lq / s
    return params.sigma_f**2 * pref * np.exp(-(dx**2 + dy**2) / s - dz**2 / (2.0 * params.l_vert**2))


def gibbs_kernel(p, q, params: GibbsKernelParams) -> float:
    return float(kernel_matrix(p, q, params)[0, 0])


def half_correlation_radius(alt, params: GibbsKernelParams, tol=1e-10):
    """Horizontal distance at which k between two points at ``alt`` falls to half."""
    p = np.array([0.0, 0.0, alt])
    target = 0.5 * params.sigma_f**2

    def k_at(r):
        return gibbs_kernel(p, np.array([r, 0.0, alt]), params)

    lo, hi = 0.0, float(params.lengthscale(alt))
    while k_at(hi) > target:
        hi *= 2.0
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if k_at(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Observation:
    p: tuple
    value: float = 0.0


@dataclass
class ObservationSet:
    """Observation points (n, 3) with the altitude above ground in column 2."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    values: np.ndarray = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if self.values is None:
            self.values = np.zeros(len(self.points))
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(self.values) != len(self.points):
            raise InvalidArgument("points and values differ in length")
        if np.any(self.points[:, 2] < 0):
            raise InvalidArgument("observation altitude must be non-negative")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        for p, v in zip(self.points, self.values):
            yield Observation(tuple(p), float(v))

    @classmethod
    def from_list(cls, observations):
        obs = list(observations)
        if not obs:
            return cls()
        return cls(np.array([o.p for o in obs], dtype=float), np.array([o.value for o in obs], dtype=float))

    @classmethod
    def concat(cls, *sets):
        sets = [s for s in sets if len(s)]
        if not sets:
            return cls()
        return cls(np.vstack([s.points for s in sets]), np.concatenate([s.values for s in sets]))


def _as_obs(observations):
    if isinstance(observations, ObservationSet):
        return observations
    return ObservationSet.from_list(observations)


def resample_polyline(points, spacing):
    """Points every ``spacing`` meters of arc length, starting at the first vertex."""
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return pts.reshape(0, pts.shape[-1] if pts.ndim == 2 else 2)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.arange(0.0, s[-1] + 1e-9, spacing)
    return np.column_stack([np.interp(targets, s, pts[:, d]) for d in range(pts.shape[1])])


def assemble_observations(searchers, trajectories, sample_spacing, sensor_height_ground) -> ObservationSet:
    """Zero-valued readings along searcher tracks and UAV curves.

    Planning assumes the person has not been found yet, so every reading is
    0.  Searcher tracks are sampled at ``sensor_height_ground``; UAV curves at
    their own altitude above ground.
    """
    if not sample_spacing > 0:
        raise InvalidArgument("sample_spacing must be positive")
    parts = []
    for path in searchers or ():
        pts = path.points if hasattr(path, "points") else np.asarray(path, dtype=float)
        ground = resample_polyline(pts[:, :2], sample_spacing)
        parts.append(np.column_stack([ground, np.full(len(ground), float(sensor_height_ground))]))
    if trajectories is not None:
        for u in range(trajectories.n_uav):
            parts.append(trajectories.resample(u, sample_spacing))
    if not parts:
        return ObservationSet()
    return ObservationSet(np.vstack(parts))


@dataclass(frozen=True)
class MortonConfig:
    """Block-sparse solve settings.

    Observations are Z-ordered and cut into runs of ``block``; covariance
    tiles between runs whose centroids are farther apart than ``cutoff`` are
    dropped.  With ``compensate`` the absolute mass of each row's dropped
    entries moves onto the diagonal, which keeps the system positive definite
    and can only increase predictive variance.
    """

    block: int = 16
    cutoff: float = 100.0
    compensate: bool = True

    def __post_init__(self):
        if self.block < 1:
            raise InvalidArgument("block must be at least 1")
        if not self.cutoff > 0:
            raise InvalidArgument("cutoff must be positive")


@dataclass
class GPPosterior:
    cells: np.ndarray
    mean: np.ndarray
    var: np.ndarray

    def grid(self, shape):
        return self.mean.reshape(shape), self.var.reshape(shape)


def cholesky_jitter(A):
    """Lower Cholesky factor, escalating diagonal jitter until it succeeds."""
    scale = max(float(np.mean(np.diag(A))), 1e-300) if len(A) else 1.0
    for j in JITTERS:
        try:
            M = A if j == 0 else A + j * scale * np.eye(len(A))
            return scipy.linalg.cholesky(M, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
    raise NumericalFailure("covariance is not positive definite", JITTERS)


class ConditionedGP:
    """GP conditioned on a growing set of observations.

    Stores the Cholesky factor of the observation covariance plus the
    whitened cross-covariance to the ground query cells, so that adding a
    batch of observations costs a block extension rather than a refit.
    """

    def __init__(self, prior: BeliefGrid, params: GibbsKernelParams):
        self.prior = prior
        self.params = params
        peak = float(np.max(prior.probs))
        self.kappa = 1.0 / peak if peak > 0 else 0.0
        self.cells = prior.cell_centers()
        self.query = np.column_stack([self.cells, np.zeros(len(self.cells))])
        m = len(self.cells)
        self.X = np.zeros((0, 3))
        self.L = np.zeros((0, 0))
        self.z = np.zeros(0)
        self.AQ = np.zeros((0, m))
        self.mean = self.kappa * prior.probs.ravel().copy()
        self.var = np.full(m, params.sigma_f**2)

    def prior_mean(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        return self.kappa * self.prior.value_at(points[:, :2])

    def _extend(self, obs: ObservationSet):
        U = obs.points
        if len(self.X):
            B = scipy.linalg.solve_triangular(self.L, kernel_matrix(self.X, U, self.params),
                                              lower=True, check_finite=False)
        else:
            B = np.zeros((0, len(U)))
        S = kernel_matrix(U, U, self.params) + np.diag(self.params.noise(U[:, 2])) - B.T @ B
        L22 = cholesky_jitter(S)
        resid = obs.values - self.prior_mean(U) - B.T @ self.z
        z2 = scipy.linalg.solve_triangular(L22, resid, lower=True, check_finite=False)
        C = kernel_matrix(U, self.query, self.params) - B.T @ self.AQ
        AU = scipy.linalg.solve_triangular(L22, C, lower=True, check_finite=False)
        return B, L22, z2, AU

    def predict_with(self, observations):
        """(mean, var) at the query cells after also conditioning on ``observations``."""
        obs = _as_obs(observations)
        if len(obs) == 0:
            return self.mean.copy(), self.var.copy()
        _, _, z2, AU = self._extend(obs)
        return self.mean + AU.T @ z2, self.var - np.einsum("ij,ij->j", AU, AU)

    def conditioned(self, observations) -> "ConditionedGP":
        obs = _as_obs(observations)
        new = object.__new__(ConditionedGP)
        new.__dict__.update(self.__dict__)
        if len(obs) == 0:
            return new
        B, L22, z2, AU = self._extend(obs)
        n, k = len(self.X), len(obs)
        L = np.zeros((n + k, n + k))
        L[:n, :n] = self.L
        L[n:, :n] = B.T
        L[n:, n:] = L22
        new.L = L
        new.X = np.vstack([self.X, obs.points])
        new.z = np.concatenate([self.z, z2])
        new.AQ = np.vstack([self.AQ, AU])
        new.mean = self.mean + AU.T @ z2
        new.var = self.var - np.einsum("ij,ij->j", AU, AU)
        return new

    def posterior(self) -> GPPosterior:
        return GPPosterior(self.cells.copy(), self.mean.copy(), np.maximum(self.var, 0.0))


def posterior(observations, prior: BeliefGrid, params: GibbsKernelParams, sparsify: MortonConfig = None) -> GPPosterior:
    """Predictive mean and variance at every cell center (altitude 0).

    With no observations this returns the scaled heatmap and ``sigma_f**2``.
    """
    if sparsify is not None:
        return sparse_posterior(observations, prior, params, sparsify)
    return ConditionedGP(prior, params).conditioned(observations).posterior()


def sparse_posterior(observations, prior: BeliefGrid, params: GibbsKernelParams, config: MortonConfig) -> GPPosterior:
    obs = _as_obs(observations)
    gp = ConditionedGP(prior, params)
    if len(obs) == 0:
        return gp.posterior()
    lo = obs.points.min(axis=0)
    hi = obs.points.max(axis=0)
    order = morton_sort(obs.points, (lo, hi))
    X = obs.points[order]
    resid = obs.values[order] - gp.prior_mean(X)

    n = len(X)
    labels = np.arange(n) // config.block
    n_blocks = labels[-1] + 1
    centroids = np.array([X[labels == b].mean(axis=0) for b in range(n_blocks)])
    dist = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=-1)
    keep_blocks = dist <= config.cutoff
    np.fill_diagonal(keep_blocks, True)
    keep = keep_blocks[labels[:, None], labels[None, :]]

    K = kernel_matrix(X, X, params)
    A = np.where(keep, K, 0.0)
    A[np.diag_indices(n)] += params.noise(X[:, 2])
    if config.compensate:
        A[np.diag_indices(n)] += np.abs(np.where(keep, 0.0, K)).sum(axis=1)
    else:
        cholesky_jitter(A)  # raises NumericalFailure when truncation broke definiteness

    KXQ = kernel_matrix(X, gp.query, params)
    try:
        lu = scipy.sparse.linalg.splu(scipy.sparse.csc_matrix(A))
        sol_r = lu.solve(resid)
        sol_q = lu.solve(KXQ)
    except RuntimeError as exc:
        raise NumericalFailure(f"block-sparse solve failed: {exc}", JITTERS) from exc
    mean = gp.mean + KXQ.T @ sol_r
    var = params.sigma_f**2 - np.einsum("ij,ij->j", KXQ, sol_q)
    return GPPosterior(gp.cells.copy(), mean, np.maximum(var, 0.0))
