import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import gibbs_oracle, textbook_gp
from sarplan.errors import InvalidArgument, NumericalFailure
from sarplan.gp import (ConditionedGP, GibbsKernelParams, MortonConfig, Observation, ObservationSet,
                        assemble_observations, cholesky_jitter, gibbs_kernel, half_correlation_radius,
                        kernel_matrix, posterior, resample_polyline, sparse_posterior)
from sarplan.lost_person import BeliefGrid
from sarplan.searcher import SearcherPath
from sarplan.trajectory import TrajectorySet


def random_prior(seed, shape=(15, 15), cell=10.0):
    rng = np.random.default_rng(seed)
    p = rng.gamma(2.0, size=shape)
    return BeliefGrid((0, 0), cell, p / p.sum())


def random_obs(seed, n, extent=150.0, max_alt=40.0):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(0, extent, (n, 2)), rng.uniform(0, max_alt, n)])
    return ObservationSet(pts)


def oracle_posterior(obs, prior, kp):
    gp = ConditionedGP(prior, kp)
    return textbook_gp(obs.points, gp.cells, gp.prior_mean(obs.points), gp.mean, kp, obs.values)


points3 = st.tuples(st.floats(-200, 200), st.floats(-200, 200), st.floats(0, 80))


@given(points3, points3)
def test_kernel_symmetric_and_matches_oracle(p, q):
    kp = GibbsKernelParams()
    assert gibbs_kernel(p, q, kp) == pytest.approx(gibbs_kernel(q, p, kp), rel=1e-14, abs=1e-300)
    assert gibbs_kernel(p, q, kp) == pytest.approx(gibbs_oracle(p, q, 1.0, 8.0, 0.8, 10.0), rel=1e-12, abs=1e-300)


@given(points3, st.floats(0.1, 5.0))
def test_kernel_diagonal_is_signal_variance(p, sigma):
    kp = GibbsKernelParams(sigma_f=sigma)
    assert gibbs_kernel(p, p, kp) == pytest.approx(sigma**2, rel=1e-14)


def test_gamma_zero_reduces_to_rbf():
    kp = GibbsKernelParams(gamma=0.0, l0=12.0, l_vert=12.0, sigma_f=1.7)
    rng = np.random.default_rng(3)
    P = rng.uniform([-100, -100, 0], [100, 100, 50], (1000, 3))
    Q = rng.uniform([-100, -100, 0], [100, 100, 50], (1000, 3))
    k = np.array([gibbs_kernel(p, q, kp) for p, q in zip(P, Q)])
    rbf = 1.7**2 * np.exp(-np.sum((P - Q) ** 2, axis=1) / (2 * 12.0**2))
    assert np.max(np.abs(k - rbf)) < 1e-12


def test_footprint_widens_with_altitude():
    kp = GibbsKernelParams()
    r10 = half_correlation_radius(10.0, kp)
    r30 = half_correlation_radius(30.0, kp)
    assert r30 > r10
    assert gibbs_kernel([0, 0, 10], [r10, 0, 10], kp) == pytest.approx(0.5, abs=1e-9)


@given(st.floats(0, 60), st.floats(0, 60))
def test_footprint_monotone_in_altitude(a, b):
    kp = GibbsKernelParams()
    lo, hi = sorted((a, b))
    assert half_correlation_radius(hi, kp) >= half_correlation_radius(lo, kp) - 1e-9


def test_param_invariants():
    for bad in (dict(sigma_f=0), dict(l0=0), dict(gamma=-1), dict(l_vert=0), dict(noise0=0), dict(noise_alt=-1)):
        with pytest.raises(InvalidArgument):
            GibbsKernelParams(**bad)


def test_assemble_empty():
    obs = assemble_observations([], None, 10.0, 2.0)
    assert len(obs) == 0


def test_assemble_searcher_spacing():
    path = SearcherPath(t=np.array([0.0, 100.0]), points=np.array([[0.0, 0.0], [100.0, 0.0]]),
                        modes=["waypoint"] * 2)
    obs = assemble_observations([path], None, 10.0, 2.0)
    assert len(obs) == 11
    assert np.all(obs.points[:, 2] == 2.0)
    assert np.all(obs.values == 0)


def test_assemble_uav_at_constant_altitude():
    ctrl = np.column_stack([np.linspace(0, 120, 7), np.linspace(0, 30, 7), np.full(7, 15.0)])
    traj = TrajectorySet(ctrl[None], alt_bounds=(5, 60))
    obs = assemble_observations([], traj, 10.0, 2.0)
    assert len(obs) > 5
    assert np.allclose(obs.points[:, 2], 15.0, atol=1e-6)


def test_assemble_rejects_bad_spacing():
    with pytest.raises(InvalidArgument):
        assemble_observations([], None, 0.0, 2.0)


def test_resample_polyline_spacing():
    pts = resample_polyline(np.array([[0.0, 0.0], [30.0, 0.0], [30.0, 40.0]]), 7.0)
    assert len(pts) == 11
    assert np.allclose(pts[1], [7.0, 0.0]) and np.allclose(pts[5], [30.0, 5.0])


def test_observation_set_roundtrip_and_validation():
    obs = ObservationSet.from_list([Observation((1.0, 2.0, 3.0), 0.5), Observation((4.0, 5.0, 6.0))])
    assert np.allclose(obs.values, [0.5, 0.0])
    assert [o.p for o in obs] == [(1.0, 2.0, 3.0), (4.0, 5.0, 6.0)]
    with pytest.raises(InvalidArgument):
        ObservationSet(np.array([[0.0, 0.0, -1.0]]))


def test_no_observations_returns_prior():
    prior = random_prior(0)
    kp = GibbsKernelParams(sigma_f=1.3)
    post = posterior(ObservationSet(), prior, kp)
    kappa = 1 / prior.probs.max()
    assert np.array_equal(post.mean, kappa * prior.probs.ravel())
    assert np.all(post.var == 1.3**2)


def test_near_noiseless_zero_observation_at_cell_center():
    prior = random_prior(1)
    kp = GibbsKernelParams(noise0=1e-12, noise_alt=0.0)
    cells = prior.cell_centers()
    k = int(np.argmax(prior.probs.ravel()))
    obs = ObservationSet(np.array([[*cells[k], 0.0]]))
    post = posterior(obs, prior, kp)
    assert abs(post.mean[k]) < 1e-5
    assert post.var[k] < 1e-5


def test_matches_textbook_oracle_fifty_observations():
    prior = random_prior(2)
    obs = random_obs(3, 50)
    kp = GibbsKernelParams()
    post = posterior(obs, prior, kp)
    m, v = oracle_posterior(obs, prior, kp)
    assert np.max(np.abs(post.mean - m) / np.maximum(np.abs(m), 1e-12)) < 1e-8
    assert np.max(np.abs(post.var - v) / np.maximum(np.abs(v), 1e-12)) < 1e-8


def test_nonzero_readings_match_oracle():
    prior = random_prior(4)
    rng = np.random.default_rng(5)
    obs = random_obs(6, 30)
    obs = ObservationSet(obs.points, rng.uniform(0, 1, len(obs)))
    kp = GibbsKernelParams()
    post = posterior(obs, prior, kp)
    m, v = oracle_posterior(obs, prior, kp)
    assert np.allclose(post.mean, m, rtol=1e-8, atol=1e-12)
    assert np.allclose(post.var, v, rtol=1e-8, atol=1e-12)


def test_incremental_conditioning_equals_batch():
    prior = random_prior(7)
    kp = GibbsKernelParams()
    a, b = random_obs(8, 20), random_obs(9, 25)
    batch = posterior(ObservationSet.concat(a, b), prior, kp)
    gp = ConditionedGP(prior, kp).conditioned(a)
    mean, var = gp.predict_with(b)
    assert np.allclose(mean, batch.mean, rtol=1e-9, atol=1e-12)
    assert np.allclose(var, batch.var, rtol=1e-9, atol=1e-12)


@given(st.integers(0, 10_000), st.integers(1, 30))
def test_variance_bounded_and_monotone_in_information(seed, n):
    prior = random_prior(seed % 50, shape=(8, 8))
    kp = GibbsKernelParams()
    obs = random_obs(seed, n, extent=80.0)
    extra = random_obs(seed + 1, 1, extent=80.0)
    before = posterior(obs, prior, kp)
    after = posterior(ObservationSet.concat(obs, extra), prior, kp)
    assert np.all(before.var <= kp.sigma_f**2 + 1e-9)
    assert np.all(before.var >= 0)
    assert np.all(after.var <= before.var + 1e-8)


def test_sparse_with_large_cutoff_equals_dense():
    prior = random_prior(10)
    obs = random_obs(11, 120)
    kp = GibbsKernelParams()
    dense = posterior(obs, prior, kp)
    sparse = sparse_posterior(obs, prior, kp, MortonConfig(block=8, cutoff=1e4))
    assert np.max(np.abs(sparse.mean - dense.mean)) < 1e-10
    assert np.max(np.abs(sparse.var - dense.var)) < 1e-10


def test_diagonal_approximation_never_lowers_variance():
    prior = random_prior(12)
    kp = GibbsKernelParams()
    for seed in range(5):
        obs = random_obs(100 + seed, 80)
        dense = posterior(obs, prior, kp)
        diag = sparse_posterior(obs, prior, kp, MortonConfig(block=1, cutoff=1e-9))
        assert np.all(diag.var >= dense.var - 1e-12)


def test_sparse_error_nonincreasing_in_cutoff():
    prior = random_prior(13)
    kp = GibbsKernelParams()
    obs = random_obs(14, 150)
    dense = posterior(obs, prior, kp)
    errs = []
    for f in (1, 2, 4, 8):
        sp = sparse_posterior(obs, prior, kp, MortonConfig(block=8, cutoff=f * kp.l0))
        errs.append(max(np.max(np.abs(sp.mean - dense.mean)), np.max(np.abs(sp.var - dense.var))))
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_sparse_through_posterior_switch():
    prior = random_prior(15)
    obs = random_obs(16, 40)
    kp = GibbsKernelParams()
    cfg = MortonConfig(block=4, cutoff=30.0)
    a = posterior(obs, prior, kp, sparsify=cfg)
    b = sparse_posterior(obs, prior, kp, cfg)
    assert np.array_equal(a.mean, b.mean)


def test_cholesky_jitter_rescues_semidefinite():
    v = np.array([[1.0, 2.0, 3.0]])
    A = v.T @ v
    L = cholesky_jitter(A)
    assert np.allclose(L @ L.T, A, atol=1e-5)


def test_cholesky_jitter_reports_levels():
    with pytest.raises(NumericalFailure) as info:
        cholesky_jitter(np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert info.value.jitters[-1] == 1e-6


def test_kernel_matrix_shapes():
    kp = GibbsKernelParams()
    assert kernel_matrix(np.zeros((3, 3)), np.zeros((5, 3)), kp).shape == (3, 5)
