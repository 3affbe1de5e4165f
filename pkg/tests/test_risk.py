import numpy as np
import pytest
from hypothesis import given, strategies as st

from test_gp import random_obs, random_prior
from sarplan.errors import InvalidArgument
from sarplan.gp import ConditionedGP, GibbsKernelParams, GPPosterior, MortonConfig, ObservationSet, posterior
from sarplan.risk import (ObjectiveConfig, RiskObjective, RiskParams, ScenarioInputs, length_cost, objective,
                          risk_cost, risk_of_observations, smooth_cost)
from sarplan.trajectory import TrajectorySet


def post(mean, var):
    mean = np.asarray(mean, dtype=float)
    return GPPosterior(np.zeros((len(mean), 2)), mean, np.asarray(var, dtype=float))


def line(length, n_uav=1, K=1, z=10.0):
    ctrl = np.column_stack([np.linspace(0, length, 3 * K + 1), np.zeros(3 * K + 1), np.full(3 * K + 1, z)])
    return TrajectorySet(np.repeat(ctrl[None], n_uav, axis=0))


def inputs(seed=0, sparse=None):
    prior = random_prior(seed, shape=(10, 10))
    obs = random_obs(seed + 50, 20, extent=100.0, max_alt=2.0)
    return ScenarioInputs(prior, obs, GibbsKernelParams(), sample_spacing=10.0, sparse=sparse)


def test_risk_examples():
    assert risk_cost(post([0, 0, 0], [1, 2, 3]), RiskParams()) == 0.0
    assert risk_cost(post([0.5, 0.2], [1, 0]), RiskParams(mu=1)) == pytest.approx(0.45, abs=1e-15)
    m = np.array([0.3, 0.1, 0.7])
    assert risk_cost(post(m, [5, 6, 7]), RiskParams(mu=0)) == m.sum()


def test_risk_rejects_misaligned_and_negative_mu():
    with pytest.raises(InvalidArgument):
        risk_cost(post([1.0, 2.0], [1.0]), RiskParams())
    with pytest.raises(InvalidArgument):
        RiskParams(mu=-1)


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=30), st.floats(0, 5))
def test_risk_nonnegative(cells, mu):
    m, v = np.array(cells).T
    assert risk_cost(post(m, v), RiskParams(mu)) >= 0


def test_length_hinge_examples():
    assert length_cost(line(100.0), 100.0) == pytest.approx(0.0, abs=1e-9)
    assert length_cost(line(110.0), 100.0) == pytest.approx(100.0, rel=1e-9)
    assert length_cost(line(50.0), 100.0) == 0.0
    with pytest.raises(InvalidArgument):
        length_cost(line(50.0), 0.0)


def test_smooth_hinge_examples():
    h = 3.0
    kink = TrajectorySet(np.array([[0, 0, 0], [0, 0, 0], [0, 0, h], [0, 0, 2 * h]], dtype=float))
    assert smooth_cost(kink, h**2) == 0.0
    assert smooth_cost(kink, h**2 - 2) == 4.0
    assert smooth_cost(kink, 100.0) == 0.0


def test_objective_config_invariants():
    with pytest.raises(InvalidArgument):
        ObjectiveConfig(alpha_L=-1)
    with pytest.raises(InvalidArgument):
        ObjectiveConfig(C_smooth=0)


def test_no_uavs_objective_is_searcher_risk():
    inp = inputs()
    rep = objective(TrajectorySet.empty(), inp, ObjectiveConfig(), RiskParams())
    assert rep.length_cost == 0 and rep.smooth_cost == 0
    expect = risk_cost(posterior(inp.searcher_obs, inp.prior, inp.gp), RiskParams())
    assert rep.objective == pytest.approx(expect, rel=1e-12)


def test_report_reconstructs_objective():
    cfg = ObjectiveConfig(C_time=50.0, C_smooth=1.0)
    rng = np.random.default_rng(1)
    ctrl = rng.uniform([0, 0, 5], [100, 100, 40], (2, 13, 3))
    rep = objective(TrajectorySet(ctrl, alt_bounds=(5, 60)), inputs(1), cfg, RiskParams())
    assert rep.length_cost > 0 and rep.smooth_cost > 0
    rebuilt = rep.risk + cfg.alpha_L * rep.length_cost + cfg.alpha_S * rep.smooth_cost
    assert rep.objective == pytest.approx(rebuilt, rel=1e-9)


def test_cached_objective_matches_fresh_evaluation():
    inp = inputs(2)
    obj = RiskObjective(inp)
    rng = np.random.default_rng(2)
    traj = TrajectorySet(rng.uniform([0, 0, 5], [100, 100, 40], (2, 13, 3)), alt_bounds=(5, 60))
    obj(traj)
    x = traj.free_params()
    for i in (0, 20, 35):
        x2 = x.copy()
        x2[i] += 0.3
        moved = traj.with_free_params(x2)
        cached = obj(moved).objective
        fresh = objective(moved, inp, ObjectiveConfig(), RiskParams()).objective
        assert cached == pytest.approx(fresh, rel=1e-9)


def test_sparse_objective_close_to_dense():
    kp = GibbsKernelParams()
    dense = inputs(3)
    sparse = inputs(3, sparse=MortonConfig(cutoff=3 * kp.lengthscale(60.0)))
    traj = TrajectorySet(np.random.default_rng(3).uniform([0, 0, 5], [100, 100, 40], (2, 13, 3)))
    a = objective(traj, dense, ObjectiveConfig(), RiskParams()).risk
    b = objective(traj, sparse, ObjectiveConfig(), RiskParams()).risk
    assert abs(a - b) / a < 0.05


def test_risk_of_observations_matches_objective():
    inp = inputs(4)
    traj = line(90.0, z=15.0)
    extra = ObservationSet(traj.resample(0, inp.sample_spacing))
    assert risk_of_observations(inp, extra, RiskParams()) == pytest.approx(
        objective(traj, inp, ObjectiveConfig(), RiskParams()).risk, rel=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_zero_reading_at_peak_cell_never_raises_risk(seed):
    prior = random_prior(seed, shape=(12, 12))
    kp = GibbsKernelParams()
    obs = random_obs(1000 + seed, 1 + 4 * seed, extent=120.0)
    before = posterior(obs, prior, kp)
    cell = ConditionedGP(prior, kp).cells[int(np.argmax(before.mean))]
    after = posterior(ObservationSet.concat(obs, ObservationSet(np.array([[*cell, 0.0]]))), prior, kp)
    assert risk_cost(after, RiskParams()) <= risk_cost(before, RiskParams()) + 1e-8
