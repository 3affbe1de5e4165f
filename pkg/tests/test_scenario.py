import dataclasses
import json

import numpy as np
import pytest

from sarplan.errors import InvalidArgument, StageError
from sarplan.optimizer import OptimizerConfig
from sarplan.planner import NoFlyZone
from sarplan.scenario import (SCENARIOS, ScenarioConfig, UAVConfig, build_inputs, compare_baselines, desk_config,
                              feasible, fit_trajectories, full_config, plan_polylines, run_plan, subseed)


def tiny(seed=0, **changes):
    cfg = desk_config(seed)
    base = dict(mc_iterations=200, optimizer=OptimizerConfig(max_iters=3),
                uav=dataclasses.replace(cfg.uav, rrt_max_nodes=2000, rrt_star_nodes=300))
    base.update(changes)
    return dataclasses.replace(cfg, **base)


@pytest.fixture(scope="module")
def shared():
    return build_inputs(tiny())


def test_config_roundtrip():
    for cfg in (desk_config(3), full_config(4)):
        back = ScenarioConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert back.to_dict() == cfg.to_dict()


def test_config_rejects_unknown_and_bad_sections():
    d = desk_config().to_dict()
    with pytest.raises(InvalidArgument):
        ScenarioConfig.from_dict({**d, "bogus": 1})
    with pytest.raises(InvalidArgument):
        ScenarioConfig.from_dict({**d, "uav": {"wings": 3}})


def test_config_rejects_endpoint_in_zone():
    with pytest.raises(InvalidArgument):
        dataclasses.replace(desk_config(), zones=[NoFlyZone((20.0, 20.0), 5.0)]).validate()


def test_config_rejects_start_off_map():
    cfg = desk_config()
    with pytest.raises(InvalidArgument):
        dataclasses.replace(cfg, start=dataclasses.replace(cfg.start, mean=(500.0, 0.0))).validate()


def test_uav_config_invariants():
    with pytest.raises(InvalidArgument):
        UAVConfig(alt_min=60, alt_max=5)
    with pytest.raises(InvalidArgument):
        UAVConfig(takeoff_alt=100)


def test_subseeds_differ_by_stage():
    assert subseed(0, "terrain") != subseed(0, "heatmap")
    assert subseed(0, "rrt", 0) != subseed(0, "rrt", 1)
    assert subseed(5, "rrt") == subseed(5, "rrt")


def test_inputs_deterministic(shared):
    again = build_inputs(tiny())
    assert np.array_equal(again.belief.probs, shared.belief.probs)
    assert np.array_equal(again.terrain.heights, shared.terrain.heights)
    assert np.array_equal(again.inputs.searcher_obs.points, shared.inputs.searcher_obs.points)


def test_zero_uavs_reports_searcher_risk(shared, tmp_path):
    cfg = tiny(uav=dataclasses.replace(tiny().uav, count=0))
    res = run_plan(cfg, tmp_path, shared)
    assert res.trajectories.n_uav == 0
    assert res.report.length_cost == 0 and res.report.smooth_cost == 0
    assert (tmp_path / "meta.json").exists() and (tmp_path / "report.json").exists()


def test_fitted_paths_respect_endpoints(shared):
    cfg = tiny()
    traj = fit_trajectories(cfg, plan_polylines(cfg, shared.terrain))
    assert traj.n_uav == 2
    s = cfg.sectors[0]
    assert np.array_equal(traj.eval(0, 0.0), [*s.entry, cfg.uav.takeoff_alt])
    assert np.array_equal(traj.eval(0, 1.0), [*s.exit, cfg.uav.takeoff_alt])


def test_plan_writes_artifacts_and_is_deterministic(shared, tmp_path):
    a = run_plan(tiny(), tmp_path / "a", shared)
    b = run_plan(tiny(), tmp_path / "b", shared)
    assert np.array_equal(a.trajectories.control, b.trajectories.control)
    assert a.optimize_result.log == b.optimize_result.log
    for name in ("terrain.csv", "heatmap.csv", "heatmap.pgm", "searchers.csv", "trajectories.json",
                 "uav_paths.csv", "iterations.csv", "report.json", "meta.json"):
        assert (tmp_path / "a" / name).exists(), name
    assert feasible(tiny(), a.trajectories)


def test_planning_failure_is_wrapped(shared):
    cfg = tiny(uav=dataclasses.replace(tiny().uav, rrt_max_nodes=2))
    with pytest.raises(StageError) as info:
        run_plan(cfg, None, shared)
    assert info.value.stage == "rrt"


def test_compare_table(shared, tmp_path):
    table = compare_baselines(tiny(), tmp_path, shared=shared)
    assert [r.scenario for r in table.rows] == list(SCENARIOS)
    assert max(r.pct_of_max for r in table.rows) == pytest.approx(100.0)
    assert table.rows[0].planning_time is None and table.rows[1].planning_time > 0
    assert table.risk("No UAVs") > table.risk("UAVs, Manual")
    for sub in ("no_uavs", "rrt_star", "manual", "risk"):
        assert (tmp_path / sub / "row.json").exists()
    assert (tmp_path / "comparison.csv").read_text().startswith("scenario,risk_cost,pct_of_max,planning_time")
    assert "UAVs, Risk" in table.format()
