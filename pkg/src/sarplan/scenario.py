"""Scenario configuration, the end-to-end planning pipeline and the baseline comparison."""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import subprocess
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, io
from .errors import InvalidArgument, PlanningFailure, StageError
from .gp import GibbsKernelParams, MortonConfig, ObservationSet, assemble_observations, resample_polyline
from .lost_person import BeliefGrid, LostPersonParams, StartDistribution, simulate_heatmap
from .optimizer import OptimizeResult, OptimizerConfig, optimize, trajectory_feasible
from .planner import NoFlyZone, points_in_zones, rrt_plan, rrt_star_plan
from .risk import (ObjectiveConfig, RiskObjective, RiskParams, RiskReport, ScenarioInputs,
                   risk_of_observations)
from .searcher import Sector, SearcherParams, lawnmower_waypoints, simulate_searcher
from .terrain import TerrainGrid, generate_terrain
from .trajectory import TrajectorySet, fit_to_polyline

TAGS = {"terrain": 1, "heatmap": 2, "rrt": 10, "rrt_star": 40}


def subseed(seed, tag, index=0):
    return int(np.random.SeedSequence([int(seed), TAGS[tag] + index]).generate_state(1)[0])


@dataclass(frozen=True)
class TerrainConfig:
    extent: tuple = (400.0, 400.0)
    cell_size: float = 10.0
    amplitude: float = 20.0
    roughness: float = 0.55


@dataclass(frozen=True)
class UAVConfig:
    count: int = 2
    segments: int = 4
    alt_min: float = 5.0
    alt_max: float = 60.0
    takeoff_alt: float = 10.0
    clearance: float = 2.0
    rrt_step: float = 10.0
    rrt_max_nodes: int = 5000
    rrt_star_nodes: int = 2000
    zone_margin: float = 5.0
    fit_reg: float = 1.0

    def __post_init__(self):
        if self.count < 0:
            raise InvalidArgument("UAV count must be non-negative")
        if self.segments < 1:
            raise InvalidArgument("need at least one Bezier segment")
        if not self.clearance <= self.alt_min < self.alt_max:
            raise InvalidArgument("need clearance <= alt_min < alt_max")
        if not self.alt_min <= self.takeoff_alt <= self.alt_max:
            raise InvalidArgument("takeoff altitude must lie inside the altitude bounds")


@dataclass(frozen=True)
class SensingConfig:
    sample_spacing: float = 10.0
    sensor_height_ground: float = 2.0


@dataclass
class ScenarioConfig:
    seed: int = 0
    terrain: TerrainConfig = field(default_factory=TerrainConfig)
    lost_person: LostPersonParams = field(default_factory=LostPersonParams)
    start: StartDistribution = field(default_factory=StartDistribution)
    mc_iterations: int = 25000
    sectors: list = field(default_factory=list)
    searcher: SearcherParams = field(default_factory=SearcherParams)
    lane_spacing: float = 25.0
    uav: UAVConfig = field(default_factory=UAVConfig)
    kernel: GibbsKernelParams = field(default_factory=GibbsKernelParams)
    sensing: SensingConfig = field(default_factory=SensingConfig)
    sparse: MortonConfig = None
    risk: RiskParams = field(default_factory=RiskParams)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    zones: list = field(default_factory=list)
    manual_height: float = 15.0
    output_dir: str = "out"

    def validate(self):
        xmin, ymin = 0.0, 0.0
        xmax, ymax = self.terrain.extent

        def inside(p):
            return xmin <= p[0] <= xmax and ymin <= p[1] <= ymax

        if self.mc_iterations < 1:
            raise InvalidArgument("mc_iterations must be at least 1")
        if not inside(self.start.mean):
            raise InvalidArgument("lost-person start mean lies outside the terrain")
        if self.uav.count > 0 and not self.sectors:
            raise InvalidArgument("UAVs need at least one sector for their entry and exit points")
        for s in self.sectors:
            b = s.bounds
            if not (inside(b[:2]) and inside(b[2:])):
                raise InvalidArgument(f"sector {b} exceeds the terrain")
        for i in range(self.uav.count):
            s = self.sectors[i % len(self.sectors)]
            for p in (s.entry, s.exit):
                if points_in_zones(np.array([p[0], p[1], 0.0]), self.zones, self.uav.zone_margin):
                    raise InvalidArgument(f"UAV endpoint {p} lies inside a no-fly zone")
        return self

    def to_dict(self):
        return _plain(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        simple = {"terrain": TerrainConfig, "lost_person": LostPersonParams, "start": StartDistribution,
                  "searcher": SearcherParams, "uav": UAVConfig, "kernel": GibbsKernelParams,
                  "sensing": SensingConfig, "risk": RiskParams, "objective": ObjectiveConfig,
                  "optimizer": OptimizerConfig}
        for key, value in data.items():
            try:
                if key in simple:
                    kw[key] = simple[key](**_tuples(value))
                elif key == "sparse":
                    kw[key] = MortonConfig(**value) if value else None
                elif key == "sectors":
                    kw[key] = [Sector(**_tuples(s)) for s in value]
                elif key == "zones":
                    kw[key] = [NoFlyZone(tuple(z["center"]), z["radius"]) for z in value]
                else:
                    kw[key] = value
            except TypeError as exc:
                raise InvalidArgument(f"bad '{key}' section: {exc}") from exc
        return cls(**kw).validate()

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _tuples(d):
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def full_config(seed=0):
    """400 m x 400 m at 10 m cells, 25000 rollouts, default lost-person constants."""
    return ScenarioConfig(
        seed=seed,
        terrain=TerrainConfig(extent=(400.0, 400.0), cell_size=10.0, amplitude=20.0, roughness=0.55),
        start=StartDistribution(mean=(200.0, 200.0), std=30.0),
        mc_iterations=25000,
        sectors=[
            Sector(bounds=(40.0, 40.0, 200.0, 360.0), entry=(40.0, 40.0), exit=(200.0, 360.0)),
            Sector(bounds=(200.0, 40.0, 360.0, 360.0), entry=(360.0, 40.0), exit=(200.0, 360.0)),
        ],
        lane_spacing=40.0,
        uav=UAVConfig(count=2),
        kernel=GibbsKernelParams(noise0=0.2),
        objective=ObjectiveConfig(C_time=1600.0, C_smooth=16000.0),
        zones=[NoFlyZone((120.0, 220.0), 20.0), NoFlyZone((280.0, 180.0), 20.0)],
    ).validate()


def desk_config(seed=0):
    """200 m x 200 m, 2 searchers, 2 UAVs, 2000 rollouts, 150 optimizer iterations.

    Lanes 40 m apart leave ground between passes for the UAVs, and the
    observation noise of 0.2 keeps zero readings from overshooting the
    posterior mean below zero next to the searcher tracks.
    """
    return ScenarioConfig(
        seed=seed,
        terrain=TerrainConfig(extent=(200.0, 200.0), cell_size=10.0, amplitude=15.0, roughness=0.5),
        start=StartDistribution(mean=(100.0, 100.0), std=30.0),
        mc_iterations=2000,
        sectors=[
            Sector(bounds=(20.0, 20.0, 100.0, 180.0), entry=(20.0, 20.0), exit=(100.0, 180.0)),
            Sector(bounds=(100.0, 20.0, 180.0, 180.0), entry=(180.0, 20.0), exit=(100.0, 180.0)),
        ],
        lane_spacing=40.0,
        uav=UAVConfig(count=2, segments=4, rrt_max_nodes=3000, rrt_star_nodes=1500),
        kernel=GibbsKernelParams(noise0=0.2),
        objective=ObjectiveConfig(C_time=800.0, C_smooth=8000.0),
        optimizer=OptimizerConfig(max_iters=150),
        zones=[NoFlyZone((60.0, 110.0), 12.0), NoFlyZone((140.0, 90.0), 12.0)],
    ).validate()


@dataclass
class SharedInputs:
    terrain: TerrainGrid
    belief: BeliefGrid
    searcher_paths: list
    inputs: ScenarioInputs


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (InvalidArgument, PlanningFailure) as exc:
        raise StageError(name, exc) from exc


def make_terrain(cfg: ScenarioConfig) -> TerrainGrid:
    t = cfg.terrain
    return generate_terrain(subseed(cfg.seed, "terrain"), t.extent, t.cell_size, t.amplitude, t.roughness)


def make_heatmap(cfg: ScenarioConfig, terrain: TerrainGrid) -> BeliefGrid:
    return simulate_heatmap(cfg.lost_person, terrain, cfg.start, cfg.mc_iterations, subseed(cfg.seed, "heatmap"))


def make_searchers(cfg: ScenarioConfig, terrain: TerrainGrid):
    paths = []
    for sector in cfg.sectors:
        wps = lawnmower_waypoints(sector, cfg.lane_spacing)
        wps = np.vstack([wps, np.asarray(sector.exit, dtype=float)])
        paths.append(simulate_searcher(sector, wps, cfg.searcher, terrain))
    return paths


def build_inputs(cfg: ScenarioConfig) -> SharedInputs:
    terrain = _stage("terrain", make_terrain, cfg)
    belief = _stage("heatmap", make_heatmap, cfg, terrain)
    paths = _stage("searchers", make_searchers, cfg, terrain)
    obs = assemble_observations(paths, None, cfg.sensing.sample_spacing, cfg.sensing.sensor_height_ground)
    inputs = ScenarioInputs(prior=belief, searcher_obs=obs, gp=cfg.kernel,
                            sample_spacing=cfg.sensing.sample_spacing, sparse=cfg.sparse)
    return SharedInputs(terrain, belief, paths, inputs)


def uav_endpoints(cfg: ScenarioConfig):
    out = []
    for i in range(cfg.uav.count):
        s = cfg.sectors[i % len(cfg.sectors)]
        z = cfg.uav.takeoff_alt
        out.append((np.array([*s.entry, z], dtype=float), np.array([*s.exit, z], dtype=float)))
    return out


def plan_polylines(cfg: ScenarioConfig, terrain: TerrainGrid, planner="rrt"):
    fn, nodes = (rrt_plan, cfg.uav.rrt_max_nodes) if planner == "rrt" else (rrt_star_plan, cfg.uav.rrt_star_nodes)
    u = cfg.uav
    return [fn(a, b, terrain, cfg.zones, (u.alt_min, u.alt_max), step=u.rrt_step, max_nodes=nodes,
               seed=subseed(cfg.seed, planner, i), clearance=u.clearance, margin=u.zone_margin)
            for i, (a, b) in enumerate(uav_endpoints(cfg))]


def fit_trajectories(cfg: ScenarioConfig, polylines) -> TrajectorySet:
    """Composite cubics fitted to planner polylines, altitudes clamped.

    ``fit_reg`` smooths the jagged sampling-planner vertices so that the
    optimizer does not start deep in the smoothness penalty.
    """
    u = cfg.uav
    bounds = (u.alt_min, u.alt_max)
    if not polylines:
        return TrajectorySet.empty(u.segments, bounds)
    controls = []
    for poly in polylines:
        poly = np.asarray(poly, dtype=float)
        if len(poly) - 1 < u.segments:
            # too few vertices for K segments: add evenly spaced ones
            total = np.linalg.norm(np.diff(poly, axis=0), axis=1).sum()
            dense = resample_polyline(poly, total / (3 * u.segments))
            poly = np.vstack([dense[:-1], poly[-1]]) if len(dense) > 3 * u.segments else np.vstack([dense, poly[-1]])
        controls.append(fit_to_polyline(poly, u.segments, reg=u.fit_reg).control)
    return TrajectorySet(np.array(controls), bounds, check=False).project()


@dataclass
class PlanResult:
    report: RiskReport
    trajectories: TrajectorySet
    optimize_result: OptimizeResult = None
    shared: SharedInputs = None
    initial: TrajectorySet = None


def optimize_trajectories(cfg: ScenarioConfig, shared: SharedInputs, initial: TrajectorySet):
    objective = RiskObjective(shared.inputs, cfg.objective, cfg.risk)
    t0 = time.perf_counter()
    result = optimize(initial, objective, cfg.optimizer, cfg.zones, cfg.uav.clearance)
    elapsed = time.perf_counter() - t0
    report = objective.report(result.trajectories)
    report.planning_time = elapsed
    return result, report


def run_plan(cfg: ScenarioConfig, out_dir=None, shared: SharedInputs = None) -> PlanResult:
    """Terrain, heatmap, searchers, RRT seeds, Bezier fit, optimization, report.

    Writes the artifacts to ``out_dir`` when given.  With zero UAVs the
    optimizer stage is skipped and the report holds the searchers-only risk.
    """
    cfg.validate()
    shared = shared or build_inputs(cfg)
    if cfg.uav.count == 0:
        objective = RiskObjective(shared.inputs, cfg.objective, cfg.risk)
        empty = TrajectorySet.empty(cfg.uav.segments, (cfg.uav.alt_min, cfg.uav.alt_max))
        result = PlanResult(objective.report(empty), empty, None, shared, empty)
    else:
        polylines = _stage("rrt", plan_polylines, cfg, shared.terrain, "rrt")
        initial = _stage("fit", fit_trajectories, cfg, polylines)
        opt, report = _stage("optimize", optimize_trajectories, cfg, shared, initial)
        result = PlanResult(report, opt.trajectories, opt, shared, initial)
    if out_dir is not None:
        write_plan_artifacts(cfg, result, out_dir)
    return result


def write_plan_artifacts(cfg, result: PlanResult, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    shared = result.shared
    io.write_grid_csv(os.path.join(out_dir, "terrain.csv"), shared.terrain.heights, shared.terrain.origin,
                      shared.terrain.cell_size)
    io.write_grid_csv(os.path.join(out_dir, "heatmap.csv"), shared.belief.probs, shared.belief.origin,
                      shared.belief.cell_size)
    io.write_pgm(os.path.join(out_dir, "heatmap.pgm"), shared.belief.probs)
    io.write_searcher_paths_csv(os.path.join(out_dir, "searchers.csv"), shared.searcher_paths)
    result.trajectories.to_json(os.path.join(out_dir, "trajectories.json"))
    io.write_trajectory_samples_csv(os.path.join(out_dir, "uav_paths.csv"), result.trajectories, shared.terrain)
    if result.optimize_result is not None:
        result.optimize_result.write_log(os.path.join(out_dir, "iterations.csv"))
    result.report.to_json(os.path.join(out_dir, "report.json"))
    write_meta(cfg, out_dir)


def version_string():
    try:
        here = os.path.dirname(os.path.abspath(__file__))
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_meta(cfg, out_dir):
    with open(os.path.join(out_dir, "meta.json"), "w") as fh:
        json.dump({"version": version_string(), "config": cfg.to_dict()}, fh, indent=2)


def manual_observations(cfg: ScenarioConfig, shared: SharedInputs) -> ObservationSet:
    """UAVs retracing searcher tracks at ``manual_height`` above ground."""
    parts = []
    for i in range(cfg.uav.count):
        path = shared.searcher_paths[i % len(shared.searcher_paths)]
        ground = resample_polyline(path.points, cfg.sensing.sample_spacing)
        parts.append(ObservationSet(np.column_stack([ground, np.full(len(ground), cfg.manual_height)])))
    return ObservationSet.concat(*parts)


def polyline_observations(cfg: ScenarioConfig, polylines) -> ObservationSet:
    return ObservationSet.concat(*(ObservationSet(resample_polyline(p, cfg.sensing.sample_spacing))
                                   for p in polylines))


SCENARIOS = ("No UAVs", "UAVs, RRT*", "UAVs, Manual", "UAVs, Risk")


@dataclass
class ComparisonRow:
    scenario: str
    risk: float
    pct_of_max: float = 0.0
    planning_time: float = None


@dataclass
class ComparisonTable:
    rows: list
    trajectories: dict = field(default_factory=dict)
    result: PlanResult = None

    def risk(self, scenario):
        return next(r.risk for r in self.rows if r.scenario == scenario)

    def to_dicts(self):
        return [dataclasses.asdict(r) for r in self.rows]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scenario", "risk_cost", "pct_of_max", "planning_time"])
            for r in self.rows:
                w.writerow([r.scenario, repr(r.risk), repr(r.pct_of_max),
                            "N/A" if r.planning_time is None else repr(r.planning_time)])

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dicts(), fh, indent=2)

    def format(self):
        lines = [f"{'Scenario':<14} {'Risk cost':>12} {'% of max':>9} {'Planning time':>14}"]
        for r in self.rows:
            pt = "N/A" if r.planning_time is None else f"{r.planning_time:.3f}s"
            lines.append(f"{r.scenario:<14} {r.risk:>12.4f} {r.pct_of_max:>9.3f} {pt:>14}")
        return "\n".join(lines)


def compare_baselines(cfg: ScenarioConfig, out_dir=None, init="rrt", shared: SharedInputs = None) -> ComparisonTable:
    """Risk of four scenarios on identical terrain, heatmap and searcher paths.

    Rows: no UAVs; UAVs on RRT* shortest paths; UAVs retracing the searchers
    at ``manual_height``; risk-optimized UAVs (started from RRT paths, or from
    the RRT* paths when ``init='rrt_star'``).
    """
    cfg.validate()
    if cfg.uav.count < 1:
        raise InvalidArgument("comparison needs at least one UAV")
    shared = shared or build_inputs(cfg)
    rp = cfg.risk

    risk_none = risk_of_observations(shared.inputs, ObservationSet(), rp)

    t0 = time.perf_counter()
    star = _stage("rrt_star", plan_polylines, cfg, shared.terrain, "rrt_star")
    star_time = time.perf_counter() - t0
    risk_star = risk_of_observations(shared.inputs, polyline_observations(cfg, star), rp)

    risk_manual = risk_of_observations(shared.inputs, manual_observations(cfg, shared), rp)

    if init == "rrt_star":
        initial = _stage("fit", fit_trajectories, cfg, star)
    else:
        initial = _stage("fit", fit_trajectories, cfg, _stage("rrt", plan_polylines, cfg, shared.terrain, "rrt"))
    opt, report = _stage("optimize", optimize_trajectories, cfg, shared, initial)
    risk_opt = report.risk
    result = PlanResult(report, opt.trajectories, opt, shared, initial)

    rows = [ComparisonRow(SCENARIOS[0], risk_none), ComparisonRow(SCENARIOS[1], risk_star, planning_time=star_time),
            ComparisonRow(SCENARIOS[2], risk_manual), ComparisonRow(SCENARIOS[3], risk_opt,
                                                                    planning_time=report.planning_time)]
    top = max(r.risk for r in rows)
    for r in rows:
        r.pct_of_max = 100.0 * r.risk / top
    table = ComparisonTable(rows, {"rrt_star": star, "optimized": opt.trajectories}, result)
    if out_dir is not None:
        write_comparison(cfg, table, out_dir)
    return table


def write_comparison(cfg, table: ComparisonTable, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    table.write_csv(os.path.join(out_dir, "comparison.csv"))
    table.write_json(os.path.join(out_dir, "comparison.json"))
    names = {"No UAVs": "no_uavs", "UAVs, RRT*": "rrt_star", "UAVs, Manual": "manual", "UAVs, Risk": "risk"}
    for row in table.rows:
        d = os.path.join(out_dir, names[row.scenario])
        os.makedirs(d, exist_ok=True)
        with open(os.path.join(d, "row.json"), "w") as fh:
            json.dump(dataclasses.asdict(row), fh, indent=2)
    shared = table.result.shared
    io.write_grid_csv(os.path.join(out_dir, "heatmap.csv"), shared.belief.probs, shared.belief.origin,
                      shared.belief.cell_size)
    io.write_searcher_paths_csv(os.path.join(out_dir, "searchers.csv"), shared.searcher_paths)
    io.write_polylines_csv(os.path.join(out_dir, "rrt_star", "paths.csv"), table.trajectories["rrt_star"])
    table.trajectories["optimized"].to_json(os.path.join(out_dir, "risk", "trajectories.json"))
    table.result.optimize_result.write_log(os.path.join(out_dir, "risk", "iterations.csv"))
    write_meta(cfg, out_dir)


def recommended_sparse(cfg: ScenarioConfig) -> MortonConfig:
    """Cutoff of three footprints at the highest allowed altitude."""
    return MortonConfig(cutoff=3.0 * cfg.kernel.lengthscale(cfg.uav.alt_max))


def feasible(cfg, traj):
    return trajectory_feasible(traj, cfg.zones, cfg.uav.clearance)


PRESETS = {"desk": desk_config, "full": full_config}
