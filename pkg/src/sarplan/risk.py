"""Residual-belief risk and the penalized objective over UAV trajectories."""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgument
from .gp import (ConditionedGP, GibbsKernelParams, GPPosterior, MortonConfig, ObservationSet,
                 sparse_posterior)
from .lost_person import BeliefGrid
from .trajectory import TrajectorySet, cubic_arc_length, segments, smoothness


@dataclass(frozen=True)
class RiskParams:
    mu: float = 1.0

    def __post_init__(self):
        if self.mu < 0:
            raise InvalidArgument("mu must be non-negative")


@dataclass(frozen=True)
class ObjectiveConfig:
    alpha_L: float = 1e-4
    alpha_S: float = 1e-2
    C_time: float = 1000.0
    C_smooth: float = 2000.0

    def __post_init__(self):
        if self.alpha_L < 0 or self.alpha_S < 0:
            raise InvalidArgument("penalty weights must be non-negative")
        if not (self.C_time > 0 and self.C_smooth > 0):
            raise InvalidArgument("constraint caps must be positive")


@dataclass
class RiskReport:
    risk: float
    length_cost: float
    smooth_cost: float
    objective: float
    planning_time: float = None
    total_length: float = 0.0
    smoothness: float = 0.0

    def to_dict(self):
        return asdict(self)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def risk_cost(post: GPPosterior, params: RiskParams) -> float:
    """Sum over cells of mean / (1 + mu * variance)."""
    mean = np.asarray(post.mean, dtype=float)
    var = np.asarray(post.var, dtype=float)
    if mean.shape != var.shape:
        raise InvalidArgument("posterior mean and variance are misaligned")
    return float(np.sum(mean / (1.0 + params.mu * var)))


def hinge(value, cap):
    return max(0.0, value - cap) ** 2


def length_cost(traj: TrajectorySet, cap: float) -> float:
    if not cap > 0:
        raise InvalidArgument("cap must be positive")
    return hinge(traj.total_length(), cap)


def smooth_cost(traj: TrajectorySet, cap: float) -> float:
    if not cap > 0:
        raise InvalidArgument("cap must be positive")
    return hinge(smoothness(traj), cap)


@dataclass
class ScenarioInputs:
    """Everything the objective holds fixed while the UAV paths change."""

    prior: BeliefGrid
    searcher_obs: ObservationSet
    gp: GibbsKernelParams
    sample_spacing: float = 10.0
    sparse: MortonConfig = None


class RiskObjective:
    """Callable objective ``F = R + alpha_L * L + alpha_S * S``.

    The GP conditioned on the searcher observations is built once.  When a
    call differs from a recent one in a single UAV only (the finite-difference
    pattern), the GP conditioned on the other UAVs is reused from a small
    cache and only the changed UAV's readings are added.
    """

    def __init__(self, inputs: ScenarioInputs, config: ObjectiveConfig = None,
                 risk_params: RiskParams = None, cache_size=8):
        self.inputs = inputs
        self.config = config or ObjectiveConfig()
        self.risk_params = risk_params or RiskParams()
        self.base = ConditionedGP(inputs.prior, inputs.gp).conditioned(inputs.searcher_obs)
        self._cache = OrderedDict()
        self._cache_size = cache_size
        self._lengths = OrderedDict()

    def _uav_obs(self, traj, u):
        pts = traj.resample(u, self.inputs.sample_spacing)
        return ObservationSet(pts)

    def _uav_length(self, control):
        key = control.tobytes()
        hit = self._lengths.get(key)
        if hit is None:
            hit = cubic_arc_length(segments(control))
            self._lengths[key] = hit
            if len(self._lengths) > 4 * self._cache_size:
                self._lengths.popitem(last=False)
        return hit

    def _remember(self, key, gp):
        self._cache[key] = gp
        self._cache.move_to_end(key)
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)

    def _others_key(self, traj, u):
        return (u, np.delete(traj.control, u, axis=0).tobytes())

    def posterior(self, traj: TrajectorySet) -> GPPosterior:
        n = traj.n_uav
        if self.inputs.sparse is not None:
            obs = ObservationSet.concat(self.inputs.searcher_obs, *(self._uav_obs(traj, u) for u in range(n)))
            return sparse_posterior(obs, self.inputs.prior, self.inputs.gp, self.inputs.sparse)
        if n == 0:
            return self.base.posterior()
        for u in range(n):
            gp = self._cache.get(self._others_key(traj, u))
            if gp is not None:
                break
        else:
            u = n - 1
            others = [self._uav_obs(traj, v) for v in range(n) if v != u]
            gp = self.base.conditioned(ObservationSet.concat(*others)) if others else self.base
            self._remember(self._others_key(traj, u), gp)
        mean, var = gp.predict_with(self._uav_obs(traj, u))
        return GPPosterior(self.base.cells, mean, np.maximum(var, 0.0))

    def risk(self, traj: TrajectorySet) -> float:
        return risk_cost(self.posterior(traj), self.risk_params)

    def report(self, traj: TrajectorySet) -> RiskReport:
        r = self.risk(traj)
        total = float(sum(self._uav_length(traj.control[u]) for u in range(traj.n_uav)))
        smooth = smoothness(traj)
        L = hinge(total, self.config.C_time)
        S = hinge(smooth, self.config.C_smooth)
        F = r + self.config.alpha_L * L + self.config.alpha_S * S
        return RiskReport(risk=r, length_cost=L, smooth_cost=S, objective=F,
                          total_length=total, smoothness=smooth)

    def __call__(self, traj: TrajectorySet) -> RiskReport:
        return self.report(traj)


def objective(traj: TrajectorySet, inputs: ScenarioInputs, config: ObjectiveConfig,
              risk_params: RiskParams) -> RiskReport:
    """One-shot evaluation of the penalized objective (no caching across calls)."""
    return RiskObjective(inputs, config, risk_params).report(traj)


def risk_of_observations(inputs: ScenarioInputs, extra: ObservationSet, risk_params: RiskParams) -> float:
    """Risk after conditioning on the searcher readings plus ``extra`` readings."""
    obs = ObservationSet.concat(inputs.searcher_obs, extra)
    if inputs.sparse is not None:
        post = sparse_posterior(obs, inputs.prior, inputs.gp, inputs.sparse)
    else:
        post = ConditionedGP(inputs.prior, inputs.gp).conditioned(obs).posterior()
    return risk_cost(post, risk_params)
