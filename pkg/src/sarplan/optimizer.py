"""Adam descent on finite-difference gradients of the trajectory objective."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .planner import penetration_depth, points_in_zones
from .trajectory import TrajectorySet

ZONE_PENALTY = 1e3
STALL_WINDOW = 10


@dataclass(frozen=True)
class OptimizerConfig:
    eta: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    fd_step: float = 1e-2
    max_iters: int = 150
    rel_tol: float = 1e-7

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidArgument("eta must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidArgument("Adam betas must lie in [0, 1)")
        if not self.fd_step > 0:
            raise InvalidArgument("fd_step must be positive")
        if self.max_iters < 0:
            raise InvalidArgument("max_iters must be non-negative")


class Adam:
    """Bias-corrected Adam on a flat parameter vector."""

    def __init__(self, size, eta, beta1=0.9, beta2=0.999, eps=1e-8):
        self.eta, self.beta1, self.beta2, self.eps = eta, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return self.eta * m_hat / (np.sqrt(v_hat) + self.eps)


def fd_gradient(f, x, h):
    """Central differences, one coordinate at a time."""
    g = np.empty_like(x)
    for i in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def _value(result):
    return float(result.objective) if hasattr(result, "objective") else float(result)


def zone_penalty(traj: TrajectorySet, zones, resolution=1.0):
    if not zones:
        return 0.0
    total = 0.0
    for u in range(traj.n_uav):
        depth = penetration_depth(traj.dense_sample(u, resolution), zones)
        total += float(np.sum(depth**2))
    return ZONE_PENALTY * total


def trajectory_feasible(traj: TrajectorySet, zones, clearance=2.0, resolution=0.1):
    """No curve sample (spaced at most ``resolution``) inside a zone or under ``clearance``."""
    for u in range(traj.n_uav):
        pts = traj.dense_sample(u, resolution)
        if np.any(points_in_zones(pts, zones)) or np.any(pts[:, 2] < clearance):
            return False
    return True


@dataclass
class OptimizeResult:
    trajectories: TrajectorySet
    log: list = field(default_factory=list)
    feasible: bool = True
    best_objective: float = None
    iterations: int = 0

    def write_log(self, path):
        cols = ["iter", "F", "R", "L", "S", "feasible", "best_F"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            w.writeheader()
            for row in self.log:
                w.writerow(row)


def optimize(initial: TrajectorySet, objective, config: OptimizerConfig = None, zones=(),
             clearance=2.0, check_resolution=0.1) -> OptimizeResult:
    """Minimize ``objective`` over the free control points with Adam.

    After every update the endpoints are re-pinned and altitudes clamped.
    Collision with no-fly zones is checked lazily: only a candidate that
    beats the incumbent gets tested.  The first collision switches on a
    squared-penetration penalty for the rest of the run; colliding
    candidates never become the incumbent.  Stops after ``max_iters`` or when
    the incumbent improved by less than ``rel_tol`` (relative) over the last
    10 iterations.
    """
    config = config or OptimizerConfig()
    zones = list(zones)
    traj = initial.copy().project()
    penalty_on = False

    def report(t):
        r = objective(t)
        return r, _value(r)

    def fd_objective(x):
        t = traj.with_free_params(x)
        v = _value(objective(t))
        if penalty_on:
            v += zone_penalty(t, zones)
        return v

    rep, F = report(traj)
    feasible = trajectory_feasible(traj, zones, clearance, check_resolution)
    best, best_F = (traj.copy(), F) if feasible else (None, np.inf)
    penalty_on = not feasible
    log = [_log_row(0, rep, F, feasible, best_F)]
    history = [best_F]

    x = traj.free_params()
    adam = Adam(len(x), config.eta, config.beta1, config.beta2, config.eps)
    it = 0
    for it in range(1, config.max_iters + 1):
        if len(x) == 0:
            break
        g = fd_gradient(fd_objective, x, config.fd_step)
        x = x - adam.step(g)
        traj = traj.with_free_params(x, project=True)
        x = traj.free_params()
        rep, F = report(traj)
        checked = None
        if F < best_F:
            checked = trajectory_feasible(traj, zones, clearance, check_resolution)
            if checked:
                best, best_F = traj.copy(), F
            else:
                penalty_on = True
        log.append(_log_row(it, rep, F, checked, best_F))
        history.append(best_F)
        if len(history) > STALL_WINDOW and np.isfinite(history[-1 - STALL_WINDOW]):
            old = history[-1 - STALL_WINDOW]
            if (old - history[-1]) <= config.rel_tol * abs(old):
                break

    if best is None:
        return OptimizeResult(initial.copy(), log, feasible=False, best_objective=None, iterations=it)
    return OptimizeResult(best, log, feasible=True, best_objective=best_F, iterations=it)


def _log_row(it, rep, F, feasible, best_F):
    row = {"iter": it, "F": F, "feasible": feasible, "best_F": best_F}
    if hasattr(rep, "risk"):
        row.update(R=rep.risk, L=rep.length_cost, S=rep.smooth_cost)
    return row
