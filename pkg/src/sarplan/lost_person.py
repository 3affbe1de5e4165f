"""Force-model lost-person dynamics and the Monte Carlo location heatmap.

Each simulated person obeys

    m * acc + (a * |vel| - b) * vel = alpha * grad h(x) + beta * noise

where ``h`` is the terrain elevation and ``noise`` is a fresh standard
normal 2D draw every step.  With a negative ``alpha`` the terrain force
points downhill.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .terrain import TerrainGrid, bilinear

BATCH = 1024


@dataclass(frozen=True)
class LostPersonParams:
    m: float = 70.0
    a: float = 1e-3
    b: float = 1e-5
    alpha: float = -5.0
    beta: float = 0.3
    dt: float = 1.0
    horizon: int = 5000

    def __post_init__(self):
        if not self.m > 0:
            raise InvalidArgument("inertia m must be positive")
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")
        if self.horizon < 0:
            raise InvalidArgument("horizon must be non-negative")


@dataclass
class AgentState:
    x: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)


@dataclass(frozen=True)
class StartDistribution:
    """Isotropic Gaussian over the last known position."""

    mean: tuple = (200.0, 200.0)
    std: float = 30.0


@dataclass(frozen=True)
class BeliefGrid:
    """Probability mass per terrain cell, same lattice as the terrain."""

    origin: np.ndarray
    cell_size: float
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if np.any(probs < 0):
            raise InvalidArgument("probabilities must be non-negative")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))

    @property
    def shape(self):
        return self.probs.shape

    def cell_centers(self):
        ny, nx = self.probs.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.cell_size
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.cell_size
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def value_at(self, p):
        """Bilinearly interpolated probability at ground positions."""
        return bilinear(self.probs, self.origin, self.cell_size, p)


def _reflect(x, v, lo, hi):
    for d in range(2):
        below = x[..., d] < lo[d]
        x[..., d] = np.where(below, 2 * lo[d] - x[..., d], x[..., d])
        v[..., d] = np.where(below, -v[..., d], v[..., d])
        above = x[..., d] > hi[d]
        x[..., d] = np.where(above, 2 * hi[d] - x[..., d], x[..., d])
        v[..., d] = np.where(above, -v[..., d], v[..., d])
    # a second pass is only needed for absurdly large steps; clamp instead
    for d in range(2):
        np.clip(x[..., d], lo[d], hi[d], out=x[..., d])


def _step(x, v, params, terrain, noise, lo, hi):
    grad = bilinear(terrain.heights, terrain.origin, terrain.cell_size, x, with_gradient=True)[1]
    speed = np.linalg.norm(v, axis=-1, keepdims=True)
    force = params.alpha * grad + params.beta * noise - (params.a * speed - params.b) * v
    v = v + params.dt * force / params.m
    x = x + params.dt * v
    _reflect(x, v, lo, hi)
    return x, v


def step_agent(state: AgentState, params: LostPersonParams, terrain: TerrainGrid, noise) -> AgentState:
    """One semi-implicit Euler step (velocity first, then position).

    ``noise`` is a standard normal 2D draw; the caller owns the randomness.
    Agents leaving the terrain are reflected back in with the normal velocity
    component flipped.
    """
    xmin, ymin, xmax, ymax = terrain.bounds
    x = np.array(state.x, dtype=float)
    v = np.array(state.v, dtype=float)
    x, v = _step(x, v, params, terrain, np.asarray(noise, dtype=float),
                 (xmin, ymin), (xmax, ymax))
    return AgentState(x=x, v=v)


def simulate_final_positions(params, terrain, start_dist, iterations, seed):
    """Final positions of ``iterations`` independent rollouts, shape (iterations, 2)."""
    if iterations < 1:
        raise InvalidArgument("iterations must be at least 1")
    mean = np.asarray(start_dist.mean, dtype=float)
    if not terrain.contains(mean):
        raise InvalidArgument(f"start mean {mean.tolist()} lies outside the terrain")
    xmin, ymin, xmax, ymax = terrain.bounds
    lo, hi = (xmin, ymin), (xmax, ymax)
    out = np.empty((iterations, 2))
    for start in range(0, iterations, BATCH):
        idx = range(start, min(start + BATCH, iterations))
        starts = np.empty((len(idx), 2))
        noise = np.empty((len(idx), params.horizon, 2))
        for k, i in enumerate(idx):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
            starts[k] = mean + start_dist.std * rng.standard_normal(2)
            noise[k] = rng.standard_normal((params.horizon, 2))
        x = starts
        v = np.zeros_like(x)
        _reflect(x, v, lo, hi)
        for t in range(params.horizon):
            x, v = _step(x, v, params, terrain, noise[:, t], lo, hi)
        out[start:start + len(idx)] = x
    return out


def simulate_heatmap(params: LostPersonParams, terrain: TerrainGrid, start_dist: StartDistribution,
                     iterations: int, seed: int) -> BeliefGrid:
    """Monte Carlo belief over the lost person's location after ``horizon`` steps.

    One unit of mass goes to the cell holding each rollout's final position;
    the grid is then normalized.  Rollout ``i`` draws its start point and all
    its noise from its own stream, so the result does not depend on batching.
    """
    final = simulate_final_positions(params, terrain, start_dist, iterations, seed)
    j, i = terrain.cell_index(final)
    counts = np.zeros(terrain.shape)
    np.add.at(counts, (j, i), 1.0)
    return BeliefGrid(origin=terrain.origin, cell_size=terrain.cell_size, probs=counts / counts.sum())
