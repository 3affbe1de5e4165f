"""Anticipated ground-searcher paths: lawnmower sweeps bent by terrain slope."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .terrain import TerrainGrid

WAYPOINT = "waypoint"
GRADIENT = "gradient"


@dataclass(frozen=True)
class Sector:
    """Axis-aligned search area ``bounds = (xmin, ymin, xmax, ymax)``."""

    bounds: tuple
    entry: tuple
    exit: tuple

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise InvalidArgument(f"degenerate sector bounds {self.bounds}")
        for name in ("entry", "exit"):
            x, y = getattr(self, name)
            if not (xmin - 1e-9 <= x <= xmax + 1e-9 and ymin - 1e-9 <= y <= ymax + 1e-9):
                raise InvalidArgument(f"sector {name} {(x, y)} lies outside {self.bounds}")

    @property
    def width(self):
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self):
        return self.bounds[3] - self.bounds[1]


@dataclass(frozen=True)
class SearcherParams:
    speed: float = 1.0
    waypoint_radius: float = 5.0
    slope_threshold: float = 0.6
    tenacity_growth: float = 0.002
    dt: float = 1.0
    max_steps: int = 20000

    def __post_init__(self):
        for name in ("speed", "waypoint_radius", "slope_threshold", "dt", "max_steps"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.tenacity_growth < 0:
            raise InvalidArgument("tenacity_growth must be non-negative")


@dataclass
class SearcherPath:
    """Time-sampled ground track.

    ``tenacity`` is the slope-threshold multiplier in force at each sample and
    ``completed`` tells whether every waypoint was captured before
    ``max_steps`` ran out.
    """

    t: np.ndarray
    points: np.ndarray
    modes: list
    tenacity: np.ndarray = field(default=None)
    completed: bool = True
    captured: int = 0

    def __len__(self):
        return len(self.t)

    @property
    def length(self):
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def _pass_coords(lo, hi, spacing):
    coords = list(np.arange(lo, hi + 1e-9, spacing))
    if hi - coords[-1] > 1e-9:
        coords.append(hi)
    return coords


def lawnmower_waypoints(sector: Sector, spacing: float):
    """Boustrophedon sweep of ``sector`` with pass separation ``spacing``.

    Passes run along y and are stacked along x when ``spacing`` fits the
    sector width, otherwise the sweep is rotated.  Of the four possible
    starting corners, the one minimizing the walk from the entry plus the walk
    to the exit is chosen.  Returns an array of shape (2 * passes, 2).
    """
    if not spacing > 0:
        raise InvalidArgument("spacing must be positive")
    xmin, ymin, xmax, ymax = sector.bounds
    if spacing <= sector.width + 1e-9:
        across, along, swap = (xmin, xmax), (ymin, ymax), False
    elif spacing <= sector.height + 1e-9:
        across, along, swap = (ymin, ymax), (xmin, xmax), True
    else:
        raise InvalidArgument(f"spacing {spacing} exceeds both sector dimensions")

    offsets = _pass_coords(across[0], across[1], spacing)
    entry = np.asarray(sector.entry, dtype=float)
    exit_ = np.asarray(sector.exit, dtype=float)
    best = None
    for reverse_across in (False, True):
        cs = offsets[::-1] if reverse_across else offsets
        for start_high in (False, True):
            pts = []
            high = start_high
            for c in cs:
                a, b = (along[1], along[0]) if high else (along[0], along[1])
                pts.append((c, a))
                pts.append((c, b))
                high = not high
            pts = np.array(pts)
            if swap:
                pts = pts[:, ::-1]
            lead = np.linalg.norm(pts[0] - entry)
            cost = lead + np.linalg.norm(pts[-1] - exit_)
            # on ties, start at the corner nearest the entry
            if best is None or cost < best[0] - 1e-9 or (cost < best[0] + 1e-9 and lead < best[1] - 1e-9):
                best = (cost, lead, pts)
    return best[2]


def simulate_searcher(sector: Sector, waypoints, params: SearcherParams, terrain: TerrainGrid) -> SearcherPath:
    """Self-propelled particle walking from the sector entry through ``waypoints``.

    In waypoint mode the particle heads straight for the current waypoint.
    If the climb along that heading is steeper than
    ``slope_threshold * tenacity`` it switches to gradient mode and walks
    along the contour line instead.  The side is chosen toward the waypoint
    when gradient mode begins and kept while it lasts, so the walker follows
    a wall instead of dithering in front of it.  Every gradient-mode step raises tenacity by
    ``tenacity_growth``; capturing a waypoint resets it to 1.
    """
    wps = np.atleast_2d(np.asarray(waypoints, dtype=float))
    if len(wps) == 0:
        raise InvalidArgument("waypoints must be non-empty")
    step_len = params.speed * params.dt
    p = np.asarray(sector.entry, dtype=float).copy()
    ts, pts, modes, tens = [0.0], [p.copy()], [WAYPOINT], [1.0]
    tenacity = 1.0
    last = None
    k = 0
    # waypoints already within reach of the entry count as captured
    while k < len(wps) and np.linalg.norm(wps[k] - p) <= params.waypoint_radius:
        k += 1
    steps = 0
    while k < len(wps) and steps < params.max_steps:
        to_wp = wps[k] - p
        dist = np.linalg.norm(to_wp)
        heading = to_wp / dist
        grad = terrain.gradient_at(p)
        mode = WAYPOINT
        direction = heading
        if grad @ heading > params.slope_threshold * tenacity:
            gnorm = np.linalg.norm(grad)
            contour = np.array([-grad[1], grad[0]]) / gnorm
            # keep walking the same way along a wall; pick a side only on entry
            ref = last if last is not None else heading
            if contour @ ref < 0:
                contour = -contour
            last = contour
            direction = contour
            mode = GRADIENT
            tenacity += params.tenacity_growth
        if mode == WAYPOINT:
            last = None
        move = min(step_len, dist) if mode == WAYPOINT else step_len
        p = p + move * direction
        steps += 1
        ts.append(steps * params.dt)
        pts.append(p.copy())
        modes.append(mode)
        tens.append(tenacity)
        while k < len(wps) and np.linalg.norm(wps[k] - p) <= params.waypoint_radius:
            k += 1
            tenacity = 1.0
    return SearcherPath(t=np.array(ts), points=np.array(pts), modes=modes, tenacity=np.array(tens),
                        completed=k == len(wps), captured=k)
