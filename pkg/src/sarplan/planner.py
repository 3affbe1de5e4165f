"""RRT and RRT* in (x, y, altitude-above-ground) space with cylindrical no-fly zones."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, PlanningFailure
from .terrain import TerrainGrid

GOAL_BIAS = 0.05


@dataclass(frozen=True)
class NoFlyZone:
    """Infinitely tall cylinder."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgument("zone radius must be positive")


def zone_arrays(zones):
    if not zones:
        return np.zeros((0, 2)), np.zeros(0)
    return (np.array([z.center for z in zones], dtype=float),
            np.array([z.radius for z in zones], dtype=float))


def points_in_zones(points, zones, margin=0.0):
    """Boolean mask of points (…, 2+) strictly inside any (inflated) zone."""
    pts = np.asarray(points, dtype=float)
    centers, radii = zone_arrays(zones)
    if len(radii) == 0:
        return np.zeros(pts.shape[:-1], dtype=bool)
    d2 = ((pts[..., None, :2] - centers) ** 2).sum(axis=-1)
    return np.any(d2 < (radii + margin) ** 2, axis=-1)


def penetration_depth(points, zones):
    """Depth inside the deepest zone for each point, 0 outside every zone."""
    pts = np.asarray(points, dtype=float)
    centers, radii = zone_arrays(zones)
    if len(radii) == 0:
        return np.zeros(pts.shape[:-1])
    d = np.sqrt(((pts[..., None, :2] - centers) ** 2).sum(axis=-1))
    return np.max(np.maximum(radii - d, 0.0), axis=-1)


class _Checker:
    def __init__(self, zones, clearance, margin, resolution):
        self.zones = list(zones)
        self.clearance = clearance
        self.margin = margin
        self.resolution = resolution

    def points_ok(self, pts):
        return ~points_in_zones(pts, self.zones, self.margin) & (pts[..., 2] >= self.clearance - 1e-12)

    def edges_ok(self, a, b):
        """Status of the straight edges ``a[i] -> b[i]`` (rows broadcast).

        Each edge is probed at distances 0, r, 2r, ... from its own start plus
        its end point, so the verdict for an edge never depends on which
        other edges are checked alongside it.
        """
        a, b = np.broadcast_arrays(np.atleast_2d(a), np.atleast_2d(b))
        if len(a) == 0:
            return np.zeros(0, dtype=bool)
        lens = np.linalg.norm(b - a, axis=1)
        n = max(2, int(math.ceil(lens.max() / self.resolution)) + 1)
        k = np.arange(n) * self.resolution
        s = np.where(lens[:, None] > 0, np.minimum(k[None, :], lens[:, None]) / np.where(lens > 0, lens, 1.0)[:, None], 0.0)
        s[:, -1] = 1.0
        pts = a[:, None, :] + s[:, :, None] * (b - a)[:, None, :]
        return np.all(self.points_ok(pts), axis=1)


def _validate(start, goal, terrain, zones, alt_bounds, clearance, margin):
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    xmin, ymin, xmax, ymax = terrain.bounds
    for name, p in (("start", start), ("goal", goal)):
        if p.shape != (3,):
            raise InvalidArgument(f"{name} must be a 3D point")
        if points_in_zones(p, zones, margin):
            raise InvalidArgument(f"{name} {p.tolist()} lies inside a no-fly zone")
        if p[2] < clearance:
            raise InvalidArgument(f"{name} altitude {p[2]} is below the terrain clearance {clearance}")
        if not (xmin <= p[0] <= xmax and ymin <= p[1] <= ymax):
            raise InvalidArgument(f"{name} lies outside the terrain")
    if alt_bounds[1] <= alt_bounds[0]:
        raise InvalidArgument("altitude range is empty")
    lo = np.array([xmin, ymin, alt_bounds[0]])
    hi = np.array([xmax, ymax, alt_bounds[1]])
    return start, goal, lo, hi


class _Tree:
    def __init__(self, root, capacity):
        self.nodes = np.empty((capacity, 3))
        self.parent = np.full(capacity, -1, dtype=np.intp)
        self.cost = np.zeros(capacity)
        self.children = [[] for _ in range(capacity)]
        self.nodes[0] = root
        self.n = 1

    def add(self, p, parent, cost):
        i = self.n
        self.nodes[i] = p
        self.parent[i] = parent
        self.cost[i] = cost
        self.children[parent].append(i)
        self.n += 1
        return i

    def reparent(self, i, new_parent, new_cost):
        self.children[self.parent[i]].remove(i)
        self.children[new_parent].append(i)
        self.parent[i] = new_parent
        delta = new_cost - self.cost[i]
        stack = [i]
        while stack:
            j = stack.pop()
            self.cost[j] += delta
            stack.extend(self.children[j])

    def path_to(self, i):
        out = []
        while i >= 0:
            out.append(self.nodes[i])
            i = self.parent[i]
        return np.array(out[::-1])


def _sample(rng, lo, hi, goal):
    # draw both numbers every iteration so RRT and RRT* consume the stream alike
    u = rng.random()
    s = rng.uniform(lo, hi)
    return goal if u < GOAL_BIAS else s


def _steer(frm, to, step):
    d = to - frm
    dist = np.linalg.norm(d)
    if dist <= step:
        return to.copy()
    return frm + d * (step / dist)


def rrt_plan(start, goal, terrain: TerrainGrid, zones, alt_bounds, step=10.0, max_nodes=5000, seed=0,
             clearance=2.0, margin=0.0):
    """Plain RRT; returns the first polyline that reaches within ``step`` of the goal.

    Points are ``(x, y, altitude above ground)``.  Samples are uniform over
    the terrain extent times ``alt_bounds``.  An edge is accepted when every
    point spaced ``step / 4`` along it is outside all zones (inflated by
    ``margin``) and at least ``clearance`` above the ground.
    """
    start, goal, lo, hi = _validate(start, goal, terrain, zones, alt_bounds, clearance, margin)
    check = _Checker(zones, clearance, margin, step / 4.0)
    rng = np.random.default_rng(seed)
    tree = _Tree(start, max_nodes + 1)
    if np.linalg.norm(goal - start) <= step and check.edges_ok(start, goal)[0]:
        return np.array([start, goal])
    for _ in range(50 * max_nodes):
        if tree.n >= max_nodes:
            break
        target = _sample(rng, lo, hi, goal)
        d = np.linalg.norm(tree.nodes[:tree.n] - target, axis=1)
        near = int(np.argmin(d))
        new = _steer(tree.nodes[near], target, step)
        if not check.edges_ok(tree.nodes[near], new)[0]:
            continue
        i = tree.add(new, near, tree.cost[near] + np.linalg.norm(new - tree.nodes[near]))
        if np.linalg.norm(goal - new) <= step and check.edges_ok(new, goal)[0]:
            path = tree.path_to(i)
            return path if np.array_equal(new, goal) else np.vstack([path, goal])
    raise PlanningFailure("RRT did not reach the goal", tree.n)


def rrt_star_plan(start, goal, terrain: TerrainGrid, zones, alt_bounds, step=10.0, max_nodes=5000, seed=0,
                  clearance=2.0, margin=0.0):
    """RRT* grown to ``max_nodes`` nodes; returns the shortest goal connection found.

    Same sampling stream and steering as :func:`rrt_plan`, so for equal seeds
    its tree contains RRT's tree and the returned path is never longer.  The
    rewiring radius is ``max(step, gamma * (log n / n) ** (1/3))`` with gamma
    from the free-space volume bound.
    """
    start, goal, lo, hi = _validate(start, goal, terrain, zones, alt_bounds, clearance, margin)
    check = _Checker(zones, clearance, margin, step / 4.0)
    rng = np.random.default_rng(seed)
    tree = _Tree(start, max_nodes + 1)
    volume = float(np.prod(hi - lo))
    gamma = 2.0 * (1.0 + 1.0 / 3.0) ** (1.0 / 3.0) * (volume / (4.0 / 3.0 * math.pi)) ** (1.0 / 3.0)

    best_cost, best_node = math.inf, -1
    if np.linalg.norm(goal - start) <= step and check.edges_ok(start, goal)[0]:
        best_cost, best_node = float(np.linalg.norm(goal - start)), 0
    goal_links = {}

    for _ in range(50 * max_nodes):
        if tree.n >= max_nodes:
            break
        target = _sample(rng, lo, hi, goal)
        nodes = tree.nodes[:tree.n]
        d = np.linalg.norm(nodes - target, axis=1)
        nearest = int(np.argmin(d))
        new = _steer(nodes[nearest], target, step)
        if not check.edges_ok(nodes[nearest], new)[0]:
            continue
        n = tree.n
        radius = max(step, gamma * (math.log(n + 1) / (n + 1)) ** (1.0 / 3.0))
        dn = np.linalg.norm(nodes - new, axis=1)
        near = np.flatnonzero(dn <= radius)
        if nearest not in near:
            near = np.append(near, nearest)
        through = tree.cost[near] + dn[near]
        order = np.argsort(through, kind="stable")
        ok = check.edges_ok(nodes[near[order]], new)
        first = order[np.argmax(ok)]
        parent = int(near[first])
        i = tree.add(new, parent, float(through[first]))

        # rewire neighbours through the new node
        others = near[near != parent]
        if len(others):
            new_costs = tree.cost[i] + dn[others]
            better = new_costs < tree.cost[others] - 1e-12
            cand = others[better]
            if len(cand):
                free = check.edges_ok(new, tree.nodes[cand])
                for j, c in zip(cand[free], new_costs[better][free]):
                    tree.reparent(int(j), i, float(c))

        gd = np.linalg.norm(goal - new)
        if gd <= step and check.edges_ok(new, goal)[0]:
            goal_links[i] = gd
        for j, link in goal_links.items():
            c = tree.cost[j] + link
            if c < best_cost:
                best_cost, best_node = c, j
    if best_node < 0:
        raise PlanningFailure("RRT* did not reach the goal", tree.n)
    path = tree.path_to(best_node)
    if np.linalg.norm(path[-1] - goal) > 0:
        path = np.vstack([path, goal])
    return path


def polyline_length(points):
    return float(np.linalg.norm(np.diff(np.asarray(points, dtype=float), axis=0), axis=1).sum())


def polyline_clear(points, zones, clearance=2.0, resolution=0.1):
    """True when no point of the polyline, checked every ``resolution`` m, is in a zone or too low."""
    pts = np.asarray(points, dtype=float)
    check = _Checker(zones, clearance, 0.0, resolution)
    return all(check.edges_ok(a, b[None])[0] for a, b in zip(pts[:-1], pts[1:]))
