"""Composite cubic Bezier paths for a UAV team.

Control points are ``(x, y, altitude above ground)``.  Each UAV owns
``3K + 1`` points forming ``K`` cubic segments that share junction points;
the first and last points are the sector entry and exit and never move.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import InvalidArgument

_BERN = np.array([[1, 0, 0, 0], [-3, 3, 0, 0], [3, -6, 3, 0], [-1, 3, -3, 1]], dtype=float)


def bernstein(u):
    """Cubic Bernstein weights, shape ``u.shape + (4,)``."""
    u = np.asarray(u, dtype=float)[..., None]
    return np.concatenate([(1 - u) ** 3, 3 * u * (1 - u) ** 2, 3 * u**2 * (1 - u), u**3], axis=-1)


def bernstein_deriv(u):
    u = np.asarray(u, dtype=float)[..., None]
    return np.concatenate([-3 * (1 - u) ** 2, 3 * (1 - u) ** 2 - 6 * u * (1 - u),
                           6 * u * (1 - u) - 3 * u**2, 3 * u**2], axis=-1)


def bernstein_deriv2(u):
    u = np.asarray(u, dtype=float)[..., None]
    return np.concatenate([6 * (1 - u), -12 * (1 - u) + 6 * u, 6 * (1 - u) - 12 * u, 6 * u], axis=-1)


def segments(control):
    """(K, 4, 3) view of the segments of one UAV's control sequence."""
    control = np.asarray(control, dtype=float)
    K = (len(control) - 1) // 3
    idx = 3 * np.arange(K)[:, None] + np.arange(4)[None, :]
    return control[idx]


def _locate(t, K):
    t = np.asarray(t, dtype=float)
    seg = np.minimum(np.floor(t * K).astype(np.intp), K - 1)
    return seg, t * K - seg


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def cubic_arc_length(pieces, sub=4):
    """Arc length of cubics by composite Gauss-Legendre quadrature.

    Each piece is cut into ``sub`` equal parameter intervals with 12 nodes
    each; the speed of a cubic is smooth, so this is accurate to roughly
    1e-9 relative except near cusps, where it degrades gracefully.
    """
    pieces = np.asarray(pieces, dtype=float).reshape(-1, 4, 3)
    if len(pieces) == 0:
        return 0.0
    edges = np.arange(sub)[:, None] / sub
    u = (edges + (_GL_X[None, :] + 1.0) / (2 * sub)).ravel()
    w = np.tile(_GL_W / (2 * sub), sub)
    # hodograph: a quadratic Bezier on the control-point differences
    legs = 3.0 * np.diff(pieces, axis=1)
    quad = np.stack([(1 - u) ** 2, 2 * u * (1 - u), u**2], axis=1)
    vel = np.einsum("uk,pkd->pud", quad, legs)
    return float((np.linalg.norm(vel, axis=2) * w).sum())


class TrajectorySet:
    """Control points for every UAV, shape ``(n_uav, 3K + 1, 3)``."""

    def __init__(self, control, alt_bounds=(0.0, np.inf), check=True):
        control = np.array(control, dtype=float)
        if control.ndim == 2:
            control = control[None]
        if control.size == 0:
            control = control.reshape(0, control.shape[1] if control.ndim == 3 else 4, 3)
        if control.ndim != 3 or control.shape[2] != 3:
            raise InvalidArgument(f"control points must have shape (n_uav, 3K+1, 3), got {control.shape}")
        n_pts = control.shape[1]
        if n_pts < 4 or (n_pts - 1) % 3:
            raise InvalidArgument(f"each UAV needs 3K+1 control points, got {n_pts}")
        self.control = control
        self.alt_bounds = (float(alt_bounds[0]), float(alt_bounds[1]))
        self.endpoints = control[:, [0, -1]].copy()
        if check and len(control):
            z = control[:, :, 2]
            lo, hi = self.alt_bounds
            if np.any(z < lo - 1e-9) or np.any(z > hi + 1e-9):
                raise InvalidArgument("control-point altitude outside bounds")

    @classmethod
    def empty(cls, segments=4, alt_bounds=(0.0, np.inf)):
        return cls(np.zeros((0, 3 * segments + 1, 3)), alt_bounds)

    @property
    def n_uav(self):
        return self.control.shape[0]

    @property
    def K(self):
        return (self.control.shape[1] - 1) // 3

    def copy(self):
        new = TrajectorySet(self.control.copy(), self.alt_bounds, check=False)
        new.endpoints = self.endpoints.copy()
        return new

    def eval(self, uav, t):
        """Position at global parameter ``t`` in [0, 1] (scalar or array)."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > 1):
            raise InvalidArgument("t must lie in [0, 1]")
        segs = segments(self.control[uav])
        seg, u = _locate(t_arr, self.K)
        return np.einsum("...k,...kd->...d", bernstein(u), segs[seg])

    def derivative(self, uav, t, order=1):
        """Derivative with respect to the global parameter ``t``."""
        segs = segments(self.control[uav])
        seg, u = _locate(np.asarray(t, dtype=float), self.K)
        basis = bernstein_deriv(u) if order == 1 else bernstein_deriv2(u)
        return self.K**order * np.einsum("...k,...kd->...d", basis, segs[seg])

    def sample(self, uav, per_segment=32):
        """Points at uniform parameter spacing, ``K * per_segment + 1`` of them."""
        segs = segments(self.control[uav])
        u = np.arange(per_segment) / per_segment
        pts = np.einsum("uk,skd->sud", bernstein(u), segs).reshape(-1, 3)
        return np.vstack([pts, self.control[uav, -1]])

    def dense_sample(self, uav, resolution):
        """Samples no farther apart than ``resolution`` along the curve.

        Uses the bound |dC/du| <= 3 * longest control leg.
        """
        legs = np.linalg.norm(np.diff(self.control[uav], axis=0), axis=1)
        n = max(1, int(np.ceil(3.0 * legs.max() / resolution)) + 1) if legs.size else 1
        return self.sample(uav, per_segment=n)

    def resample(self, uav, spacing, per_segment=32):
        """Points every ``spacing`` meters of arc length from the start."""
        pts = self.sample(uav, per_segment)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.arange(0.0, s[-1] + 1e-9, spacing)
        return np.column_stack([np.interp(targets, s, pts[:, d]) for d in range(3)])

    def arc_length(self, uav):
        return cubic_arc_length(segments(self.control[uav]))

    def total_length(self):
        return sum(self.arc_length(u) for u in range(self.n_uav))

    def smoothness(self):
        return smoothness(self)

    # parameter vector: every control point except the pinned endpoints
    def free_params(self):
        return self.control[:, 1:-1].reshape(-1).copy()

    def with_free_params(self, vec, project=False):
        control = self.control.copy()
        control[:, 1:-1] = np.asarray(vec, dtype=float).reshape(self.n_uav, -1, 3)
        new = TrajectorySet(control, self.alt_bounds, check=False)
        new.endpoints = self.endpoints.copy()
        return new.project() if project else new

    def project(self):
        """Pin endpoints and clamp altitudes into bounds, in place."""
        self.control[:, [0, -1]] = self.endpoints
        lo, hi = self.alt_bounds
        np.clip(self.control[:, :, 2], lo, hi, out=self.control[:, :, 2])
        return self

    def to_dict(self):
        return {
            "alt_bounds": list(self.alt_bounds),
            "uavs": [self.control[u].tolist() for u in range(self.n_uav)],
        }

    @classmethod
    def from_dict(cls, data):
        uavs = data["uavs"]
        alt_bounds = tuple(data.get("alt_bounds", (0.0, np.inf)))
        if not uavs:
            return cls.empty(alt_bounds=alt_bounds)
        return cls(np.array(uavs, dtype=float), alt_bounds)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def eval_curve(traj: TrajectorySet, uav: int, t):
    return traj.eval(uav, t)


def arc_length(traj: TrajectorySet, uav: int) -> float:
    return traj.arc_length(uav)


def smoothness(traj: TrajectorySet) -> float:
    """Sum of squared second differences of every UAV's control sequence."""
    if traj.n_uav == 0:
        return 0.0
    d2 = traj.control[:, 2:] - 2 * traj.control[:, 1:-1] + traj.control[:, :-2]
    return float(np.sum(d2**2))


def _basis_matrix(t, K):
    seg, u = _locate(t, K)
    B = np.zeros((len(t), 3 * K + 1))
    w = bernstein(u)
    for k in range(4):
        np.add.at(B, (np.arange(len(t)), 3 * seg + k), w[:, k])
    return B


def _second_difference(n):
    D = np.zeros((n - 2, n))
    for i in range(n - 2):
        D[i, i:i + 3] = (1.0, -2.0, 1.0)
    return D


class PolylineFit:
    def __init__(self, control, rms, params):
        self.control = control
        self.rms = rms
        self.params = params


def _refine(pts, control, t, K, D, sq, max_iters):
    """Joint Gauss-Newton on interior control points and interior vertex parameters."""
    from scipy.optimize import least_squares

    n = len(pts)
    n_free = len(control) - 2
    first, last = control[0], control[-1]

    def unpack(x):
        c = np.vstack([first, x[:3 * n_free].reshape(n_free, 3), last])
        tt = np.concatenate([[0.0], x[3 * n_free:], [1.0]])
        return c, tt

    def residuals(x):
        c, tt = unpack(x)
        traj = TrajectorySet(c[None], check=False)
        r = (traj.eval(0, tt) - pts).ravel()
        return np.concatenate([r, sq * (D @ c).ravel()])

    def jacobian(x):
        c, tt = unpack(x)
        traj = TrajectorySet(c[None], check=False)
        B = _basis_matrix(tt, K)[:, 1:-1]
        J = np.zeros((3 * n + 3 * len(D), len(x)))
        for d in range(3):
            J[d:3 * n:3, d:3 * n_free:3] = B
            J[3 * n + d::3, d:3 * n_free:3] = sq * D[:, 1:-1]
        d1 = traj.derivative(0, tt, 1)[1:-1]
        rows = 3 * np.arange(1, n - 1)
        cols = 3 * n_free + np.arange(n - 2)
        for d in range(3):
            J[rows + d, cols] = d1[:, d]
        return J

    x0 = np.concatenate([control[1:-1].ravel(), t[1:-1]])
    lower = np.concatenate([np.full(3 * n_free, -np.inf), np.zeros(n - 2)])
    upper = np.concatenate([np.full(3 * n_free, np.inf), np.ones(n - 2)])
    sol = least_squares(residuals, x0, jac=jacobian, bounds=(lower, upper), method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=50 * max_iters)
    c, tt = unpack(sol.x)
    # free parameters may abandon a segment, leaving its control points to the
    # tiny regularizer; keep such fits out
    poly = np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()
    tame = np.all(np.diff(tt) >= 0) and np.linalg.norm(np.diff(c, axis=0), axis=1).sum() <= 3.0 * poly
    if tame and sol.cost <= 0.5 * np.sum(residuals(x0) ** 2):
        return c, tt
    return control, t


def fit_to_polyline(points, segments_count, reparam_iters=20, reg=1e-14) -> PolylineFit:
    """Least-squares composite cubic through a polyline's vertices.

    Vertices get chord-length parameters; the end vertices are interpolated
    exactly.  A tiny second-difference penalty (weight ``reg``) picks evenly
    spaced control points wherever the data leave them undetermined.  After
    the first solve, the interior vertex parameters
    and the control points are refined jointly by bounded Gauss-Newton
    (``reparam_iters`` = 0 keeps the plain chord-length fit).  The refined
    fit is discarded in favour of the chord-length one if its parameters stop
    being monotone or its control polygon grows past three times the
    polyline length.
    """
    pts = np.asarray(points, dtype=float)
    K = int(segments_count)
    if pts.ndim != 2 or len(pts) < 2:
        raise InvalidArgument("need at least two polyline points")
    if K < 1:
        raise InvalidArgument("need at least one segment")
    if K > len(pts) - 1:
        raise InvalidArgument(f"{K} segments is underdetermined for {len(pts) - 1} polyline edges")
    n_ctrl = 3 * K + 1
    first, last = pts[0], pts[-1]
    chord = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = chord.sum()
    if total == 0:
        control = np.repeat(first[None], n_ctrl, axis=0)
        return PolylineFit(control, 0.0, np.zeros(len(pts)))
    t = np.concatenate([[0.0], np.cumsum(chord)]) / total
    t[-1] = 1.0

    D = _second_difference(n_ctrl)
    sq = np.sqrt(reg)

    def solve(t):
        B = _basis_matrix(t, K)
        rhs = pts - np.outer(B[:, 0], first) - np.outer(B[:, -1], last)
        Dfree = D[:, 1:-1]
        drhs = -np.outer(D[:, 0], first) - np.outer(D[:, -1], last)
        A = np.vstack([B[:, 1:-1], sq * Dfree])
        b = np.vstack([rhs, sq * drhs])
        free = np.linalg.lstsq(A, b, rcond=None)[0]
        return np.vstack([first, free, last])

    control = solve(t)
    if reparam_iters > 0 and len(pts) > 2:
        control, t = _refine(pts, control, t, K, D, sq, reparam_iters)

    resid = TrajectorySet(control[None], check=False).eval(0, t) - pts
    rms = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    return PolylineFit(control, rms, t)
