"""Plot-ready CSV, JSON and PGM exports."""

from __future__ import annotations

import csv
import os

import numpy as np


def _parent(path):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)


def write_grid_csv(path, values, origin, cell_size):
    """Row j of the body holds cells with y index j; a comment header records the georeference."""
    _parent(path)
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write(f"# origin_x={origin[0]!r} origin_y={origin[1]!r} cell_size={cell_size!r}\n")
        w = csv.writer(fh)
        for row in values:
            w.writerow([repr(float(v)) for v in row])


def read_grid_csv(path):
    with open(path) as fh:
        header = fh.readline().lstrip("# ").split()
        meta = dict(item.split("=") for item in header)
        values = np.array([[float(v) for v in row] for row in csv.reader(fh)])
    return values, (float(meta["origin_x"]), float(meta["origin_y"])), float(meta["cell_size"])


def write_pgm(path, values):
    """8-bit binary PGM scaled from min to max, north (high y) at the top."""
    _parent(path)
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    scaled = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    img = np.round(scaled[::-1] * 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def write_searcher_paths_csv(path, paths):
    _parent(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["searcher", "t", "x", "y", "mode", "tenacity"])
        for k, p in enumerate(paths):
            ten = p.tenacity if p.tenacity is not None else np.ones(len(p.t))
            for t, (x, y), m, c in zip(p.t, p.points, p.modes, ten):
                w.writerow([k, repr(float(t)), repr(float(x)), repr(float(y)), m, repr(float(c))])


def write_posterior_csv(path, post):
    _parent(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "mean", "var"])
        for (x, y), m, v in zip(post.cells, post.mean, post.var):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(m)), repr(float(v))])


def write_polylines_csv(path, polylines):
    _parent(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["uav", "vertex", "x", "y", "agl"])
        for u, poly in enumerate(polylines):
            for k, p in enumerate(poly):
                w.writerow([u, k, *(repr(float(c)) for c in p)])


def write_trajectory_samples_csv(path, traj, terrain, per_segment=32):
    """Curve samples with both altitude above ground (agl) and absolute height (z)."""
    _parent(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["uav", "t", "x", "y", "z", "agl"])
        for u in range(traj.n_uav):
            pts = traj.sample(u, per_segment)
            ts = np.linspace(0.0, 1.0, len(pts))
            ground = terrain.height_at(pts[:, :2])
            for t, p, g in zip(ts, pts, np.atleast_1d(ground)):
                w.writerow([u, repr(float(t)), repr(float(p[0])), repr(float(p[1])), repr(float(g + p[2])),
                            repr(float(p[2]))])
