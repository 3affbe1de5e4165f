"""Synthetic heightfields and bilinear queries on cell-centered lattices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


def bilinear(values, origin, cell_size, points, with_gradient=False):
    """Bilinear interpolation of cell-centered ``values`` at ``points``.

    ``values`` has shape ``(ny, nx)``; row index is y.  Points outside the
    lattice of cell centers clamp to the border, where the gradient along the
    clamped axis is zero.

    Returns the interpolated values, and when ``with_gradient`` is set, also
    the gradient of the bilinear surface with shape ``points.shape``.
    """
    pts = np.asarray(points, dtype=float)
    ny, nx = values.shape
    u = (pts[..., 0] - origin[0]) / cell_size - 0.5
    v = (pts[..., 1] - origin[1]) / cell_size - 0.5
    uc = np.clip(u, 0.0, nx - 1)
    vc = np.clip(v, 0.0, ny - 1)
    i0 = np.minimum(np.floor(uc).astype(np.intp), nx - 2)
    j0 = np.minimum(np.floor(vc).astype(np.intp), ny - 2)
    fx = uc - i0
    fy = vc - j0
    h00 = values[j0, i0]
    h10 = values[j0, i0 + 1]
    h01 = values[j0 + 1, i0]
    h11 = values[j0 + 1, i0 + 1]
    bottom = h00 + fx * (h10 - h00)
    top = h01 + fx * (h11 - h01)
    out = bottom + fy * (top - bottom)
    if not with_gradient:
        return out
    dx = ((1 - fy) * (h10 - h00) + fy * (h11 - h01)) / cell_size
    dy = (top - bottom) / cell_size
    dx = np.where((u < 0) | (u > nx - 1), 0.0, dx)
    dy = np.where((v < 0) | (v > ny - 1), 0.0, dy)
    return out, np.stack([dx, dy], axis=-1)


@dataclass(frozen=True)
class TerrainGrid:
    """Cell-centered heightfield.

    ``heights[j, i]`` is the elevation at the center of the cell in row ``j``
    (y axis) and column ``i`` (x axis), i.e. at
    ``origin + ((i + 0.5) * cell_size, (j + 0.5) * cell_size)``.
    """

    origin: np.ndarray
    cell_size: float
    heights: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(2)
        heights = np.array(self.heights, dtype=float)
        if heights.ndim != 2 or min(heights.shape) < 2:
            raise InvalidArgument(f"heights must be at least 2x2, got {heights.shape}")
        if not self.cell_size > 0:
            raise InvalidArgument("cell_size must be positive")
        if not np.all(np.isfinite(heights)):
            raise InvalidArgument("heights must be finite")
        heights.setflags(write=False)
        origin.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def shape(self):
        return self.heights.shape

    @property
    def extent(self):
        ny, nx = self.heights.shape
        return np.array([nx * self.cell_size, ny * self.cell_size])

    @property
    def bounds(self):
        """(xmin, ymin, xmax, ymax) of the covered area."""
        lo = self.origin
        hi = self.origin + self.extent
        return (lo[0], lo[1], hi[0], hi[1])

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        xmin, ymin, xmax, ymax = self.bounds
        return (p[..., 0] >= xmin) & (p[..., 0] <= xmax) & (p[..., 1] >= ymin) & (p[..., 1] <= ymax)

    def cell_centers(self):
        """Array of shape (ny*nx, 2) with cell centers in row-major order."""
        ny, nx = self.heights.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.cell_size
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.cell_size
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def cell_index(self, p):
        """(row, col) of the cell containing ``p``, clamped to the grid."""
        p = np.asarray(p, dtype=float)
        ny, nx = self.heights.shape
        i = np.clip(np.floor((p[..., 0] - self.origin[0]) / self.cell_size).astype(np.intp), 0, nx - 1)
        j = np.clip(np.floor((p[..., 1] - self.origin[1]) / self.cell_size).astype(np.intp), 0, ny - 1)
        return j, i

    def height_at(self, p):
        return bilinear(self.heights, self.origin, self.cell_size, p)

    def gradient_at(self, p):
        return bilinear(self.heights, self.origin, self.cell_size, p, with_gradient=True)[1]


def height_at(grid: TerrainGrid, p):
    return grid.height_at(p)


def gradient_at(grid: TerrainGrid, p):
    return grid.gradient_at(p)


def _diamond_square(n_levels, roughness, rng):
    size = 2**n_levels + 1
    h = np.zeros((size, size))
    h[0, 0], h[0, -1], h[-1, 0], h[-1, -1] = rng.uniform(-1.0, 1.0, 4)
    scale = 1.0
    step = size - 1
    while step > 1:
        half = step // 2
        # diamond step: centers of squares
        avg = (h[0:-1:step, 0:-1:step] + h[0:-1:step, step::step]
               + h[step::step, 0:-1:step] + h[step::step, step::step]) / 4.0
        h[half::step, half::step] = avg + scale * rng.uniform(-1.0, 1.0, avg.shape)
        # square step: edge midpoints, averaging the in-bounds neighbours
        padded = np.pad(h, half, constant_values=np.nan)
        for r0, c0 in ((0, half), (half, 0)):
            rows = np.arange(r0, size, step)
            cols = np.arange(c0, size, step)
            rr, cc = np.meshgrid(rows + half, cols + half, indexing="ij")
            nb = np.stack([padded[rr - half, cc], padded[rr + half, cc],
                           padded[rr, cc - half], padded[rr, cc + half]])
            mean = np.nanmean(nb, axis=0)
            h[np.ix_(rows, cols)] = mean + scale * rng.uniform(-1.0, 1.0, mean.shape)
        scale *= roughness
        step = half
    return h


def generate_terrain(seed, extent=(400.0, 400.0), cell_size=10.0, amplitude=20.0,
                     roughness=0.55, origin=(0.0, 0.0)) -> TerrainGrid:
    """Random heightfield by diamond-square midpoint displacement.

    The raw field is resampled onto the cell-centered lattice and rescaled to
    ``[-amplitude, amplitude]``.  ``roughness`` is the per-level decay of the
    displacement magnitude; small values give smooth hills.
    """
    if not cell_size > 0:
        raise InvalidArgument("cell_size must be positive")
    extent = np.asarray(extent, dtype=float)
    if extent.shape != (2,) or np.any(extent <= 0):
        raise InvalidArgument("extent must be two positive lengths")
    counts = extent / cell_size
    if np.any(np.abs(counts - np.round(counts)) > 1e-9 * np.maximum(counts, 1)):
        raise InvalidArgument("extent must be a multiple of cell_size")
    nx, ny = (int(round(c)) for c in counts)
    if nx < 2 or ny < 2:
        raise InvalidArgument("terrain needs at least 2x2 cells")
    if amplitude < 0:
        raise InvalidArgument("amplitude must be non-negative")
    if not 0 < roughness < 1:
        raise InvalidArgument("roughness must lie in (0, 1)")

    rng = np.random.default_rng(seed)
    n_levels = max(1, math.ceil(math.log2(max(nx, ny))))
    raw = _diamond_square(n_levels, roughness, rng)
    span = raw.shape[0] - 1
    # sample the raw field at the cell centers, mapping the extent onto [0, span]
    longest = max(nx, ny)
    xs = (np.arange(nx) + 0.5) / longest * span
    ys = (np.arange(ny) + 0.5) / longest * span
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx, gy], axis=-1)
    field = bilinear(raw, (-0.5, -0.5), 1.0, pts)

    lo, hi = field.min(), field.max()
    if amplitude == 0 or hi - lo == 0:
        heights = np.zeros_like(field)
    else:
        heights = amplitude * (2.0 * (field - lo) / (hi - lo) - 1.0)
    return TerrainGrid(origin=np.asarray(origin, dtype=float), cell_size=cell_size, heights=heights)
