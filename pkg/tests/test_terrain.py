import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import bilinear_oracle
from sarplan.errors import InvalidArgument
from sarplan.terrain import TerrainGrid, generate_terrain, gradient_at, height_at


def random_grid(seed, shape=(7, 9), cell=10.0, origin=(3.0, -5.0)):
    rng = np.random.default_rng(seed)
    return TerrainGrid(origin=origin, cell_size=cell, heights=rng.normal(0, 5, shape))


def test_full_scale_grid_has_forty_by_forty_cells():
    g = generate_terrain(7, extent=(400, 400), cell_size=10)
    assert g.shape == (40, 40)
    assert np.allclose(g.extent, [400, 400])


def test_non_square_extent():
    g = generate_terrain(1, extent=(300, 120), cell_size=10)
    assert g.shape == (12, 30)


def test_zero_amplitude_is_flat():
    g = generate_terrain(3, amplitude=0)
    assert np.all(g.heights == g.heights[0, 0])


def test_generation_is_deterministic():
    a = generate_terrain(7)
    b = generate_terrain(7)
    assert np.array_equal(a.heights, b.heights)
    assert not np.array_equal(a.heights, generate_terrain(8).heights)


@pytest.mark.parametrize("amp", [1.0, 20.0, 55.0])
def test_elevation_range_bounded_by_twice_amplitude(amp):
    g = generate_terrain(11, extent=(200, 200), amplitude=amp)
    assert g.heights.max() - g.heights.min() <= 2 * amp + 1e-9


@pytest.mark.parametrize("kwargs", [dict(cell_size=0), dict(cell_size=-1), dict(extent=(0, 100)),
                                    dict(extent=(105, 100)), dict(roughness=1.5)])
def test_invalid_generation_arguments(kwargs):
    with pytest.raises(InvalidArgument):
        generate_terrain(0, **kwargs)


def test_grid_invariants_enforced():
    with pytest.raises(InvalidArgument):
        TerrainGrid((0, 0), 10.0, np.zeros((1, 5)))
    with pytest.raises(InvalidArgument):
        TerrainGrid((0, 0), 0.0, np.zeros((3, 3)))
    with pytest.raises(InvalidArgument):
        TerrainGrid((0, 0), 1.0, np.array([[0, 1], [np.nan, 2]]))


def test_exact_at_cell_centers():
    g = random_grid(0)
    centers = g.cell_centers()
    assert np.allclose(height_at(g, centers), g.heights.ravel(), atol=1e-12)


def test_midpoint_of_adjacent_centers_is_mean():
    g = random_grid(1)
    c = g.cell_centers().reshape(7, 9, 2)
    mid = (c[2, 3] + c[2, 4]) / 2
    assert height_at(g, mid) == pytest.approx((g.heights[2, 3] + g.heights[2, 4]) / 2, abs=1e-12)
    mid = (c[2, 3] + c[3, 3]) / 2
    assert height_at(g, mid) == pytest.approx((g.heights[2, 3] + g.heights[3, 3]) / 2, abs=1e-12)


def test_against_independent_bilinear_oracle():
    g = random_grid(2)
    rng = np.random.default_rng(5)
    xmin, ymin, xmax, ymax = g.bounds
    pts = rng.uniform([xmin - 20, ymin - 20], [xmax + 20, ymax + 20], (1000, 2))
    ours = height_at(g, pts)
    ref = np.array([bilinear_oracle(g.heights, g.origin, g.cell_size, x, y) for x, y in pts])
    assert np.max(np.abs(ours - ref)) < 1e-9


def test_flat_grid_has_zero_gradient():
    g = TerrainGrid((0, 0), 10.0, np.full((5, 5), 3.0))
    pts = np.random.default_rng(0).uniform(0, 50, (50, 2))
    assert np.all(gradient_at(g, pts) == 0)


def test_plane_gradient():
    x = (np.arange(8) + 0.5) * 10.0
    heights = np.tile(0.2 * x, (6, 1))
    g = TerrainGrid((0, 0), 10.0, heights)
    pts = np.random.default_rng(1).uniform([6, 6], [74, 54], (100, 2))
    assert np.allclose(gradient_at(g, pts), [0.2, 0.0], atol=1e-12)


def test_gradient_matches_finite_differences():
    g = random_grid(3)
    rng = np.random.default_rng(9)
    # interior points away from cell-center lines, where the surface is smooth
    c = g.cell_centers().reshape(7, 9, 2)
    base = c[1:-2, 1:-2].reshape(-1, 2)
    pts = base[rng.integers(0, len(base), 100)] + rng.uniform(0.5, 9.5, (100, 2))
    h = 1e-3
    fd = np.column_stack([
        (height_at(g, pts + [h, 0]) - height_at(g, pts - [h, 0])) / (2 * h),
        (height_at(g, pts + [0, h]) - height_at(g, pts - [0, h])) / (2 * h),
    ])
    an = gradient_at(g, pts)
    rel = np.linalg.norm(fd - an, axis=1) / np.maximum(np.linalg.norm(an, axis=1), 1e-12)
    assert np.max(rel) < 1e-4


@given(st.integers(0, 10_000), st.floats(-50, 150), st.floats(-50, 150),
       st.floats(-1e-6, 1e-6), st.floats(-1e-6, 1e-6))
def test_height_is_lipschitz(seed, x, y, dx, dy):
    g = random_grid(seed)
    lip = max(np.abs(np.diff(g.heights, axis=0)).max(), np.abs(np.diff(g.heights, axis=1)).max()) / g.cell_size
    p = np.array([x, y])
    d = np.array([dx, dy])
    diff = abs(height_at(g, p + d) - height_at(g, p))
    # the bilinear surface is Lipschitz in each axis separately, so the sum of |dx|, |dy| bounds it
    assert diff <= lip * (abs(dx) + abs(dy)) + 1e-12
    assert diff <= np.sqrt(2) * lip * np.linalg.norm(d) + 1e-12


def test_border_queries_clamp():
    g = random_grid(4)
    xmin, ymin, xmax, ymax = g.bounds
    assert height_at(g, [xmin - 100, ymin - 100]) == pytest.approx(g.heights[0, 0])
    assert height_at(g, [xmax + 100, ymax + 100]) == pytest.approx(g.heights[-1, -1])
