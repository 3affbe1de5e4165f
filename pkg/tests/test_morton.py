import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import morton_oracle
from sarplan.errors import InvalidArgument
from sarplan.morton import morton_codes, morton_sort, quantize

BOX = (np.zeros(3), np.array([100.0, 50.0, 20.0]))


def test_minimum_corner_has_code_zero():
    pts = np.array([[30.0, 20.0, 5.0], [0.0, 0.0, 0.0]])
    assert morton_codes(pts, BOX)[1] == 0
    assert morton_sort(pts, BOX)[0] == 1


def test_sorted_pair_is_identity():
    pts = np.array([[1.0, 1.0, 1.0], [90.0, 40.0, 15.0]])
    assert list(morton_sort(pts, BOX)) == [0, 1]


@given(st.lists(st.tuples(st.integers(0, 2**21 - 1), st.integers(0, 2**21 - 1), st.integers(0, 2**21 - 1)),
                min_size=1, max_size=20))
def test_codes_match_bit_loop_interleave(cells):
    q = np.array(cells, dtype=float)
    top = np.full(3, 2.0**21 - 1)
    # lattice points map onto themselves when the box spans [0, 2**21 - 1]
    codes = morton_codes(q, (np.zeros(3), top))
    assert [int(c) for c in codes] == [morton_oracle(*map(int, c)) for c in cells]


def test_codes_fit_in_63_bits():
    pts = np.array([BOX[1]])
    assert int(morton_codes(pts, BOX)[0]) == 2**63 - 1


def test_quantization_range():
    q = quantize(np.array([BOX[0], BOX[1]]), *BOX)
    assert q.min() == 0 and q.max() == 2**21 - 1


def test_out_of_bounds_rejected():
    with pytest.raises(InvalidArgument):
        morton_codes(np.array([[101.0, 0.0, 0.0]]), BOX)


def test_stable_for_ties():
    pts = np.array([[5.0, 5.0, 5.0]] * 4 + [[0.0, 0.0, 0.0]])
    assert list(morton_sort(pts, BOX)) == [4, 0, 1, 2, 3]


def test_locality_of_adjacent_pairs():
    rng = np.random.default_rng(0)
    pts = rng.uniform(BOX[0], BOX[1], (10_000, 3))
    order = morton_sort(pts, BOX)
    s = pts[order]
    adjacent = np.linalg.norm(np.diff(s, axis=0), axis=1).mean()
    shuffled = pts[rng.permutation(len(pts))]
    random_pairs = np.linalg.norm(np.diff(shuffled, axis=0), axis=1).mean()
    assert adjacent < random_pairs
