"""Morton (Z-order) codes for 3D points."""

import numpy as np

from .errors import InvalidArgument

BITS = 21
_MAX = (1 << BITS) - 1


def _spread(v):
    # insert two zero bits between each of the low 21 bits
    v = v.astype(np.uint64) & np.uint64(0x1FFFFF)
    v = (v | (v << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
    return v


def quantize(points, lo, hi):
    """Integer lattice coordinates in ``[0, 2**21 - 1]`` per axis."""
    span = np.where(hi > lo, hi - lo, 1.0)
    q = np.floor((points - lo) / span * _MAX)
    return np.clip(q, 0, _MAX).astype(np.uint64)


def morton_codes(points, bounds):
    """63-bit interleaved codes; x occupies the lowest bit of each triple."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    if pts.size and (np.any(pts < lo - 1e-12) or np.any(pts > hi + 1e-12)):
        raise InvalidArgument("points must lie inside the Morton bounds")
    q = quantize(pts, lo, hi)
    return _spread(q[:, 0]) | (_spread(q[:, 1]) << np.uint64(1)) | (_spread(q[:, 2]) << np.uint64(2))


def morton_sort(points, bounds):
    """Stable permutation ordering ``points`` along the Z-order curve.

    ``bounds`` is ``(lo, hi)`` with two 3-vectors.
    """
    return np.argsort(morton_codes(points, bounds), kind="stable")
