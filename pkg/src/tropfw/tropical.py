"""Max-plus arithmetic on the tropical projective torus.

Points are length-q vectors of finite reals considered up to translation by
the all-ones vector.  All functions accept plain sequences, numpy arrays, or
:class:`TropicalPoint`; exact types (int, Fraction) are preserved end to end
because reductions go through numpy object arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch

METRICS = ("sym", "min_plus", "max_plus")

#: tolerance under which two points are considered equal in the torus
TORUS_EQ_TOL = 1e-9


def as_vector(x) -> np.ndarray:
    """Coerce a point-like object to a 1-D numpy array (object dtype for exact scalars)."""
    if isinstance(x, TropicalPoint):
        x = x.coords
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a nonempty 1-D vector, got shape {arr.shape}")
    return arr


def _pair(x, y):
    xv, yv = as_vector(x), as_vector(y)
    if xv.shape != yv.shape:
        raise DimensionMismatch(f"length mismatch: {xv.shape[0]} vs {yv.shape[0]}")
    return xv, yv


def _scalar(v):
    return v.item() if isinstance(v, np.generic) else v


@dataclass(frozen=True)
class TropicalPoint:
    """A representative of a point of the tropical projective torus."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(self.coords)
        if not coords:
            raise ValueError("a tropical point needs at least one coordinate")
        for c in coords:
            if isinstance(c, float) and not math.isfinite(c):
                raise ValueError(f"coordinates must be finite, got {c!r}")
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def canonical(self) -> "TropicalPoint":
        return canonicalize(self.coords)

    def torus_eq(self, other, tol: float = TORUS_EQ_TOL) -> bool:
        return torus_equal(self, other, tol=tol)


def d_tr(x, y):
    """Symmetric tropical distance: max(y-x) - min(y-x)."""
    xv, yv = _pair(x, y)
    diff = yv - xv
    return _scalar(diff.max(axis=-1) - diff.min(axis=-1))


def d_min_plus(x, y):
    """Asymmetric distance sum(y-x) - q*min(y-x)."""
    xv, yv = _pair(x, y)
    diff = yv - xv
    q = diff.shape[-1]
    return _scalar(diff.sum(axis=-1) - q * diff.min(axis=-1))


def d_max_plus(x, y):
    """Asymmetric distance q*max(y-x) - sum(y-x)."""
    xv, yv = _pair(x, y)
    diff = yv - xv
    q = diff.shape[-1]
    return _scalar(q * diff.max(axis=-1) - diff.sum(axis=-1))


_METRIC_FUNCS = {"sym": d_tr, "min_plus": d_min_plus, "max_plus": d_max_plus}


def metric_function(metric: str):
    try:
        return _METRIC_FUNCS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}") from None


def trop_norm(e):
    """Tropical norm of a displacement: d_tr(0, e) = max(e) - min(e)."""
    v = as_vector(e)
    return _scalar(v.max(axis=-1) - v.min(axis=-1))


def canonicalize(x) -> TropicalPoint:
    """Canonical torus representative: subtract the last coordinate from every entry."""
    v = as_vector(x)
    return TropicalPoint(tuple(_scalar(c) for c in v - v[-1]))


def torus_equal(x, y, tol: float = TORUS_EQ_TOL) -> bool:
    xv, yv = _pair(x, y)
    return trop_norm(yv - xv) <= tol


@dataclass(frozen=True)
class SegmentDecomposition:
    """Decomposition of a tropical segment into classical line segments.

    ``steps`` is an ordered list of (coordinate subset, positive length); the
    subsets form a strictly increasing chain and the lengths sum to the
    tropical distance between the endpoints.
    """

    steps: tuple

    @property
    def total(self):
        return sum(length for _, length in self.steps)


def segment_decomposition(y, x) -> SegmentDecomposition:
    """Break the tropical segment from y to x into its classical pieces.

    The i-th piece moves the coordinates holding the i largest distinct
    values of x - y, by the gap down to the next distinct value.  Equal
    values of x - y always share one level.  Raises ValueError when x and y
    coincide in the torus (exactly constant difference).
    """
    yv, xv = _pair(y, x)
    diff = xv - yv
    values = sorted(set(_scalar(d) for d in diff), reverse=True)
    if len(values) < 2:
        raise ValueError("segment is empty: the points coincide in the torus")
    steps = []
    support: set[int] = set()
    for i in range(len(values) - 1):
        support |= {int(j) for j in np.flatnonzero(diff == values[i])}
        steps.append((frozenset(support), values[i] - values[i + 1]))
    return SegmentDecomposition(tuple(steps))


def fw_objective(S: Sequence, x, metric: str = "sym"):
    """Mean distance from x to the sample points under the chosen metric."""
    points = list(S)
    if not points:
        raise ValueError("sample must be nonempty")
    dist = metric_function(metric)
    total = dist(x, points[0])
    for v in points[1:]:
        total = total + dist(x, v)
    return total / len(points)
