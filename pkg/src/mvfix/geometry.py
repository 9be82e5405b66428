"""Points, finite point sets and the set distances used throughout the package.

A point is a 1-D float array in R^n. A :class:`FiniteSet` is a nonempty,
canonically ordered (lexicographic), duplicate-free collection of points and
stands in for a closed bounded set. All distances are Euclidean, computed as
``sqrt(sum(d*d))``; separations below ~1e-154 underflow to zero.
"""

from __future__ import annotations

import json
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "FiniteSet",
    "as_point",
    "point_distance",
    "point_set_distance",
    "hausdorff",
    "directed_hausdorff",
    "delta_distance",
    "affine_image",
]


class DimensionError(ValueError):
    """Raised when operands live in spaces of different dimension."""

    def __init__(self, msg: str = "incompatible dimensions") -> None:
        super().__init__(msg)


def as_point(x: Iterable[float] | float) -> np.ndarray:
    """Validate ``x`` and return it as a read-only 1-D float array."""
    p = np.array(x, dtype=float, ndmin=1)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"a point must be a nonempty 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    # normalise -0.0 so that serialisation and hashing are canonical
    p = p + 0.0
    p.setflags(write=False)
    return p


def _canonical_rows(arr: np.ndarray) -> np.ndarray:
    # lexsort treats its last key as primary, hence the reversal
    order = np.lexsort(arr.T[::-1])
    arr = arr[order]
    if len(arr) > 1:
        keep = np.ones(len(arr), dtype=bool)
        keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
        arr = arr[keep]
    return arr


class FiniteSet:
    """Immutable nonempty finite set of points of a common dimension.

    Points are stored sorted lexicographically with exact duplicates removed,
    so two sets compare equal iff they contain the same points.
    """

    __slots__ = ("_points",)

    def __init__(self, points: Iterable[Iterable[float]] | np.ndarray) -> None:
        arr = np.array(points, dtype=float)
        if arr.ndim == 1 and arr.size > 0:
            # a flat sequence of scalars is a set of 1-D points
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("a FiniteSet needs at least one point of dimension >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("point coordinates must be finite")
        arr = _canonical_rows(arr + 0.0)
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        """``(k, n)`` read-only array of the members in canonical order."""
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._points)

    def __contains__(self, x: object) -> bool:
        p = np.asarray(x, dtype=float).reshape(-1)
        if p.size != self.dim:
            return False
        return bool(np.any(np.all(self._points == p, axis=1)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteSet):
            return NotImplemented
        return self._points.shape == other._points.shape and bool(
            np.all(self._points == other._points)
        )

    def __hash__(self) -> int:
        return hash((self._points.shape, self._points.tobytes()))

    def __repr__(self) -> str:
        return f"FiniteSet({self.to_list()!r})"

    def to_list(self) -> list[list[float]]:
        return [[float(c) for c in p] for p in self._points]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_json(cls, text: str) -> FiniteSet:
        data = json.loads(text)
        if not isinstance(data, list) or not all(isinstance(p, list) for p in data):
            raise ValueError("a point set must be a JSON array of arrays of numbers")
        return cls(data)


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionError()


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def point_distance(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dims(x.size, y.size)
    diff = x - y
    return float(np.sqrt(np.sum(diff * diff)))


def point_set_distance(x: Sequence[float] | np.ndarray, A: FiniteSet) -> float:
    """Distance ``min_{a in A} |x - a|`` from a point to a finite set."""
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dims(x.size, A.dim)
    return float(_pairwise(x[None, :], A.points).min())


def directed_hausdorff(A: FiniteSet, B: FiniteSet) -> float:
    """``sup_{a in A} d(a, B)``; not symmetric."""
    _check_dims(A.dim, B.dim)
    return float(_pairwise(A.points, B.points).min(axis=1).max())


def hausdorff(A: FiniteSet, B: FiniteSet) -> float:
    """Hausdorff distance, computed exactly over all ``|A|*|B|`` pairs."""
    _check_dims(A.dim, B.dim)
    dist = _pairwise(A.points, B.points)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def delta_distance(A: FiniteSet, B: FiniteSet) -> float:
    """Largest cross distance ``max |a - b|``.

    Unlike :func:`hausdorff`, ``delta_distance(A, A)`` is the diameter of A
    and vanishes only for singletons.
    """
    _check_dims(A.dim, B.dim)
    return float(_pairwise(A.points, B.points).max())


def affine_image(A: FiniteSet, s: float, v: Sequence[float] | np.ndarray) -> FiniteSet:
    """The set ``{s*a + v : a in A}``."""
    v = np.asarray(v, dtype=float).reshape(-1)
    _check_dims(v.size, A.dim)
    return FiniteSet(s * A.points + v)
