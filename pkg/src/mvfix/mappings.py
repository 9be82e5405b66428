"""Multivalued mappings ``x -> Tx`` on a sampled box domain.

Every mapping carries a :class:`Domain`, an axis-aligned box with a uniform
grid. The grid is what certification, perturbation measurement and
fixed-point enumeration sample; evaluation itself is defined everywhere
except for tabulated maps, which only know their grid.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .geometry import DimensionError, FiniteSet, as_point, point_set_distance

__all__ = [
    "DEFAULT_GRID",
    "Domain",
    "DomainError",
    "MultiMap",
    "FunctionMap",
    "SingletonMap",
    "AffineMap",
    "TabulatedMap",
    "evaluate",
    "residual",
    "fixed_point_set",
    "mapping_from_dict",
    "mapping_to_dict",
    "load_mapping",
    "builtin",
    "BUILTINS",
]

DEFAULT_GRID = 41


class DomainError(ValueError):
    """Evaluation requested outside the region a mapping is defined on."""

    def __init__(self, msg: str = "out of domain") -> None:
        super().__init__(msg)


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lo_i, hi_i]`` with ``grid[i]`` uniform nodes per axis."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    grid: tuple[int, ...]

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        grid = tuple(int(g) for g in self.grid)
        if len(grid) == 1 and len(lo) > 1:
            grid = grid * len(lo)
        if not (len(lo) == len(hi) == len(grid)) or not lo:
            raise DimensionError("domain lo/hi/grid must have the same nonzero length")
        if not all(np.isfinite(lo)) or not all(np.isfinite(hi)):
            raise ValueError("domain bounds must be finite")
        for l, h, g in zip(lo, hi, grid):
            if h < l:
                raise ValueError(f"domain has hi < lo on some axis ({h} < {l})")
            if g < 1 or (g == 1 and h != l):
                raise ValueError("each axis needs >= 2 grid nodes unless it is degenerate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "grid", grid)

    @classmethod
    def box(cls, lo: Sequence[float] | float, hi: Sequence[float] | float, grid: Sequence[int] | int = DEFAULT_GRID) -> Domain:
        lo = tuple(np.atleast_1d(np.asarray(lo, dtype=float)).tolist())
        hi = tuple(np.atleast_1d(np.asarray(hi, dtype=float)).tolist())
        grid = tuple(np.atleast_1d(np.asarray(grid, dtype=int)).tolist())
        if len(grid) == 1:
            grid = grid * len(lo)
        return cls(lo, hi, grid)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def spacing(self) -> np.ndarray:
        g = np.asarray(self.grid, dtype=float)
        span = np.asarray(self.hi) - np.asarray(self.lo)
        return np.where(g > 1, span / np.maximum(g - 1, 1), 0.0)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, g) for l, h, g in zip(self.lo, self.hi, self.grid)]

    def nodes(self) -> np.ndarray:
        """All grid nodes as an ``(N, n)`` array, in lexicographic order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        scale = tol * (1.0 + np.abs(np.asarray(self.hi)) + np.abs(np.asarray(self.lo)))
        return bool(np.all(x >= np.asarray(self.lo) - scale) and np.all(x <= np.asarray(self.hi) + scale))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def nearest_index(self, x: np.ndarray) -> tuple[int, ...]:
        h = self.spacing
        rel = np.where(h > 0, (x - np.asarray(self.lo)) / np.where(h > 0, h, 1.0), 0.0)
        idx = np.clip(np.rint(rel).astype(int), 0, np.asarray(self.grid) - 1)
        return tuple(int(i) for i in idx)

    def to_dict(self) -> dict[str, list]:
        return {"lo": list(self.lo), "hi": list(self.hi), "grid": list(self.grid)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Domain:
        try:
            return cls.box(d["lo"], d["hi"], d.get("grid", DEFAULT_GRID))
        except KeyError as exc:
            raise ValueError(f"domain is missing field {exc.args[0]!r}") from None


class MultiMap:
    """Base class: a set-valued rule on R^n plus its sampling domain.

    Subclasses implement :meth:`_images`, returning an ``(k, n)`` array of
    image points; :meth:`evaluate` validates and canonicalises it.
    """

    kind = "abstract"

    def __init__(self, domain: Domain) -> None:
        self.domain = domain

    @property
    def dim(self) -> int:
        return self.domain.dim

    def _images(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x: Sequence[float] | np.ndarray) -> FiniteSet:
        x = as_point(x)
        if x.size != self.dim:
            raise DimensionError()
        out = FiniteSet(np.atleast_2d(self._images(x)))
        if out.dim != self.dim:
            raise DimensionError("mapping produced points of the wrong dimension")
        return out

    __call__ = evaluate

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class FunctionMap(MultiMap):
    """Wrap an arbitrary callable returning an array-like of image points."""

    kind = "function"

    def __init__(self, rule: Callable[[np.ndarray], Any], domain: Domain) -> None:
        super().__init__(domain)
        self.rule = rule

    def _images(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.rule(x), dtype=float).reshape(-1, self.dim)


class SingletonMap(FunctionMap):
    """A single-valued rule ``x -> f(x)`` viewed as ``x -> {f(x)}``."""

    kind = "singleton"

    def _images(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.rule(x), dtype=float).reshape(1, self.dim)


class AffineMap(MultiMap):
    """``Tx = {A_i x + c_i}`` over a list of affine branches.

    With exactly one branch and ``singleton=True`` it serialises as the
    ``"singleton"`` kind.
    """

    def __init__(
        self,
        branches: Iterable[tuple[Any, Any]],
        domain: Domain,
        singleton: bool = False,
    ) -> None:
        super().__init__(domain)
        mats, offs = [], []
        n = domain.dim
        for A, c in branches:
            A = np.array(A, dtype=float, ndmin=2)
            c = np.array(c, dtype=float, ndmin=1)
            if A.shape != (n, n) or c.shape != (n,):
                raise DimensionError(
                    f"branch matrix must be {n}x{n} and offset length {n}, got {A.shape} and {c.shape}"
                )
            if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
                raise ValueError("branch coefficients must be finite")
            mats.append(A)
            offs.append(c)
        if not mats:
            raise ValueError("an affine mapping needs at least one branch")
        if singleton and len(mats) != 1:
            raise ValueError("a singleton mapping has exactly one branch")
        self.matrices = np.stack(mats)
        self.offsets = np.stack(offs)
        self.singleton = singleton

    @property
    def kind(self) -> str:  # type: ignore[override]
        return "singleton" if self.singleton else "affine"

    def _images(self, x: np.ndarray) -> np.ndarray:
        return self.matrices @ x + self.offsets


class TabulatedMap(MultiMap):
    """Explicit table from grid nodes to point sets, read by nearest node."""

    kind = "tabulated"

    def __init__(self, table: Sequence[FiniteSet], domain: Domain) -> None:
        super().__init__(domain)
        table = list(table)
        if len(table) != int(np.prod(domain.grid)):
            raise ValueError("tabulated mapping needs exactly one entry per grid node")
        for entry in table:
            if entry.dim != domain.dim:
                raise DimensionError()
        self.table = table

    @classmethod
    def from_function(cls, rule: Callable[[np.ndarray], Any], domain: Domain) -> TabulatedMap:
        return cls([FiniteSet(np.asarray(rule(x), dtype=float).reshape(-1, domain.dim)) for x in domain.nodes()], domain)

    def _images(self, x: np.ndarray) -> np.ndarray:
        if not self.domain.contains(x):
            raise DomainError()
        flat = int(np.ravel_multi_index(self.domain.nearest_index(x), self.domain.grid))
        return self.table[flat].points


def evaluate(T: MultiMap, x: Sequence[float] | np.ndarray) -> FiniteSet:
    return T.evaluate(x)


def residual(T: MultiMap, x: Sequence[float] | np.ndarray) -> float:
    """``d(x, Tx)``; zero exactly when ``x`` is a member of ``Tx``."""
    return point_set_distance(x, T.evaluate(x))


# --------------------------------------------------------------------------
# fixed-point enumeration


def _grid_local_minima(values: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    v = values.reshape(shape)
    padded = np.pad(v, 1, mode="constant", constant_values=np.inf)
    is_min = np.ones(shape, dtype=bool)
    for offset in itertools.product((-1, 0, 1), repeat=len(shape)):
        if not any(offset):
            continue
        sl = tuple(slice(1 + o, 1 + o + s) for o, s in zip(offset, shape))
        is_min &= v <= padded[sl]
    return is_min.reshape(-1)


def _refine(T: MultiMap, x: np.ndarray, fx: float, step: np.ndarray, eps: float) -> tuple[np.ndarray, float]:
    # compass search on the residual with step halving, confined to the box
    target, min_step = eps / 10.0, eps / 100.0
    step = step.copy()
    n = x.size
    while fx > target and step.max() >= min_step:
        best_x, best_f = x, fx
        for i in range(n):
            if step[i] == 0.0:
                continue
            for sign in (-1.0, 1.0):
                y = x.copy()
                y[i] += sign * step[i]
                y = T.domain.clip(y)
                fy = residual(T, y)
                if fy < best_f:
                    best_x, best_f = y, fy
        if best_f < fx:
            x, fx = best_x, best_f
        else:
            step /= 2.0
    return x, fx


def fixed_point_set(T: MultiMap, eps: float) -> FiniteSet | None:
    """Approximate ``F(T) = {x : x in Tx}`` on the mapping's domain.

    Grid nodes with residual <= ``eps`` and grid-local minima of the residual
    are refined by a step-halving compass search until the residual drops to
    ``eps/10`` or the step falls below ``eps/100``. Refined points with
    residual <= ``eps`` are clustered with radius ``eps``, keeping the member
    of smallest residual.

    Returns ``None`` when no fixed point is found; errors raise.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    nodes = T.domain.nodes()
    res = np.array([residual(T, x) for x in nodes])
    candidates = (res <= eps) | _grid_local_minima(res, T.domain.grid)

    spacing = T.domain.spacing
    found: list[tuple[float, tuple[float, ...], np.ndarray]] = []
    for i in np.flatnonzero(candidates):
        x, fx = nodes[i].astype(float), float(res[i])
        if fx > eps / 10.0:
            x, fx = _refine(T, x, fx, spacing, eps)
        if fx <= eps:
            found.append((fx, tuple(x.tolist()), x))
    if not found:
        return None

    found.sort(key=lambda item: (item[0], item[1]))
    reps: list[np.ndarray] = []
    for _, _, x in found:
        if all(np.linalg.norm(x - r) > eps for r in reps):
            reps.append(x)
    return FiniteSet(np.stack(reps))


# --------------------------------------------------------------------------
# serialisation


def mapping_from_dict(d: dict[str, Any]) -> MultiMap:
    """Build a mapping from its JSON document form.

    Recognised kinds are ``affine`` and ``singleton`` (``branches`` of
    ``{"A": [[...]], "c": [...]}``) and ``tabulated`` (``table`` of
    ``{"x": [...], "set": [[...]]}`` with one entry per grid node).
    """
    if not isinstance(d, dict):
        raise ValueError("mapping document must be a JSON object")
    kind = d.get("kind")
    if "domain" not in d:
        raise ValueError("mapping document needs a 'domain'")
    domain = Domain.from_dict(d["domain"])
    if kind in ("affine", "singleton"):
        branches = d.get("branches")
        if not isinstance(branches, list) or not branches:
            raise ValueError(f"{kind} mapping needs a nonempty 'branches' list")
        try:
            pairs = [(b["A"], b["c"]) for b in branches]
        except (KeyError, TypeError):
            raise ValueError("each branch needs 'A' and 'c'") from None
        return AffineMap(pairs, domain, singleton=(kind == "singleton"))
    if kind == "tabulated":
        entries = d.get("table")
        if not isinstance(entries, list):
            raise ValueError("tabulated mapping needs a 'table' list")
        slots: list[FiniteSet | None] = [None] * int(np.prod(domain.grid))
        nodes = domain.nodes()
        for e in entries:
            x = as_point(e["x"])
            if x.size != domain.dim:
                raise DimensionError()
            flat = int(np.ravel_multi_index(domain.nearest_index(x), domain.grid))
            if not np.allclose(nodes[flat], x, rtol=0.0, atol=1e-9 * (1 + np.abs(x).max())):
                raise ValueError(f"table key {x.tolist()} is not a grid node")
            slots[flat] = FiniteSet(e["set"])
        missing = [i for i, s in enumerate(slots) if s is None]
        if missing:
            raise ValueError(f"tabulated mapping is missing {len(missing)} grid node entries")
        return TabulatedMap(slots, domain)  # type: ignore[arg-type]
    raise ValueError(f"unknown mapping kind {kind!r}")


def mapping_to_dict(T: MultiMap) -> dict[str, Any]:
    if isinstance(T, AffineMap):
        return {
            "kind": T.kind,
            "branches": [{"A": A.tolist(), "c": c.tolist()} for A, c in zip(T.matrices, T.offsets)],
            "domain": T.domain.to_dict(),
        }
    if isinstance(T, TabulatedMap):
        return {
            "kind": "tabulated",
            "table": [{"x": x.tolist(), "set": s.to_list()} for x, s in zip(T.domain.nodes(), T.table)],
            "domain": T.domain.to_dict(),
        }
    raise TypeError(f"{type(T).__name__} has no JSON form")


def load_mapping(source: str | Path) -> MultiMap:
    """Load a mapping from a JSON file, or ``builtin:<name>`` for a library instance."""
    s = str(source)
    if s.startswith("builtin:"):
        return builtin(s.split(":", 1)[1])
    text = Path(s).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{s}: invalid JSON ({exc})") from None
    return mapping_from_dict(doc)


# --------------------------------------------------------------------------
# library of concrete instances


def _line(lo: float = -4.0, hi: float = 4.0, grid: int = DEFAULT_GRID) -> Domain:
    return Domain.box([lo], [hi], [grid])


def _plane(lo: float = -2.0, hi: float = 2.0, grid: int = 21) -> Domain:
    return Domain.box([lo, lo], [hi, hi], [grid, grid])


@dataclass(frozen=True)
class _Builtin:
    build: Callable[[], MultiMap]
    summary: str = field(default="")


BUILTINS: dict[str, _Builtin] = {
    "identity": _Builtin(lambda: AffineMap([([[1.0]], [0.0])], _line(-1, 1, 3), singleton=True), "Tx = {x}"),
    "halving": _Builtin(lambda: AffineMap([([[0.5]], [0.0])], _line(), singleton=True), "Tx = {x/2}"),
    "quarter": _Builtin(lambda: AffineMap([([[0.25]], [0.0])], _line(), singleton=True), "Tx = {x/4}"),
    "negation": _Builtin(lambda: AffineMap([([[-1.0]], [0.0])], _line(-10, 10)), "Tx = {-x}"),
    "translation": _Builtin(lambda: AffineMap([([[1.0]], [1.0])], _line()), "Tx = {x + 1}, no fixed point"),
    "constant": _Builtin(lambda: AffineMap([([[0.0]], [1.5])], _line()), "Tx = {1.5}"),
    "split-halving": _Builtin(
        lambda: AffineMap([([[0.5]], [0.0]), ([[-0.5]], [0.0])], _line(-10, 10)), "Tx = {x/2, -x/2}"
    ),
    "shifted-halving": _Builtin(
        lambda: AffineMap([([[0.5]], [0.0]), ([[0.5]], [1.0])], _line()), "Tx = {x/2, x/2 + 1}, F = {0, 2}"
    ),
    "twin-negation": _Builtin(
        lambda: AffineMap([([[-1.0]], [0.0]), ([[-1.0]], [3.0])], _line(-10, 10)), "Tx = {-x, 3 - x}, F = {0, 1.5}"
    ),
    "rotation-2d": _Builtin(
        lambda: AffineMap([([[0.0, -0.5], [0.5, 0.0]], [0.25, -0.5])], _plane()),
        "Tx = {Rx + c}, R a half-scaled quarter turn",
    ),
    "negation-2d": _Builtin(
        lambda: AffineMap([([[-1.0, 0.0], [0.0, -1.0]], [0.0, 0.0]), ([[-1.0, 0.0], [0.0, -1.0]], [1.0, 1.0])], _plane()),
        "Tx = {-x, (1,1) - x}, F = {0, (0.5,0.5)}",
    ),
}


def builtin(name: str) -> MultiMap:
    try:
        return BUILTINS[name].build()
    except KeyError:
        raise ValueError(f"unknown builtin mapping {name!r}; choose from {sorted(BUILTINS)}") from None
