"""Iteration engines for fixed points and end points of multivalued maps.

Three schemes are provided:

* :func:`krasnoselskii_iterate` picks ``x_{n+1}`` from the averaged image
  ``T_lam x_n`` with the near-nearest selection rule;
* :func:`solve_gornicki` walks descent points ``u`` with
  ``d(u, Tu) <= a d(x, Tx)`` and ``|u - x| <= b d(x, Tx)``;
* :func:`endpoint_iterate` runs the same descent on the diameter-type
  residual ``delta({x}, Tx)``, whose zeros are end points ``Tz = {z}``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .geometry import DimensionError, FiniteSet, as_point, delta_distance
from .mappings import DomainError, MultiMap, residual
from .transform import averaged

__all__ = [
    "IterationConfig",
    "IterationTrace",
    "CONVERGED",
    "MAX_ITER",
    "DESCENT_FAILED",
    "ERROR",
    "nadler_select",
    "krasnoselskii_iterate",
    "gornicki_step",
    "solve_gornicki",
    "delta_residual",
    "endpoint_iterate",
]

CONVERGED = "converged"
MAX_ITER = "max-iter-exceeded"
DESCENT_FAILED = "descent-failed"
ERROR = "error"

# relative slack absorbing rounding in the descent conditions
_SLACK = 1e-12


@dataclass(frozen=True)
class IterationConfig:
    mu: float = 1.001
    eps: float = 1e-8
    max_iter: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.mu > 1.0:
            raise ValueError(f"mu must exceed 1, got {self.mu}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class IterationTrace:
    """Everything an iteration run produced.

    ``iterates`` holds ``x_0 .. x_N``, ``selected`` the ``N`` chosen points,
    ``residuals`` one value per iterate. ``envelope`` is filled by the descent
    engines with the geometric step bound ``b a^n r_0``.
    """

    method: str
    iterates: list[np.ndarray] = field(default_factory=list)
    selected: list[np.ndarray] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    verdict: str = MAX_ITER
    envelope: list[float] = field(default_factory=list)
    constants: dict[str, float] = field(default_factory=dict)
    message: str = ""

    @property
    def n_steps(self) -> int:
        return len(self.iterates) - 1

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    def step_sizes(self) -> list[float]:
        return [float(np.linalg.norm(b - a)) for a, b in zip(self.iterates, self.iterates[1:])]

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "verdict": self.verdict,
            "message": self.message,
            "constants": dict(self.constants),
            "n_steps": self.n_steps,
            "iterates": [x.tolist() for x in self.iterates],
            "selected": [u.tolist() for u in self.selected],
            "residuals": list(self.residuals),
            "envelope": list(self.envelope),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> IterationTrace:
        return cls(
            method=d["method"],
            iterates=[np.asarray(x, dtype=float) for x in d["iterates"]],
            selected=[np.asarray(u, dtype=float) for u in d["selected"]],
            residuals=[float(r) for r in d["residuals"]],
            verdict=d["verdict"],
            envelope=[float(e) for e in d["envelope"]],
            constants={k: float(v) for k, v in d["constants"].items()},
            message=d.get("message", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """One row per iterate: ``n, x_0..x_{d-1}, residual, envelope``."""
        dim = self.iterates[0].size if self.iterates else 0
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", *(f"x{i}" for i in range(dim)), "residual", "envelope"])
        for n, (x, r) in enumerate(zip(self.iterates, self.residuals)):
            env = repr(self.envelope[n]) if n < len(self.envelope) else ""
            w.writerow([n, *(repr(float(c)) for c in x), repr(r), env])
        return buf.getvalue()


def nadler_select(x, A: FiniteSet, mu: float = 1.001) -> np.ndarray:
    """Pick ``a in A`` with ``|x - a| <= mu d(x, A)``.

    For a finite set the exact nearest point qualifies for every ``mu > 1``,
    so that is returned; ties go to the lexicographically smallest point.
    """
    if not mu > 1.0:
        raise ValueError(f"mu must exceed 1, got {mu}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != A.dim:
        raise DimensionError()
    diff = A.points - x
    d = np.sqrt(np.sum(diff * diff, axis=1))
    # argmin returns the first minimiser, i.e. the smallest in canonical order
    return A.points[int(np.argmin(d))].copy()


def krasnoselskii_iterate(T: MultiMap, lam: float, x0, cfg: IterationConfig | None = None) -> IterationTrace:
    """Selection iteration ``x_{n+1} in T_lam x_n``.

    Stops when the residual on the original map, ``d(x_n, Tx_n)``, is at most
    ``cfg.eps``. A failing evaluation ends the run with verdict ``"error"``.
    """
    cfg = cfg or IterationConfig()
    Tl = averaged(T, lam)
    trace = IterationTrace("krasnoselskii", constants={"lambda": float(lam), "mu": cfg.mu})
    x = as_point(x0).copy()
    try:
        for _ in range(cfg.max_iter + 1):
            r = residual(T, x)
            trace.iterates.append(x)
            trace.residuals.append(r)
            if r <= cfg.eps:
                trace.verdict = CONVERGED
                break
            if len(trace.selected) == cfg.max_iter:
                trace.verdict = MAX_ITER
                break
            u = nadler_select(x, Tl.evaluate(x), cfg.mu)
            trace.selected.append(u)
            x = u
    except DomainError as exc:
        trace.verdict, trace.message = ERROR, str(exc)
        _truncate(trace)
    return trace


def _truncate(trace: IterationTrace) -> None:
    # keep len(selected) == len(iterates) - 1 after an aborted step
    del trace.selected[max(len(trace.iterates) - 1, 0):]


def _descent_candidates(T: MultiMap, x: np.ndarray, image: FiniteSet, radius: float):
    yield from image.points
    nodes = T.domain.nodes()
    diff = nodes - x
    near = np.sqrt(np.sum(diff * diff, axis=1)) <= radius * (1 + _SLACK)
    yield from nodes[near]


def _check_descent_params(a: float, b: float) -> None:
    if not 0.0 <= a < 1.0:
        raise ValueError(f"descent factor a must lie in [0, 1), got {a}")
    if not b >= 0.0:
        raise ValueError(f"step factor b must be >= 0, got {b}")


def _descend(
    T: MultiMap,
    x: np.ndarray,
    a: float,
    b: float,
    resid: Callable[[MultiMap, np.ndarray], float],
    r: float | None = None,
) -> np.ndarray | None:
    _check_descent_params(a, b)
    image = T.evaluate(x)
    if r is None:
        r = resid(T, x)
    shrink, radius = a * r * (1 + _SLACK), b * r
    for u in _descent_candidates(T, x, image, radius):
        if np.linalg.norm(u - x) <= radius * (1 + _SLACK) and resid(T, u) <= shrink:
            return u.copy()
    return None


def gornicki_step(T: MultiMap, x, a: float, b: float) -> np.ndarray | None:
    """Find a descent point ``u`` for ``x``, or return ``None``.

    Candidates are the points of ``Tx`` followed by the domain grid nodes
    within ``b d(x, Tx)`` of ``x``, each in canonical order; the first
    ``u`` with ``d(u, Tu) <= a d(x, Tx)`` and ``|u - x| <= b d(x, Tx)``
    wins.
    """
    return _descend(T, as_point(x), a, b, residual)


def delta_residual(T: MultiMap, x) -> float:
    """``delta({x}, Tx)``: the largest distance from ``x`` to a point of ``Tx``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return delta_distance(FiniteSet(x[None, :]), T.evaluate(x))


def _descent_run(
    T: MultiMap,
    x0,
    a: float,
    b: float,
    cfg: IterationConfig,
    resid: Callable[[MultiMap, np.ndarray], float],
    method: str,
) -> IterationTrace:
    _check_descent_params(a, b)
    trace = IterationTrace(method, constants={"a": float(a), "b": float(b)})
    x = as_point(x0).copy()
    try:
        r0 = resid(T, x)
        r = r0
        for n in range(cfg.max_iter + 1):
            trace.iterates.append(x)
            trace.residuals.append(r)
            trace.envelope.append(b * a**n * r0)
            if r <= cfg.eps:
                trace.verdict = CONVERGED
                break
            if n == cfg.max_iter:
                trace.verdict = MAX_ITER
                break
            u = _descend(T, x, a, b, resid, r)
            if u is None:
                trace.verdict = DESCENT_FAILED
                break
            trace.selected.append(u)
            x, r = u, resid(T, u)
    except DomainError as exc:
        trace.verdict, trace.message = ERROR, str(exc)
        _truncate(trace)
        del trace.envelope[len(trace.iterates):]
    return trace


def solve_gornicki(T: MultiMap, x0, a: float, b: float, cfg: IterationConfig | None = None) -> IterationTrace:
    """Iterate :func:`gornicki_step` from ``x0``.

    ``trace.envelope[n]`` is ``b a^n d(x_0, Tx_0)``, the bound on the step
    ``|x_{n+1} - x_n|`` for a map satisfying the descent clause.
    """
    return _descent_run(T, x0, a, b, cfg or IterationConfig(), residual, "gornicki")


def endpoint_iterate(
    T: MultiMap, x0, cfg: IterationConfig | None = None, a: float = 0.5, b: float = 1.0
) -> IterationTrace:
    """Descent on ``delta({x}, Tx)``; convergence means ``Tx_N`` has collapsed
    to within ``eps`` of the singleton ``{x_N}``."""
    return _descent_run(T, x0, a, b, cfg or IterationConfig(), delta_residual, "endpoint")
