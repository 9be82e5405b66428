"""Perturbation level between two mappings and the fixed-set displacement bound.

For a mapping ``T`` in one of the supported classes and a perturbation ``S``
with ``H(Tx, Sx) <= gamma`` everywhere, every fixed point of ``S`` lies within
``lam * gamma / (1 - k)`` of a fixed point of ``T``. The class fixes ``k``
and ``lam``:

=======================  =====================  ==============
class                    k                      lam
=======================  =====================  ==============
enriched-kannan          theta / (1 - theta)    1 / (b + 1)
enriched-chatterjea      theta / (1 - theta)    1 / (b + 1)
enriched-crr             (a + b) / (1 - b)      1 / (c + 1)
gornicki (M < 1/3)       2M / (1 - M)           1
=======================  =====================  ==============

:func:`verify_data_dependence` checks the bound by starting the class
iteration for ``T`` at each fixed point of ``S``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

from .certifier import CertifyConfig, certify, crr_delta, gornicki_k, kannan_k
from .geometry import hausdorff, point_distance, point_set_distance
from .mappings import MultiMap, fixed_point_set
from .solver import IterationConfig, IterationTrace, krasnoselskii_iterate, solve_gornicki
from .transform import lambda_from_enrichment

__all__ = [
    "DATADEP_CLASSES",
    "BoundInapplicableError",
    "GornickiPreconditionError",
    "EmptyFixedPointSetError",
    "DataDependenceReport",
    "gamma_bound",
    "class_constants_from_report",
    "verify_data_dependence",
    "fixed_set_hausdorff",
]

DATADEP_CLASSES = ("enriched-kannan", "enriched-chatterjea", "enriched-crr", "gornicki")
BOUND_RTOL = 1e-6
STEP_RTOL = 1e-9


class BoundInapplicableError(ValueError):
    """The class constant gives ``k >= 1``; the displacement bound says nothing."""

    def __init__(self, msg: str = "bound inapplicable") -> None:
        super().__init__(msg)


class GornickiPreconditionError(BoundInapplicableError):
    def __init__(self, M: float) -> None:
        super().__init__(f"bound inapplicable: Gornicki data dependence needs M < 1/3, got M = {M}")
        self.M = M


class EmptyFixedPointSetError(ValueError):
    """A fixed-point set came out empty at the requested resolution."""

    def __init__(self, which: str) -> None:
        super().__init__(f"fixed-point set of {which} is empty")
        self.which = which


def _same_domain(T: MultiMap, S: MultiMap) -> None:
    if T.domain != S.domain:
        raise ValueError("mappings must share the same domain box and grid")


def gamma_bound(T: MultiMap, S: MultiMap) -> float:
    """``max_x H(Tx, Sx)`` over the shared grid nodes."""
    _same_domain(T, S)
    return max(hausdorff(T.evaluate(x), S.evaluate(x)) for x in T.domain.nodes())


@dataclass
class DataDependenceReport:
    cls: str
    constants: dict[str, float]
    gamma: float
    lam: float
    k: float
    k_theta_form: float | None
    bound: float
    allowance: float
    observed_sup: float
    holds: bool
    fixed_points_S: list[list[float]]
    fixed_points_T: list[list[float]]
    iteration_distances: list[float]
    symmetric_observed: float | None = None
    symmetric_holds: bool | None = None
    step_checks: dict[str, Any] = field(default_factory=dict)
    traces: list[dict[str, Any]] = field(default_factory=list)

    @property
    def slack(self) -> float:
        return self.bound + self.allowance - self.observed_sup

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["slack"] = self.slack
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> DataDependenceReport:
        d = dict(d)
        d.pop("slack", None)
        return cls(**d)

    def iteration_traces(self) -> list[IterationTrace]:
        return [IterationTrace.from_dict(t) for t in self.traces]


def _need(constants: dict[str, float], *names: str) -> list[float]:
    missing = [n for n in names if n not in constants]
    if missing:
        raise ValueError(f"missing class constants: {', '.join(missing)}")
    vals = [float(constants[n]) for n in names]
    if any(not (v >= 0.0 and math.isfinite(v)) for v in vals):
        raise ValueError("class constants must be finite and >= 0")
    return vals


def _class_parameters(cls: str, constants: dict[str, float]) -> tuple[float, float, float | None]:
    """Return ``(k, lam, k_theta_form)`` for a class, or raise if inapplicable."""
    if cls in ("enriched-kannan", "enriched-chatterjea"):
        b, theta = _need(constants, "b", "theta")
        k = kannan_k(theta)
        lam = lambda_from_enrichment(b)
        theta_form = k
    elif cls == "enriched-crr":
        a, b, c = _need(constants, "a", "b", "c")
        if not a + 2 * b < 1.0:
            raise BoundInapplicableError("bound inapplicable: enriched CRR needs a + 2b < 1")
        k = crr_delta(a, b)
        lam = lambda_from_enrichment(c)
        theta_form = None
    elif cls == "gornicki":
        M, _, _ = _need(constants, "M", "a", "b")
        if not M < 1.0 / 3.0:
            raise GornickiPreconditionError(M)
        k = gornicki_k(M)
        lam = 1.0
        theta_form = None
    else:
        raise ValueError(f"unsupported class {cls!r}; choose from {DATADEP_CLASSES}")
    if k is None or not k < 1.0:
        raise BoundInapplicableError(f"bound inapplicable: k = {k} for class {cls}")
    return k, lam, theta_form


def class_constants_from_report(T: MultiMap, cls: str, config: CertifyConfig | None = None) -> dict[str, float]:
    """Certify ``T`` and pull the constants :func:`verify_data_dependence` needs."""
    report = certify(T, config)
    if cls in ("enriched-kannan", "enriched-chatterjea"):
        est = report.enriched[cls]
        return {"b": float(est.enrichment), "theta": float(est.constant)}
    if cls == "enriched-crr":
        est = report.enriched[cls]
        if not est.satisfied:
            raise BoundInapplicableError("bound inapplicable: no enriched CRR constants found on the sample")
        return {"a": est.params["a"], "b": est.params["b"], "c": float(est.enrichment)}
    if cls == "gornicki":
        return {
            "M": float(report.plain["gornicki"].constant),
            "a": report.gornicki_descent.a,
            "b": report.gornicki_descent.b,
        }
    raise ValueError(f"unsupported class {cls!r}; choose from {DATADEP_CLASSES}")


def _gornicki_step_checks(T: MultiMap, traces: list[IterationTrace], M: float) -> dict[str, Any]:
    # along steps that pick u from Tx: d(u, Tu) <= 2M/(1-M) |x - u|
    factor = 2.0 * M / (1.0 - M)
    checked = violations = 0
    worst = 0.0
    for tr in traces:
        for x, u, ru in zip(tr.iterates, tr.selected, tr.residuals[1:]):
            if u not in T.evaluate(x):
                continue
            dxu = point_distance(x, u)
            checked += 1
            if dxu > 0:
                worst = max(worst, ru / dxu)
            if ru > factor * dxu * (1 + STEP_RTOL):
                violations += 1
    return {"factor": factor, "checked": checked, "violations": violations, "worst_ratio": worst}


def verify_data_dependence(
    T: MultiMap,
    S: MultiMap,
    cls: str,
    constants: dict[str, float],
    cfg: IterationConfig | None = None,
    *,
    fixed_eps: float = 1e-6,
    symmetric: bool = False,
) -> DataDependenceReport:
    """Check ``sup_{z* in F(S)} d(z*, F(T)) <= lam * gamma / (1 - k)``.

    ``F(S)`` and ``F(T)`` are enumerated with :func:`fixed_point_set` at
    resolution ``fixed_eps``; the check allows ``2 * fixed_eps`` on top of
    the bound for that discretisation. Each ``z*`` also seeds the class
    iteration on ``T``, and the distance to its limit is recorded.
    With ``symmetric=True`` (``S`` is in the class too) the Hausdorff
    distance between the fixed sets is checked against the same bound.
    """
    k, lam, theta_form = _class_parameters(cls, constants)
    cfg = cfg or IterationConfig()
    _same_domain(T, S)
    gamma = gamma_bound(T, S)
    bound = lam * gamma / (1.0 - k)
    allowance = 2.0 * fixed_eps

    FS = fixed_point_set(S, fixed_eps)
    if FS is None:
        raise EmptyFixedPointSetError("S")
    FT = fixed_point_set(T, fixed_eps)
    if FT is None:
        raise EmptyFixedPointSetError("T")

    traces: list[IterationTrace] = []
    for z_star in FS.points:
        if cls == "gornicki":
            tr = solve_gornicki(T, z_star, constants["a"], constants["b"], cfg)
        else:
            tr = krasnoselskii_iterate(T, lam, z_star, cfg)
        traces.append(tr)

    observed = max(point_set_distance(z, FT) for z in FS.points)
    iter_dist = [point_distance(z, tr.final) for z, tr in zip(FS.points, traces)]
    holds = observed <= bound * (1 + BOUND_RTOL) + allowance

    sym_obs = sym_holds = None
    if symmetric:
        sym_obs = hausdorff(FS, FT)
        sym_holds = sym_obs <= bound * (1 + BOUND_RTOL) + allowance

    step_checks: dict[str, Any] = {"converged": sum(tr.converged for tr in traces), "runs": len(traces)}
    if cls == "gornicki":
        step_checks.update(_gornicki_step_checks(T, traces, constants["M"]))

    return DataDependenceReport(
        cls=cls,
        constants={k_: float(v) for k_, v in constants.items()},
        gamma=gamma,
        lam=lam,
        k=k,
        k_theta_form=theta_form,
        bound=bound,
        allowance=allowance,
        observed_sup=observed,
        holds=bool(holds),
        fixed_points_S=FS.to_list(),
        fixed_points_T=FT.to_list(),
        iteration_distances=iter_dist,
        symmetric_observed=sym_obs,
        symmetric_holds=None if sym_holds is None else bool(sym_holds),
        step_checks=step_checks,
        traces=[tr.to_dict() for tr in traces],
    )


def fixed_set_hausdorff(T: MultiMap, S: MultiMap, eps: float = 1e-6) -> float:
    """``H(F(S), F(T))`` with both sets enumerated at resolution ``eps``."""
    FS = fixed_point_set(S, eps)
    FT = fixed_point_set(T, eps)
    if FS is None and FT is None:
        raise EmptyFixedPointSetError("both S and T")
    if FS is None:
        raise EmptyFixedPointSetError("S")
    if FT is None:
        raise EmptyFixedPointSetError("T")
    return hausdorff(FS, FT)
