"""Averaged operators and enriched shifts of a multivalued mapping."""

from __future__ import annotations

import numpy as np

from .geometry import FiniteSet, affine_image
from .mappings import MultiMap

__all__ = [
    "AveragedMap",
    "ShiftedMap",
    "averaged",
    "enriched_shift",
    "lambda_from_enrichment",
    "enrichment_from_lambda",
    "resolve_lambda",
]


class AveragedMap(MultiMap):
    """``T_lam x = {(1 - lam) x + lam u : u in Tx}``.

    Shares its fixed points with the base map for every ``lam`` in (0, 1].
    """

    kind = "averaged"

    def __init__(self, base: MultiMap, lam: float) -> None:
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"lambda must lie in (0, 1], got {lam}")
        super().__init__(base.domain)
        self.base = base
        self.lam = float(lam)

    def evaluate(self, x) -> FiniteSet:
        x = np.asarray(x, dtype=float).reshape(-1)
        # x + lam (u - x) rather than (1 - lam) x + lam u: exact when u == x
        U = self.base.evaluate(x).points
        return FiniteSet(x + self.lam * (U - x))

    __call__ = evaluate


class ShiftedMap(MultiMap):
    """``x -> b x + Tx``, the set appearing in the enriched inequalities."""

    kind = "shifted"

    def __init__(self, base: MultiMap, b: float) -> None:
        if not b >= 0.0:
            raise ValueError(f"enrichment constant must be >= 0, got {b}")
        super().__init__(base.domain)
        self.base = base
        self.b = float(b)

    def evaluate(self, x) -> FiniteSet:
        x = np.asarray(x, dtype=float).reshape(-1)
        return affine_image(self.base.evaluate(x), 1.0, self.b * x)

    __call__ = evaluate


def averaged(T: MultiMap, lam: float) -> AveragedMap:
    return AveragedMap(T, lam)


def enriched_shift(T: MultiMap, b: float) -> ShiftedMap:
    return ShiftedMap(T, b)


def lambda_from_enrichment(b: float) -> float:
    """Averaging weight ``1/(b+1)`` matching enrichment constant ``b``."""
    if not b >= 0.0:
        raise ValueError(f"enrichment constant must be >= 0, got {b}")
    return 1.0 / (b + 1.0)


def enrichment_from_lambda(lam: float) -> float:
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    return 1.0 / lam - 1.0


def resolve_lambda(lam: float | None = None, b: float | None = None, tol: float = 1e-9) -> float:
    """Return the averaging weight from ``lam``, ``b`` or both.

    When both are given they must agree, ``|lam - 1/(b+1)| <= tol``.
    With neither, the plain map (``lam = 1``) is meant.
    """
    if lam is None and b is None:
        return 1.0
    if b is None:
        enrichment_from_lambda(lam)  # validates the range
        return float(lam)
    from_b = lambda_from_enrichment(b)
    if lam is None:
        return from_b
    if abs(lam - from_b) > tol:
        raise ValueError(f"lambda={lam} and b={b} are inconsistent: expected lambda = 1/(b+1) = {from_b}")
    return float(lam)
