import numpy as np
import pytest

from mvfix.geometry import FiniteSet, hausdorff
from mvfix.mappings import AffineMap, Domain, builtin, fixed_point_set, residual
from mvfix.transform import (
    averaged,
    enriched_shift,
    enrichment_from_lambda,
    lambda_from_enrichment,
    resolve_lambda,
)

MAPS = ["halving", "negation", "split-halving", "shifted-halving", "twin-negation", "rotation-2d", "negation-2d"]


def test_averaged_examples():
    T = builtin("split-halving")
    for x in ([1.0], [-3.0], [7.5]):
        assert averaged(T, 1.0).evaluate(x) == T.evaluate(x)
    assert averaged(builtin("negation"), 0.5).evaluate([2.0]) == FiniteSet([[0.0]])
    two = AffineMap([([[0.0]], [4.0]), ([[0.0]], [8.0])], Domain.box(-1, 1))
    assert averaged(two, 0.25).evaluate([0.0]) == FiniteSet([[1.0], [2.0]])


@pytest.mark.parametrize("lam", [0.0, -0.1, 1.5, float("nan")])
def test_averaged_rejects_lambda(lam):
    with pytest.raises(ValueError):
        averaged(builtin("halving"), lam)


def test_lambda_from_enrichment():
    assert lambda_from_enrichment(1.0) == 0.5
    assert lambda_from_enrichment(0.0) == 1.0
    assert lambda_from_enrichment(3.0) == 0.25
    with pytest.raises(ValueError):
        lambda_from_enrichment(-1.0)
    assert enrichment_from_lambda(0.25) == 3.0


def test_enriched_shift_examples():
    T = builtin("rotation-2d")
    for x in ([0.3, -0.2], [1.0, 1.0]):
        assert enriched_shift(T, 0.0).evaluate(x) == T.evaluate(x)
    assert enriched_shift(builtin("negation"), 1.0).evaluate([3.0]) == FiniteSet([[0.0]])
    const = AffineMap([([[0.0]], [2.0])], Domain.box(-1, 1))
    assert enriched_shift(const, 2.0).evaluate([1.0]) == FiniteSet([[4.0]])
    with pytest.raises(ValueError):
        enriched_shift(T, -0.5)


def test_resolve_lambda():
    assert resolve_lambda() == 1.0
    assert resolve_lambda(b=1.0) == 0.5
    assert resolve_lambda(lam=0.5, b=1.0) == 0.5
    assert resolve_lambda(lam=0.2) == 0.2
    with pytest.raises(ValueError, match="inconsistent"):
        resolve_lambda(lam=0.3, b=1.0)


def test_averaged_inherits_domain():
    T = builtin("rotation-2d")
    assert averaged(T, 0.3).domain == T.domain


@pytest.mark.parametrize("name", MAPS)
def test_residual_scales_with_lambda(name):
    T = builtin(name)
    rng = np.random.default_rng(11)
    lo, hi = np.asarray(T.domain.lo), np.asarray(T.domain.hi)
    for _ in range(40):
        lam = float(rng.uniform(0.01, 1.0))
        x = lo + (hi - lo) * rng.random(T.dim)
        r = residual(T, x)
        assert residual(averaged(T, lam), x) == pytest.approx(lam * r, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("name", MAPS)
def test_hausdorff_scaling_identity(name):
    T = builtin(name)
    rng = np.random.default_rng(5)
    lo, hi = np.asarray(T.domain.lo), np.asarray(T.domain.hi)
    for _ in range(40):
        lam = float(rng.uniform(0.05, 1.0))
        b = 1.0 / lam - 1.0
        x, y = (lo + (hi - lo) * rng.random(T.dim) for _ in range(2))
        Tl, Sb = averaged(T, lam), enriched_shift(T, b)
        lhs = hausdorff(Tl.evaluate(x), Tl.evaluate(y))
        rhs = lam * hausdorff(Sb.evaluate(x), Sb.evaluate(y))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", ["halving", "shifted-halving", "twin-negation", "negation-2d"])
@pytest.mark.parametrize("lam", [0.25, 0.5, 0.9])
def test_fixed_sets_agree(name, lam):
    T = builtin(name)
    F, Fl = fixed_point_set(T, 1e-6), fixed_point_set(averaged(T, lam), 1e-6)
    assert len(F) == len(Fl)
    assert hausdorff(F, Fl) <= 2e-6
