import json

import numpy as np
import pytest

from mvfix.certifier import (
    CertifyConfig,
    MappingClassReport,
    PairSample,
    certify,
    crr_delta,
    estimate_class_constant,
    estimate_enriched,
    estimate_gornicki_descent,
    gornicki_k,
    kannan_k,
    sample_pairs,
)
from mvfix.mappings import AffineMap, Domain, FunctionMap, builtin

from . import oracles

RATIO_DEN = {
    "contraction": lambda x, y, Tx, Ty: oracles.dist(x, y),
    "kannan": lambda x, y, Tx, Ty: oracles.set_dist(x, Tx) + oracles.set_dist(y, Ty),
    "chatterjea": lambda x, y, Tx, Ty: oracles.set_dist(x, Ty) + oracles.set_dist(y, Tx),
    "gornicki": lambda x, y, Tx, Ty: oracles.set_dist(x, Tx) + oracles.set_dist(y, Ty) + oracles.dist(x, y),
}


def _pairs(sample):
    for i, j in sample.index:
        yield sample.points[i], sample.points[j]


# --- examples -----------------------------------------------------------------


def test_contraction_examples():
    assert estimate_class_constant(builtin("halving"), "contraction").constant == 0.5
    ident = estimate_class_constant(AffineMap([([[1.0]], [0.0])], Domain.box(-2, 2, 9)), "contraction")
    assert ident.constant == 1.0 and not ident.satisfied
    assert estimate_class_constant(builtin("constant"), "contraction").constant == 0.0


def test_empty_sample_is_an_error():
    with pytest.raises(ValueError):
        estimate_class_constant(builtin("halving"), "contraction", pairs=[])
    with pytest.raises(ValueError):
        estimate_class_constant(builtin("halving"), "no-such-class")


def test_enriched_examples():
    neg = estimate_enriched(builtin("negation"), "enriched-contraction", [0.0, 0.5, 1.0, 2.0])
    assert neg.enrichment == 1.0 and neg.constant == 0.0 and neg.satisfied
    half = estimate_enriched(builtin("halving"), "enriched-contraction", [0.0, 1.0])
    assert half.enrichment == 0.0 and half.constant == 0.5
    assert [s["constant"] for s in half.scan] == pytest.approx([0.5, 1.5], rel=1e-12)


def test_enriched_grid_validation():
    with pytest.raises(ValueError):
        estimate_enriched(builtin("halving"), "kannan", [])
    with pytest.raises(ValueError):
        estimate_enriched(builtin("halving"), "kannan", [0.0, -1.0])


@pytest.mark.parametrize("name", ["halving", "negation", "split-halving", "twin-negation", "rotation-2d"])
@pytest.mark.parametrize(
    "enriched,plain",
    [
        ("enriched-contraction", "contraction"),
        ("enriched-kannan", "kannan"),
        ("enriched-chatterjea", "chatterjea"),
        ("enriched-crr", "reich"),
    ],
)
def test_zero_shift_collapses_to_plain(name, enriched, plain):
    T = builtin(name)
    sample = sample_pairs(T, pairs_cap=3000)
    e = estimate_enriched(T, enriched, [0.0], sample)
    p = estimate_class_constant(T, plain, sample)
    assert (e.constant, e.params, e.satisfied, e.witness) == (p.constant, p.params, p.satisfied, p.witness)


def test_derived_constants():
    assert kannan_k(1 / 3) == pytest.approx(0.5, rel=1e-15)
    assert kannan_k(1.0) is None
    assert crr_delta(0.2, 0.2) == pytest.approx(0.5, rel=1e-15)
    assert gornicki_k(0.25) == pytest.approx(2 / 3)


def test_certify_halving_report():
    r = certify(builtin("halving"))
    assert r.plain["contraction"].constant == 0.5 and r.plain["contraction"].satisfied
    k = r.derived["k"]["contraction"]
    assert k["value"] == 1.0 and k["bound_applicable"] is False
    assert r.sample["exhaustive"] and r.sample["n_pairs"] == 41 * 40 // 2
    assert r.gornicki_descent.a == 0.5 and r.gornicki_descent.b == 1.0
    assert r.gornicki_descent.failures == 0


def test_certify_negation_enriched_kannan():
    r = certify(builtin("negation"), CertifyConfig(b_grid=(0.0, 0.5, 1.0)))
    ek = r.enriched["enriched-kannan"]
    assert ek.enrichment == 1.0 and ek.constant == 0.0 and ek.satisfied
    assert r.derived["lambda"]["enriched-kannan"] == 0.5


def test_report_round_trip():
    r = certify(builtin("twin-negation"), CertifyConfig(b_grid=(0.0, 1.0)))
    text = json.dumps(r.to_dict(), sort_keys=True)
    again = MappingClassReport.from_dict(json.loads(text))
    assert json.dumps(again.to_dict(), sort_keys=True) == text


def test_config_validation():
    with pytest.raises(ValueError):
        CertifyConfig(b_grid=())
    with pytest.raises(ValueError):
        CertifyConfig(b_grid=(-1.0,))
    with pytest.raises(ValueError):
        CertifyConfig(pairs_cap=0)


def test_seeded_sampling():
    T = builtin("rotation-2d")
    a, b = sample_pairs(T, 500, seed=1), sample_pairs(T, 500, seed=1)
    c = sample_pairs(T, 500, seed=2)
    assert np.array_equal(a.index, b.index) and not np.array_equal(a.index, c.index)
    assert not a.description["exhaustive"] and len(a) == 500
    assert len({tuple(p) for p in a.index}) == 500


# --- invariants -----------------------------------------------------------------


@pytest.mark.parametrize("name", ["halving", "split-halving", "twin-negation", "rotation-2d"])
@pytest.mark.parametrize("cls", sorted(RATIO_DEN))
def test_ratio_soundness(name, cls):
    T = builtin(name)
    sample = sample_pairs(T, pairs_cap=1500, seed=4)
    est = estimate_class_constant(T, cls, sample)
    skipped = 0
    for x, y in _pairs(sample):
        Tx, Ty = T.evaluate(x).to_list(), T.evaluate(y).to_list()
        den = RATIO_DEN[cls](x, y, Tx, Ty)
        H = oracles.hausdorff(Tx, Ty)
        if den < 1e-12:
            skipped += 1
            continue
        assert H <= est.constant * den * (1 + 1e-12) + 1e-15
    assert skipped == est.n_skipped
    if est.witness is not None:
        x, y = est.witness
        Tx, Ty = T.evaluate(x).to_list(), T.evaluate(y).to_list()
        assert oracles.hausdorff(Tx, Ty) == pytest.approx(est.constant * RATIO_DEN[cls](x, y, Tx, Ty), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", ["halving", "quarter", "rotation-2d", "split-halving"])
@pytest.mark.parametrize("cls", ["crr", "reich"])
def test_two_constant_soundness(name, cls):
    T = builtin(name)
    sample = sample_pairs(T, pairs_cap=1500, seed=4)
    est = estimate_class_constant(T, cls, sample)
    assert est.satisfied
    a, b = est.params["a"], est.params["b"]
    assert a + 2 * b < 1
    for x, y in _pairs(sample):
        Tx, Ty = T.evaluate(x).to_list(), T.evaluate(y).to_list()
        if cls == "crr":
            extra = oracles.set_dist(x, Ty) + oracles.set_dist(y, Tx)
        else:
            extra = oracles.set_dist(x, Tx) + oracles.set_dist(y, Ty)
        assert oracles.hausdorff(Tx, Ty) <= (a * oracles.dist(x, y) + b * extra) * (1 + 1e-12) + 1e-15


def test_crr_unsatisfiable_is_reported():
    est = estimate_class_constant(builtin("negation"), "crr")
    assert not est.satisfied and est.constant is None


@pytest.mark.parametrize("cls", ["contraction", "kannan", "chatterjea", "gornicki"])
def test_monotone_in_sample(cls):
    T = builtin("rotation-2d")
    small = sample_pairs(T, 300, seed=1)
    big = small.union(sample_pairs(T, 300, seed=2))
    assert estimate_class_constant(T, cls, big).constant >= estimate_class_constant(T, cls, small).constant


@pytest.mark.parametrize("s", [0.1, 3.0, 17.0])
def test_contraction_scale_covariance(s):
    T = builtin("rotation-2d")
    D = T.domain
    Ts = FunctionMap(
        lambda x: s * T.evaluate(x / s).points,
        Domain.box(np.asarray(D.lo) * s, np.asarray(D.hi) * s, D.grid),
    )
    a = estimate_class_constant(T, "contraction", sample_pairs(T, 2000, 0)).constant
    b = estimate_class_constant(Ts, "contraction", sample_pairs(Ts, 2000, 0)).constant
    assert a == pytest.approx(b, rel=1e-9)


def test_explicit_pairs():
    est = estimate_class_constant(builtin("halving"), "contraction", [([1.0], [3.0]), ([0.0], [-2.0])])
    assert est.constant == 0.5 and est.n_pairs == 2
    assert PairSample.from_pairs([([1.0], [3.0])]).points.shape == (2, 1)


def test_gornicki_descent_explicit_constants():
    T = builtin("halving")
    pts = T.domain.nodes()
    assert estimate_gornicki_descent(T, pts, 0.5, 1.0).failures == 0
    tight = estimate_gornicki_descent(T, pts, 0.4, 1.0)
    # only the fixed node 0 admits a descent point
    assert tight.failures == len(pts) - 1 and not tight.satisfied
