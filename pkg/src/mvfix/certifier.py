"""Sample-based estimation of contractive-class constants.

Every estimate is relative to a finite sample of domain point pairs: the
returned constant is the smallest one for which the class inequality holds on
every sampled pair, and the witness is the pair that forces it. A report is a
falsifiable statement about the sample, never a proof over the whole space.

Ratio-type classes (``H(Tx,Ty) <= c * denominator``):

==========================  ==================================================
class                       denominator
==========================  ==================================================
contraction                 d(x,y)
kannan                      d(x,Tx) + d(y,Ty)
chatterjea                  d(x,Ty) + d(y,Tx)
gornicki                    d(x,Tx) + d(y,Ty) + d(x,y)
==========================  ==================================================

Two-constant classes, found by grid search over ``a, b`` with ``a + 2b < 1``:
``crr`` (``a d(x,y) + b[d(x,Ty) + d(y,Tx)]``) and ``reich``
(``a d(x,y) + b[d(x,Tx) + d(y,Ty)]``).

Enriched variants replace the left side by ``H(bx+Tx, by+Ty)``; the enriched
Chatterjea denominator becomes ``d((b+1)x, by+Ty) + d((b+1)y, bx+Tx)`` and
enriched CRR uses the ``reich`` right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .mappings import MultiMap, residual
from .solver import gornicki_step

__all__ = [
    "PLAIN_CLASSES",
    "ENRICHED_CLASSES",
    "DEFAULT_B_GRID",
    "PairSample",
    "ClassEstimate",
    "GornickiDescent",
    "CertifyConfig",
    "MappingClassReport",
    "sample_pairs",
    "estimate_class_constant",
    "estimate_enriched",
    "estimate_gornicki_descent",
    "certify",
    "kannan_k",
    "gornicki_k",
    "crr_delta",
]

PLAIN_CLASSES = ("contraction", "kannan", "chatterjea", "gornicki", "crr", "reich")
ENRICHED_CLASSES = ("enriched-contraction", "enriched-kannan", "enriched-chatterjea", "enriched-crr")
DEFAULT_B_GRID = (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)

# denominators below this are skipped rather than divided by
SKIP_BELOW = 1e-12
_CHUNK = 2048


def kannan_k(theta: float) -> float | None:
    """``theta / (1 - theta)``, or None when ``theta >= 1``."""
    return theta / (1.0 - theta) if theta < 1.0 else None


def gornicki_k(M: float) -> float | None:
    return 2.0 * M / (1.0 - M) if M < 1.0 else None


def crr_delta(a: float, b: float) -> float | None:
    """``(a + b) / (1 - b)``, the single constant the CRR conditions collapse to."""
    return (a + b) / (1.0 - b) if b < 1.0 else None


# --------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class PairSample:
    points: np.ndarray
    index: np.ndarray
    description: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.index) == 0:
            raise ValueError("empty pair sample")
        if len(self.points) < 2:
            raise ValueError("need at least two distinct sample points")

    def __len__(self) -> int:
        return len(self.index)

    def union(self, other: PairSample) -> PairSample:
        """Pairs of both samples over a shared point table."""
        pts = np.concatenate([self.points, other.points])
        idx = np.concatenate([self.index, other.index + len(self.points)])
        return PairSample(pts, idx, {"kind": "union", "n_pairs": int(len(idx))})

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence[float], Sequence[float]]]) -> PairSample:
        pts: list[tuple[float, ...]] = []
        lookup: dict[tuple[float, ...], int] = {}
        idx = []
        for x, y in pairs:
            row = []
            for p in (x, y):
                key = tuple(float(c) for c in np.atleast_1d(p))
                if key not in lookup:
                    lookup[key] = len(pts)
                    pts.append(key)
                row.append(lookup[key])
            idx.append(row)
        if not idx:
            raise ValueError("empty pair sample")
        return cls(np.asarray(pts, dtype=float), np.asarray(idx, dtype=int), {"kind": "explicit", "n_pairs": len(idx)})


def sample_pairs(T: MultiMap, pairs_cap: int = 20_000, seed: int = 0) -> PairSample:
    """All grid-node pairs if there are at most ``pairs_cap``, else a seeded
    uniform sample of ``pairs_cap`` distinct node pairs."""
    nodes = T.domain.nodes()
    n = len(nodes)
    total = n * (n - 1) // 2
    if total == 0:
        raise ValueError("domain grid has fewer than two nodes")
    iu, ju = np.triu_indices(n, 1)
    if total <= pairs_cap:
        chosen = np.arange(total)
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.choice(total, size=pairs_cap, replace=False))
        exhaustive = False
    desc = {
        "kind": "grid",
        "domain": T.domain.to_dict(),
        "n_nodes": n,
        "n_pairs": int(len(chosen)),
        "pairs_cap": int(pairs_cap),
        "seed": int(seed),
        "exhaustive": exhaustive,
    }
    return PairSample(nodes, np.stack([iu[chosen], ju[chosen]], axis=1), desc)


def _as_sample(T: MultiMap, pairs) -> PairSample:
    if pairs is None:
        return sample_pairs(T)
    if isinstance(pairs, PairSample):
        return pairs
    return PairSample.from_pairs(pairs)


# --------------------------------------------------------------------------
# vectorised pair quantities


def _image_table(T: MultiMap, points: np.ndarray) -> np.ndarray:
    sets = [T.evaluate(p).points for p in points]
    K = max(len(s) for s in sets)
    # pad with repeats of the first member: min/max distances are unchanged
    return np.stack([np.concatenate([s, np.repeat(s[:1], K - len(s), axis=0)]) for s in sets])


def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(v * v, axis=-1))


class _PairTerms:
    """Per-pair distances for one map over one sample, computed in chunks."""

    def __init__(self, T: MultiMap, sample: PairSample) -> None:
        self.sample = sample
        self.pts = sample.points
        self.img = _image_table(T, self.pts)
        i, j = sample.index[:, 0], sample.index[:, 1]
        self.i, self.j = i, j
        self.dxy = _norm(self.pts[i] - self.pts[j])
        self_dist = _norm(self.img - self.pts[:, None, :]).min(axis=1)
        self.dxTx, self.dyTy = self_dist[i], self_dist[j]
        self.dxTy = self._point_to_set(self.pts[i], self.img, j)
        self.dyTx = self._point_to_set(self.pts[j], self.img, i)
        self._H: dict[float, np.ndarray] = {}

    @staticmethod
    def _point_to_set(p: np.ndarray, img: np.ndarray, which: np.ndarray) -> np.ndarray:
        out = np.empty(len(p))
        for s in range(0, len(p), _CHUNK):
            sl = slice(s, s + _CHUNK)
            out[sl] = _norm(img[which[sl]] - p[sl, None, :]).min(axis=1)
        return out

    def shifted(self, b: float) -> np.ndarray:
        return self.img + b * self.pts[:, None, :] if b else self.img

    def H(self, b: float = 0.0) -> np.ndarray:
        """``H(bx + Tx, by + Ty)`` per pair."""
        if b not in self._H:
            img = self.shifted(b)
            out = np.empty(len(self.i))
            for s in range(0, len(self.i), _CHUNK):
                sl = slice(s, s + _CHUNK)
                A, B = img[self.i[sl]], img[self.j[sl]]
                D = _norm(A[:, :, None, :] - B[:, None, :, :])
                out[sl] = np.maximum(D.min(axis=2).max(axis=1), D.min(axis=1).max(axis=1))
            self._H[b] = out
        return self._H[b]

    def scaled_cross(self, b: float) -> np.ndarray:
        """``d((b+1)x, by+Ty) + d((b+1)y, bx+Tx)`` per pair."""
        img = self.shifted(b)
        sx = (b + 1.0) * self.pts[self.i]
        sy = (b + 1.0) * self.pts[self.j]
        return self._point_to_set(sx, img, self.j) + self._point_to_set(sy, img, self.i)

    def witness(self, k: int) -> list[list[float]]:
        return [self.pts[self.i[k]].tolist(), self.pts[self.j[k]].tolist()]


# --------------------------------------------------------------------------
# estimates


@dataclass
class ClassEstimate:
    """Constant estimate for one class on one sample.

    ``constant`` is the class constant (theta or M), or ``a + 2b`` for the
    two-constant classes; ``params`` names each constant. ``enrichment`` is
    the shift ``b`` (``c`` for CRR) chosen for enriched classes.
    """

    name: str
    constant: float | None
    params: dict[str, float]
    satisfied: bool
    witness: list[list[float]] | None
    n_pairs: int
    n_skipped: int
    enrichment: float | None = None
    scan: list[dict[str, Any]] | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ClassEstimate:
        return cls(**d)


def _ratio_estimate(name: str, num: np.ndarray, den: np.ndarray, terms: _PairTerms, threshold: float, key: str) -> ClassEstimate:
    ok = den >= SKIP_BELOW
    n_skipped = int(np.count_nonzero(~ok))
    if not ok.any():
        return ClassEstimate(name, 0.0, {key: 0.0}, 0.0 < threshold, None, len(num), n_skipped)
    ratio = np.where(ok, num / np.where(ok, den, 1.0), -np.inf)
    k = int(np.argmax(ratio))
    c = float(ratio[k])
    return ClassEstimate(name, c, {key: c}, c < threshold, terms.witness(k), len(num), n_skipped)


def _two_constant_estimate(name: str, H: np.ndarray, cross: np.ndarray, terms: _PairTerms, step: float) -> ClassEstimate:
    """Smallest ``a + 2b`` on the ``step`` lattice with ``H <= a d + b cross``."""
    n_div = int(round(1.0 / step))
    d = terms.dxy
    ok = d >= SKIP_BELOW
    n_skipped = int(np.count_nonzero(~ok))
    best: tuple[int, int, int, int] | None = None
    for kb in range(0, (n_div - 1) // 2 + 1):
        b = kb / n_div
        # pairs with x == y admit no a; they must hold through the b term
        if np.any(H[~ok] > b * cross[~ok]):
            continue
        if ok.any():
            need = np.where(ok, (H - b * cross) / np.where(ok, d, 1.0), -np.inf)
            w = int(np.argmax(need))
            a_req = max(float(need[w]), 0.0)
        else:
            w, a_req = 0, 0.0
        ka = max(int(math.ceil(a_req * n_div - 1e-9)), 0)
        while ka / n_div < a_req:
            ka += 1
        if ka + 2 * kb >= n_div:
            continue
        if best is None or (ka + 2 * kb, ka, kb) < best[:3]:
            best = (ka + 2 * kb, ka, kb, w)
    if best is None:
        return ClassEstimate(name, None, {}, False, None, len(H), n_skipped)
    _, ka, kb, w = best
    a, b = ka / n_div, kb / n_div
    return ClassEstimate(name, a + 2 * b, {"a": a, "b": b}, True, terms.witness(w), len(H), n_skipped)


def _plain(name: str, terms: _PairTerms, crr_step: float) -> ClassEstimate:
    H = terms.H(0.0)
    if name == "contraction":
        return _ratio_estimate(name, H, terms.dxy, terms, 1.0, "theta")
    if name == "kannan":
        return _ratio_estimate(name, H, terms.dxTx + terms.dyTy, terms, 0.5, "theta")
    if name == "chatterjea":
        return _ratio_estimate(name, H, terms.dxTy + terms.dyTx, terms, 0.5, "theta")
    if name == "gornicki":
        return _ratio_estimate(name, H, terms.dxTx + terms.dyTy + terms.dxy, terms, 1.0, "M")
    if name == "crr":
        return _two_constant_estimate(name, H, terms.dxTy + terms.dyTx, terms, crr_step)
    if name == "reich":
        return _two_constant_estimate(name, H, terms.dxTx + terms.dyTy, terms, crr_step)
    raise ValueError(f"unknown class {name!r}; choose from {PLAIN_CLASSES}")


def _enriched_at(name: str, terms: _PairTerms, b: float, crr_step: float) -> ClassEstimate:
    H = terms.H(b)
    if name == "enriched-contraction":
        return _ratio_estimate(name, H, terms.dxy, terms, b + 1.0, "theta")
    if name == "enriched-kannan":
        return _ratio_estimate(name, H, terms.dxTx + terms.dyTy, terms, 0.5, "theta")
    if name == "enriched-chatterjea":
        return _ratio_estimate(name, H, terms.scaled_cross(b), terms, 0.5, "theta")
    if name == "enriched-crr":
        return _two_constant_estimate(name, H, terms.dxTx + terms.dyTy, terms, crr_step)
    raise ValueError(f"unknown enriched class {name!r}; choose from {ENRICHED_CLASSES}")


def estimate_class_constant(T: MultiMap, cls: str, pairs=None, *, crr_step: float = 0.01) -> ClassEstimate:
    """Tightest constant for a plain class on the sampled pairs.

    ``pairs`` is a :class:`PairSample`, an iterable of ``(x, y)`` point
    pairs, or None for the default grid sample of ``T``.
    """
    return _plain(cls, _PairTerms(T, _as_sample(T, pairs)), crr_step)


def _enriched_name(cls: str) -> str:
    name = cls if cls.startswith("enriched-") else f"enriched-{cls}"
    if name not in ENRICHED_CLASSES:
        raise ValueError(f"unknown enriched class {cls!r}; choose from {ENRICHED_CLASSES}")
    return name


def _estimate_enriched(name: str, terms: _PairTerms, b_grid: Sequence[float], crr_step: float) -> ClassEstimate:
    b_grid = [float(b) for b in b_grid]
    if not b_grid:
        raise ValueError("b_grid must be nonempty")
    if any(not b >= 0.0 for b in b_grid):
        raise ValueError("b_grid entries must be >= 0")
    scan, best, best_key = [], None, None
    for b in b_grid:
        est = _enriched_at(name, terms, b, crr_step)
        scan.append({"b": b, "constant": est.constant, "satisfied": est.satisfied})
        c = est.constant if est.constant is not None else math.inf
        key = (not est.satisfied, c, b)
        if best_key is None or key < best_key:
            best, best_key = est, key
            best.enrichment = b
    assert best is not None
    best.scan = scan
    return best


def estimate_enriched(
    T: MultiMap, cls: str, b_grid: Sequence[float] = DEFAULT_B_GRID, pairs=None, *, crr_step: float = 0.01
) -> ClassEstimate:
    """Scan enrichment shifts and keep the best one.

    Satisfied shifts beat unsatisfied ones, then the smaller constant wins,
    then the smaller shift. With ``b_grid=[0]`` this is the plain estimate of
    the matching class (``reich`` for enriched CRR).
    """
    name = _enriched_name(cls)
    return _estimate_enriched(name, _PairTerms(T, _as_sample(T, pairs)), b_grid, crr_step)


# --------------------------------------------------------------------------
# Gornicki descent clause


@dataclass
class GornickiDescent:
    a: float
    b: float
    estimated: bool
    nodes_checked: int
    failures: int

    @property
    def satisfied(self) -> bool:
        return self.a < 1.0 and self.failures == 0


def estimate_gornicki_descent(T: MultiMap, points: np.ndarray, a: float | None = None, b: float | None = None) -> GornickiDescent:
    """Check the descent clause at every sample node.

    Without explicit ``a, b`` they are estimated from image points: at each
    node the image point with the smallest residual ratio is taken, and
    ``a, b`` are the largest ratios seen.
    """
    estimated = a is None or b is None
    if estimated:
        a_hat = b_hat = 0.0
        for x in points:
            r = residual(T, x)
            if r == 0.0:
                continue
            best = min((residual(T, u) / r, float(np.linalg.norm(u - x)) / r) for u in T.evaluate(x).points)
            a_hat, b_hat = max(a_hat, best[0]), max(b_hat, best[1])
        a = a if a is not None else a_hat
        b = b if b is not None else b_hat
    if not a < 1.0:
        return GornickiDescent(float(a), float(b), estimated, len(points), len(points))
    failures = sum(gornicki_step(T, x, a, b) is None for x in points)
    return GornickiDescent(float(a), float(b), estimated, len(points), int(failures))


# --------------------------------------------------------------------------
# full report


@dataclass(frozen=True)
class CertifyConfig:
    b_grid: tuple[float, ...] = DEFAULT_B_GRID
    pairs_cap: int = 20_000
    seed: int = 0
    crr_step: float = 0.01
    gornicki_a: float | None = None
    gornicki_b: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "b_grid", tuple(float(b) for b in self.b_grid))
        if not self.b_grid:
            raise ValueError("b_grid must be nonempty")
        if any(not b >= 0.0 for b in self.b_grid):
            raise ValueError("b_grid entries must be >= 0")
        if self.pairs_cap < 1:
            raise ValueError("pairs_cap must be >= 1")
        if not 0.0 < self.crr_step < 0.5:
            raise ValueError("crr_step must lie in (0, 0.5)")


@dataclass
class MappingClassReport:
    sample: dict[str, Any]
    plain: dict[str, ClassEstimate]
    enriched: dict[str, ClassEstimate]
    gornicki_descent: GornickiDescent
    derived: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample": self.sample,
            "plain": {k: v.to_dict() for k, v in self.plain.items()},
            "enriched": {k: v.to_dict() for k, v in self.enriched.items()},
            "gornicki_descent": asdict(self.gornicki_descent),
            "derived": self.derived,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> MappingClassReport:
        return cls(
            sample=d["sample"],
            plain={k: ClassEstimate.from_dict(v) for k, v in d["plain"].items()},
            enriched={k: ClassEstimate.from_dict(v) for k, v in d["enriched"].items()},
            gornicki_descent=GornickiDescent(**d["gornicki_descent"]),
            derived=d["derived"],
        )

    @property
    def gornicki_satisfied(self) -> bool:
        M = self.plain["gornicki"]
        return M.satisfied and self.gornicki_descent.satisfied


def _k_entry(theta: float | None, fn) -> dict[str, Any]:
    k = fn(theta) if theta is not None else None
    return {"value": k, "bound_applicable": k is not None and k < 1.0}


def certify(T: MultiMap, config: CertifyConfig | None = None) -> MappingClassReport:
    """Estimate every plain and enriched class on one deterministic sample."""
    config = config or CertifyConfig()
    sample = sample_pairs(T, config.pairs_cap, config.seed)
    terms = _PairTerms(T, sample)
    plain = {name: _plain(name, terms, config.crr_step) for name in PLAIN_CLASSES}
    enriched = {name: _estimate_enriched(name, terms, config.b_grid, config.crr_step) for name in ENRICHED_CLASSES}
    descent = estimate_gornicki_descent(T, sample.points, config.gornicki_a, config.gornicki_b)

    derived: dict[str, Any] = {"k": {}, "crr_delta": {}}
    for name in ("contraction", "kannan", "chatterjea"):
        derived["k"][name] = _k_entry(plain[name].constant, kannan_k)
    for name in ("enriched-kannan", "enriched-chatterjea"):
        derived["k"][name] = _k_entry(enriched[name].constant, kannan_k)
    derived["k"]["gornicki"] = _k_entry(plain["gornicki"].constant, gornicki_k)
    for name, est in (("crr", plain["crr"]), ("reich", plain["reich"]), ("enriched-crr", enriched["enriched-crr"])):
        delta = crr_delta(est.params["a"], est.params["b"]) if est.satisfied else None
        derived["crr_delta"][name] = {"value": delta, "bound_applicable": delta is not None and delta < 1.0}
    for name, est in enriched.items():
        if est.enrichment is not None:
            derived.setdefault("lambda", {})[name] = 1.0 / (est.enrichment + 1.0)

    sample_desc = dict(sample.description, b_grid=list(config.b_grid), crr_step=config.crr_step)
    return MappingClassReport(sample_desc, plain, enriched, descent, derived)
