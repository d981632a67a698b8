"""Price distributions with exact expectations and reproducible sampling.

Three concrete kinds plus a mixture wrapper:

- ``DiscreteFinite`` — finite atom list, the primary exact path.
- ``UniformInterval`` — Uniform[lo, hi).
- ``Perturbed`` — a DiscreteFinite base plus independent Uniform[-eps, eps]
  noise, the continuity device used when a result needs an exact median in
  the sense P(X < T) = P(X >= T) = 1/2.

Every expectation here is evaluated in closed form.  Discrete pairs go
through direct atom-pair double sums; anything with a continuous part is
decomposed into weighted {atom, interval} components with per-component
closed-form integrals, which is exact for all supported kinds (no adaptive
quadrature involved).

The straddle expectation uses the half-open indicator

    E[ |X1 - X2| * 1{exactly one of X1, X2 >= T} ]

i.e. T in (min, max].  This is the exact expected-value driver of the strict
"buy iff price < T, sell iff price >= T" policy and coincides with the closed
interval whenever the distributions are continuous at T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import IntegrationFailure, InvalidParam

PROB_TOL = 1e-12
MEDIAN_SLACK = 1e-12


# ---------------------------------------------------------------------------
# kinds


@dataclass(frozen=True)
class DiscreteFinite:
    """Finite discrete distribution; atoms normalized at construction."""

    atoms: tuple[tuple[float, float], ...]

    def __init__(self, atoms: Iterable[tuple[float, float]]):
        merged: dict[float, float] = {}
        total = 0.0
        for v, p in atoms:
            v, p = float(v), float(p)
            if not (math.isfinite(v) and math.isfinite(p)):
                raise InvalidParam(f"non-finite atom ({v}, {p})")
            if p < -PROB_TOL:
                raise InvalidParam(f"negative probability {p} at value {v}")
            merged[v] = merged.get(v, 0.0) + p
            total += p
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidParam(f"probabilities sum to {total!r}, not 1")
        cleaned = tuple(sorted((v, p) for v, p in merged.items() if p > 0.0))
        if not cleaned:
            raise InvalidParam("distribution has no support")
        object.__setattr__(self, "atoms", cleaned)

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for v, _ in self.atoms)

    @property
    def probs(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.atoms)


@dataclass(frozen=True)
class UniformInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidParam("non-finite interval endpoint")
        if not self.lo < self.hi:
            raise InvalidParam(f"need lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Perturbed:
    """base + Uniform[-epsilon, epsilon], independent per draw."""

    base: DiscreteFinite
    epsilon: float

    def __post_init__(self):
        if not isinstance(self.base, DiscreteFinite):
            raise InvalidParam("Perturbed base must be DiscreteFinite")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParam("epsilon must be > 0")


Dist = Union[DiscreteFinite, UniformInterval, Perturbed]


@dataclass(frozen=True)
class MixtureDist:
    """Weighted mixture of Dists (uniform weights by default)."""

    components: tuple[Dist, ...]
    weights: tuple[float, ...]

    def __init__(self, components: Iterable[Dist], weights=None):
        comps = tuple(components)
        if not comps:
            raise InvalidParam("mixture needs at least one component")
        if weights is None:
            w = tuple(1.0 / len(comps) for _ in comps)
        else:
            w = tuple(float(x) for x in weights)
            if len(w) != len(comps):
                raise InvalidParam("weights length != components length")
            if any(x < -PROB_TOL for x in w) or abs(sum(w) - 1.0) > 1e-9:
                raise InvalidParam("mixture weights must be >= 0 and sum to 1")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)


AnyDist = Union[Dist, MixtureDist]


# ---------------------------------------------------------------------------
# component decomposition: every dist is a weighted set of atoms and intervals

_ATOM = 0
_INTERVAL = 1


def _components(d: AnyDist, weight: float = 1.0) -> list[tuple[float, int, float, float]]:
    """Flatten to [(weight, tag, a, b)] with tag ATOM (value a) or INTERVAL [a,b]."""
    if isinstance(d, DiscreteFinite):
        return [(weight * p, _ATOM, v, v) for v, p in d.atoms]
    if isinstance(d, UniformInterval):
        return [(weight, _INTERVAL, d.lo, d.hi)]
    if isinstance(d, Perturbed):
        e = d.epsilon
        return [(weight * p, _INTERVAL, v - e, v + e) for v, p in d.base.atoms]
    if isinstance(d, MixtureDist):
        out = []
        for comp, w in zip(d.components, d.weights):
            if w > 0.0:
                out.extend(_components(comp, weight * w))
        return out
    raise InvalidParam(f"not a distribution: {d!r}")


def is_discrete(d: AnyDist) -> bool:
    if isinstance(d, DiscreteFinite):
        return True
    if isinstance(d, MixtureDist):
        return all(is_discrete(c) for c in d.components)
    return False


def as_discrete(d: AnyDist) -> DiscreteFinite:
    """Collapse a purely discrete dist/mixture into one DiscreteFinite."""
    if isinstance(d, DiscreteFinite):
        return d
    if is_discrete(d):
        return DiscreteFinite([(a, w) for w, tag, a, _ in _components(d)])
    raise InvalidParam("distribution has a continuous part")


# ---------------------------------------------------------------------------
# pointwise CDF pieces and partial moments


def cdf(d: AnyDist, x: float) -> float:
    """P(X <= x)."""
    total = 0.0
    for w, tag, a, b in _components(d):
        if tag == _ATOM:
            if a <= x:
                total += w
        else:
            if x >= b:
                total += w
            elif x > a:
                total += w * (x - a) / (b - a)
    return total


def prob_below(d: AnyDist, t: float) -> float:
    """P(X < t) — the buy-side mass of a threshold at t."""
    total = 0.0
    for w, tag, a, b in _components(d):
        if tag == _ATOM:
            if a < t:
                total += w
        else:
            if t >= b:
                total += w
            elif t > a:
                total += w * (t - a) / (b - a)
    return total


def upper_partial(d: AnyDist, t: float) -> float:
    """E[(X - t) * 1{X >= t}]."""
    total = 0.0
    for w, tag, a, b in _components(d):
        if tag == _ATOM:
            if a >= t:
                total += w * (a - t)
        else:
            if t <= a:
                total += w * (0.5 * (a + b) - t)
            elif t < b:
                total += w * (b - t) ** 2 / (2.0 * (b - a))
    return total


def lower_partial(d: AnyDist, t: float) -> float:
    """E[(t - X) * 1{X < t}]."""
    total = 0.0
    for w, tag, a, b in _components(d):
        if tag == _ATOM:
            if a < t:
                total += w * (t - a)
        else:
            if t >= b:
                total += w * (t - 0.5 * (a + b))
            elif t > a:
                total += w * (t - a) ** 2 / (2.0 * (b - a))
    return total


def dist_mean(d: AnyDist) -> float:
    return math.fsum(
        w * (a if tag == _ATOM else 0.5 * (a + b)) for w, tag, a, b in _components(d)
    )


# ---------------------------------------------------------------------------
# exact expectations


def _abs_comp(c1, c2) -> float:
    """E|U - V| for two independent components."""
    w1, t1, a1, b1 = c1
    w2, t2, a2, b2 = c2
    if t1 == _ATOM and t2 == _ATOM:
        return abs(a1 - a2)
    if t1 == _ATOM:
        return _abs_atom_interval(a1, a2, b2)
    if t2 == _ATOM:
        return _abs_atom_interval(a2, a1, b1)
    return _abs_interval_interval(a1, b1, a2, b2)


def _abs_atom_interval(v: float, c: float, d: float) -> float:
    if v <= c:
        return 0.5 * (c + d) - v
    if v >= d:
        return v - 0.5 * (c + d)
    return ((v - c) ** 2 + (d - v) ** 2) / (2.0 * (d - c))


def _abs_interval_interval(a: float, b: float, c: float, d: float) -> float:
    # E|U-V| = (1/(b-a)) * int_a^b E|u - V| du, split at c and d.
    def seg_below(l, r):  # u <= c: integrand (c+d)/2 - u
        return (0.5 * (c + d)) * (r - l) - 0.5 * (r * r - l * l)

    def seg_above(l, r):  # u >= d: integrand u - (c+d)/2
        return 0.5 * (r * r - l * l) - (0.5 * (c + d)) * (r - l)

    def seg_inside(l, r):  # c <= u <= d
        anti = lambda u: ((u - c) ** 3 - (d - u) ** 3) / (6.0 * (d - c))
        return anti(r) - anti(l)

    total = 0.0
    lo, hi = a, min(b, c)
    if hi > lo:
        total += seg_below(lo, hi)
    lo, hi = max(a, c), min(b, d)
    if hi > lo:
        total += seg_inside(lo, hi)
    lo, hi = max(a, d), b
    if hi > lo:
        total += seg_above(lo, hi)
    return total / (b - a)


def expected_abs_diff(d1: AnyDist, d2: AnyDist) -> float:
    """E|X1 - X2| for independent X1 ~ d1, X2 ~ d2 (exact)."""
    if isinstance(d1, DiscreteFinite) and isinstance(d2, DiscreteFinite):
        v1 = np.asarray(d1.values)
        p1 = np.asarray(d1.probs)
        v2 = np.asarray(d2.values)
        p2 = np.asarray(d2.probs)
        return float(p1 @ np.abs(v1[:, None] - v2[None, :]) @ p2)
    c1, c2 = _components(d1), _components(d2)
    _require_finite(c1 + c2)
    return math.fsum(a[0] * b[0] * _abs_comp(a, b) for a in c1 for b in c2)


def expected_abs_dev(d: AnyDist, t: float) -> float:
    """E|X - t|."""
    if not math.isfinite(t):
        raise IntegrationFailure(f"non-finite deviation point {t}")
    return upper_partial(d, t) + lower_partial(d, t)


def expected_straddle(d1: AnyDist, d2: AnyDist, t: float) -> float:
    """E[|X1 - X2| * 1{exactly one of X1, X2 is >= t}] for independent draws.

    This is exactly the per-pair value captured by a threshold policy at t:
    the pair trades iff one draw falls on the buy side (< t) and the other on
    the sell side (>= t).
    """
    if not math.isfinite(t):
        raise IntegrationFailure(f"non-finite threshold {t}")
    if isinstance(d1, DiscreteFinite) and isinstance(d2, DiscreteFinite):
        v1 = np.asarray(d1.values)
        p1 = np.asarray(d1.probs)
        v2 = np.asarray(d2.values)
        p2 = np.asarray(d2.probs)
        hi1 = v1 >= t
        hi2 = v2 >= t
        fires = hi1[:, None] != hi2[None, :]
        return float(p1 @ (np.abs(v1[:, None] - v2[None, :]) * fires) @ p2)
    # E[(X1-t)1{X1>=t}] P(X2<t) + P(X1>=t) E[(t-X2)1{X2<t}] + symmetric
    pb1, pb2 = prob_below(d1, t), prob_below(d2, t)
    up1, up2 = upper_partial(d1, t), upper_partial(d2, t)
    lo1, lo2 = lower_partial(d1, t), lower_partial(d2, t)
    return (up1 * pb2 + (1.0 - pb1) * lo2) + (up2 * pb1 + (1.0 - pb2) * lo1)


def expected_pos_diff(d1: AnyDist, d2: AnyDist) -> float:
    """E[(X2 - X1)_+] via (E|X1-X2| + E X2 - E X1) / 2."""
    return 0.5 * (expected_abs_diff(d1, d2) + dist_mean(d2) - dist_mean(d1))


def _require_finite(comps) -> None:
    for w, tag, a, b in comps:
        if not (math.isfinite(w) and math.isfinite(a) and math.isfinite(b)):
            raise IntegrationFailure("non-finite component in exact integration")


# ---------------------------------------------------------------------------
# median


def median(d: AnyDist) -> float:
    """Median of d.

    DiscreteFinite: the smallest atom value whose CDF reaches 1/2 (with a
    1e-12 slack so constructions whose CDF hits 1/2 exactly in real
    arithmetic are not split by float rounding).  Kinds with a continuous
    part: the exact solution of CDF(t) = 1/2; if a whole interval solves it,
    its midpoint.
    """
    if isinstance(d, DiscreteFinite) or (isinstance(d, MixtureDist) and is_discrete(d)):
        dd = as_discrete(d)
        acc = 0.0
        for v, p in dd.atoms:
            acc += p
            if acc >= 0.5 - MEDIAN_SLACK:
                return v
        return dd.atoms[-1][0]  # unreachable: probs sum to 1
    comps = _components(d)
    t_lo, via_jump = _first_cdf_reach(comps, 0.5 - MEDIAN_SLACK, strict=False)
    if via_jump:
        return t_lo
    t_hi, _ = _first_cdf_reach(comps, 0.5 + MEDIAN_SLACK, strict=True)
    return 0.5 * (t_lo + t_hi)


def _first_cdf_reach(comps, c: float, strict: bool) -> tuple[float, bool]:
    """Smallest t with F(t) >= c (or > c when strict); (t, reached-by-jump)."""
    bps = sorted({a for _, tag, a, _ in comps} | {b for _, tag, _, b in comps})
    ok = (lambda f: f > c) if strict else (lambda f: f >= c)
    prev_b, prev_f = bps[0], 0.0
    for b in bps:
        atom_mass = sum(w for w, tag, a, _ in comps if tag == _ATOM and a == b)
        f_left = _cdf_left_limit(comps, b)
        if ok(f_left):
            if ok(prev_f):
                return prev_b, False
            # linear crossing inside (prev_b, b)
            t = prev_b + (c - prev_f) * (b - prev_b) / (f_left - prev_f)
            return t, False
        f_right = f_left + atom_mass
        if ok(f_right):
            return b, atom_mass > 0.0
        prev_b, prev_f = b, f_right
    return bps[-1], False  # c >= 1 - slack; not used for the median


def _cdf_left_limit(comps, x: float) -> float:
    total = 0.0
    for w, tag, a, b in comps:
        if tag == _ATOM:
            if a < x:
                total += w
        else:
            if x >= b:
                total += w
            elif x > a:
                total += w * (x - a) / (b - a)
    return total


# ---------------------------------------------------------------------------
# sampling


def sample_many(d: AnyDist, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized draws; one uniform consumed per draw per stage."""
    if isinstance(d, DiscreteFinite):
        values = np.asarray(d.values)
        cum = np.cumsum(np.asarray(d.probs))
        u = rng.random(size)
        idx = np.minimum(np.searchsorted(cum, u, side="right"), len(values) - 1)
        return values[idx]
    if isinstance(d, UniformInterval):
        return d.lo + (d.hi - d.lo) * rng.random(size)
    if isinstance(d, Perturbed):
        base = sample_many(d.base, rng, size)
        return base + (2.0 * rng.random(size) - 1.0) * d.epsilon
    if isinstance(d, MixtureDist):
        cum = np.cumsum(np.asarray(d.weights))
        pick = np.minimum(np.searchsorted(cum, rng.random(size), side="right"),
                          len(d.components) - 1)
        out = np.empty(size, dtype=float)
        for j, comp in enumerate(d.components):
            mask = pick == j
            cnt = int(mask.sum())
            if cnt:
                out[mask] = sample_many(comp, rng, cnt)
        return out
    raise InvalidParam(f"not a distribution: {d!r}")


def sample(d: AnyDist, rng: np.random.Generator) -> float:
    return float(sample_many(d, rng, 1)[0])


# ---------------------------------------------------------------------------
# support helpers (used by threshold constructors)


def support_values(d: AnyDist) -> tuple[float, ...]:
    """Sorted atom values of a purely discrete dist."""
    return as_discrete(d).values


def pooled_support(*dists: AnyDist) -> list[float]:
    vals: set[float] = set()
    for d in dists:
        vals.update(support_values(d))
    return sorted(vals)


def next_support_value(pooled: list[float], x: float) -> float | None:
    """Smallest pooled value strictly greater than x, if any."""
    for v in pooled:
        if v > x:
            return v
    return None


# ---------------------------------------------------------------------------
# JSON encoding (the external schema; mixtures are internal-only)


def dist_to_json(d: Dist) -> dict:
    if isinstance(d, DiscreteFinite):
        return {"kind": "discrete", "atoms": [[v, p] for v, p in d.atoms]}
    if isinstance(d, UniformInterval):
        return {"kind": "uniform", "lo": d.lo, "hi": d.hi}
    if isinstance(d, Perturbed):
        return {"kind": "perturbed", "base": dist_to_json(d.base), "epsilon": d.epsilon}
    raise InvalidParam(f"no JSON encoding for {type(d).__name__}")


def dist_from_json(obj: dict) -> Dist:
    try:
        kind = obj["kind"]
    except (TypeError, KeyError):
        raise InvalidParam(f"not a distribution object: {obj!r}")
    if kind == "discrete":
        return DiscreteFinite([(v, p) for v, p in obj["atoms"]])
    if kind == "uniform":
        return UniformInterval(float(obj["lo"]), float(obj["hi"]))
    if kind == "perturbed":
        base = dist_from_json(obj["base"])
        if not isinstance(base, DiscreteFinite):
            raise InvalidParam("perturbed base must be discrete")
        return Perturbed(base, float(obj["epsilon"]))
    raise InvalidParam(f"unknown distribution kind {kind!r}")


# ---------------------------------------------------------------------------
# fuzzing helper (shared by the lemma verifier and the test suite)


def fuzz_discrete(rng: np.random.Generator, max_atoms: int = 8,
                  lo: float = 0.0, hi: float = 10.0,
                  round_to: int | None = 2) -> DiscreteFinite:
    """A random DiscreteFinite; rounding encourages duplicate values and ties."""
    m = int(rng.integers(1, max_atoms + 1))
    vals = lo + (hi - lo) * rng.random(m)
    if round_to is not None:
        vals = np.round(vals, round_to)
    probs = rng.dirichlet(np.ones(m))
    return DiscreteFinite(list(zip(vals.tolist(), probs.tolist())))
