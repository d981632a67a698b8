"""Online trading policies and threshold constructors.

Runners are pure functions from realized prices (plus any extra randomness a
policy needs) to a :class:`PolicyRun`.  All threshold-family policies share
one state machine: starting without the item, buy when the period's price is
strictly below the period's threshold, sell when at or above it, and force a
liquidating sell in the last period (never buy in the last period).

Constructors turn an :class:`~trading_prophets.instances.Instance` into a
threshold: the common median (i.i.d. only), the pooled-mixture median, the
certified balanced-split construction, or exhaustive maximization of the
exact expected value.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .distributions import (
    DiscreteFinite,
    MixtureDist,
    expected_abs_diff,
    expected_straddle,
    median,
    next_support_value,
    pooled_support,
)
from .errors import (
    BadArmIndex,
    EmptySequence,
    InvalidParam,
    LengthMismatch,
    NonPositivePrice,
    NotIid,
    SearchExhausted,
    TooShort,
    UnsupportedDistKind,
)
from .exact_analytics import exact_expected_alg
from .instances import Instance, is_iid
from .offline_oracle import Action, ActionSeq


class Provenance(enum.Enum):
    IID_MEDIAN = "iid_median"
    MIXTURE_MEDIAN = "mixture_median"
    SIXTEENTH_SPLIT = "sixteenth_split"
    BEST_EXACT = "best_exact"
    USER_GIVEN = "user_given"


@dataclass(frozen=True)
class ThresholdSpec:
    value: float
    provenance: Provenance
    split: Optional[tuple[int, ...]] = None  # certified subset, sixteenth only
    achieved: Optional[float] = None  # exact E[ALG_T], best_threshold only

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidParam(f"threshold must be finite, got {self.value}")


@dataclass(frozen=True)
class PolicyRun:
    actions: ActionSeq
    per_period_gain: tuple[float, ...]
    profit: float  # final budget for the budgeted runner


# ---------------------------------------------------------------------------
# runners


def _run_period_thresholds(prices: Sequence[float], thresholds: Sequence[float]) -> PolicyRun:
    """Shared state machine: per-period threshold, forced sell at the end.

    thresholds[i] governs period i for i < n-1; the last period only
    liquidates.  (A length-n thresholds list is accepted and its last entry
    ignored, so a constant threshold can be broadcast.)
    """
    p = list(prices)
    n = len(p)
    if n == 0:
        raise EmptySequence("no prices")
    holding = False
    actions: list[Action] = []
    gains: list[float] = []
    for i, x in enumerate(p):
        last = i == n - 1
        if holding and (last or x >= thresholds[i]):
            holding = False
            actions.append(Action.SELL)
            gains.append(x)
        elif (not holding) and (not last) and x < thresholds[i]:
            holding = True
            actions.append(Action.BUY)
            gains.append(-x)
        else:
            actions.append(Action.PASS)
            gains.append(0.0)
    return PolicyRun(ActionSeq(tuple(actions)), tuple(gains), math.fsum(gains))


def run_threshold(prices: Sequence[float], t: float) -> PolicyRun:
    """Buy below t, sell at or above t, forced sell in the last period."""
    n = len(list(prices))
    if n == 0:
        raise EmptySequence("no prices")
    return _run_period_thresholds(prices, [t] * n)


def run_sample_policy(prices: Sequence[float], samples: Sequence[float]) -> PolicyRun:
    """Period i trades against the i-th of n-1 pre-drawn sample values."""
    p = list(prices)
    s = list(samples)
    if len(s) != len(p) - 1:
        raise LengthMismatch(f"need {len(p) - 1} samples for {len(p)} prices, got {len(s)}")
    return _run_period_thresholds(p, s + [math.nan])


def resample_thresholds(prices: Sequence[float], s1: float,
                        rng: np.random.Generator) -> list[float]:
    """The fresh-looking per-period thresholds: for period i, a uniform pick
    from the sample and the i-1 prices already seen (one rng draw per period,
    including the forced first pick)."""
    p = list(prices)
    pool = [s1]
    out: list[float] = []
    for i in range(len(p) - 1):
        out.append(pool[int(rng.integers(0, len(pool)))])
        pool.append(p[i])
    return out


def run_single_sample_policy(prices: Sequence[float], s1: float,
                             rng: np.random.Generator) -> PolicyRun:
    p = list(prices)
    if len(p) < 2:
        raise TooShort("single-sample policy needs n >= 2")
    return _run_period_thresholds(p, resample_thresholds(p, s1, rng) + [math.nan])


def run_unknown_dist_policy(prices: Sequence[float], rng: np.random.Generator) -> PolicyRun:
    """Skip period 1, then run the single-sample policy with X_1 as the sample."""
    p = list(prices)
    if len(p) < 3:
        raise TooShort("unknown-distribution policy needs n >= 3")
    inner = run_single_sample_policy(p[1:], p[0], rng)
    return PolicyRun(
        ActionSeq((Action.PASS,) + inner.actions.actions),
        (0.0,) + inner.per_period_gain,
        inner.profit,
    )


def run_budgeted_threshold(prices: Sequence[float], t: float) -> PolicyRun:
    """All-in/all-out threshold trading of a divisible item.

    Starts with budget 1 and no shares; spends the whole budget when the
    price is below t (except in the last period), sells all shares at or
    above t or in the last period.  ``profit`` is the final budget (so here
    it is 1 + sum of gains, the gains being signed cash flows).
    """
    p = list(prices)
    if len(p) == 0:
        raise EmptySequence("no prices")
    if any(x <= 0 for x in p):
        raise NonPositivePrice("budgeted model needs strictly positive prices")
    if not (t > 0 and math.isfinite(t)):
        raise NonPositivePrice(f"budgeted threshold must be positive, got {t}")
    budget, shares = 1.0, 0.0
    actions: list[Action] = []
    gains: list[float] = []
    for i, x in enumerate(p):
        last = i == len(p) - 1
        if shares > 0.0 and (last or x >= t):
            budget += shares * x
            gains.append(shares * x)
            shares = 0.0
            actions.append(Action.SELL)
        elif shares == 0.0 and not last and x < t:
            shares = budget / x
            gains.append(-budget)
            budget = 0.0
            actions.append(Action.BUY)
        else:
            gains.append(0.0)
            actions.append(Action.PASS)
    return PolicyRun(ActionSeq(tuple(actions)), tuple(gains), budget)


def run_bandit_policy(price_matrix, t: float, arm: Optional[int],
                      rng: Optional[np.random.Generator] = None) -> PolicyRun:
    """Threshold-trade a single arm of a k x n price matrix.

    arm is a 0-based row index, or None to pick uniformly at random (one rng
    draw).
    """
    m = np.asarray(price_matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1:
        raise BadArmIndex(f"expected k x n matrix, got shape {m.shape}")
    k = m.shape[0]
    if arm is None:
        if rng is None:
            raise InvalidParam("random arm choice needs an rng")
        arm = int(rng.integers(0, k))
    if not 0 <= arm < k:
        raise BadArmIndex(f"arm {arm} out of range for {k} arms")
    return run_threshold(m[arm].tolist(), t)


# ---------------------------------------------------------------------------
# threshold constructors


def iid_median_threshold(inst: Instance) -> ThresholdSpec:
    if not is_iid(inst):
        raise NotIid("iid_median threshold needs identical distributions")
    return ThresholdSpec(median(inst.dists[0]), Provenance.IID_MEDIAN)


def mixture_median_threshold(inst: Instance) -> ThresholdSpec:
    mix = MixtureDist(inst.dists)
    return ThresholdSpec(median(mix), Provenance.MIXTURE_MEDIAN)


def _require_discrete_instance(inst: Instance, what: str) -> None:
    if not all(isinstance(d, DiscreteFinite) for d in inst.dists):
        raise UnsupportedDistKind(f"{what} needs DiscreteFinite distributions")


def _median_candidates(d1: DiscreteFinite, d2: DiscreteFinite) -> list[float]:
    """The two medians plus, for each, the next pooled support value: the
    endpoint set that dominates all thresholds near either median under the
    half-open trade rule."""
    pooled = pooled_support(d1, d2)
    cands: list[float] = []
    for m in (median(d1), median(d2)):
        cands.append(m)
        succ = next_support_value(pooled, m)
        if succ is not None:
            cands.append(succ)
    return sorted(set(cands))


def sixteenth_threshold(inst: Instance, split_budget: int = 10_000,
                        search_seed: int = 0) -> ThresholdSpec:
    """Threshold from a certified balanced split of the distributions.

    Finds a subset S of size ceil(n/2) whose cross-pair mean absolute
    difference is at least the all-pairs mean (checked exactly), pools each
    side into a uniform half-mixture, and returns the best of the two
    half-mixture medians (and their pooled successors) by exact straddle
    value.  Splits are enumerated exhaustively for n <= 16; beyond that,
    seeded random splits up to split_budget candidates.
    """
    _require_discrete_instance(inst, "sixteenth threshold")
    n = inst.n
    if n < 2:
        raise InvalidParam("split threshold needs n >= 2")
    pair = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            pair[i, j] = pair[j, i] = expected_abs_diff(inst.dists[i], inst.dists[j])
    all_avg = pair.sum() / (n * (n - 1))
    size = (n + 1) // 2

    def certify(subset: tuple[int, ...]) -> bool:
        rest = [j for j in range(n) if j not in subset]
        cross = pair[np.ix_(subset, rest)].sum() / (len(subset) * len(rest))
        return cross >= all_avg - 1e-12

    chosen: Optional[tuple[int, ...]] = None
    if n <= 16:
        for subset in combinations(range(n), size):
            if certify(subset):
                chosen = subset
                break
    else:
        rng = np.random.default_rng(search_seed)
        for _ in range(split_budget):
            subset = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
            if certify(subset):
                chosen = subset
                break
    if chosen is None:
        raise SearchExhausted(
            f"no certified balanced split found within budget (n={n})"
        )
    rest = [j for j in range(n) if j not in chosen]
    half1 = _uniform_pool([inst.dists[i] for i in chosen])
    half2 = _uniform_pool([inst.dists[j] for j in rest])
    best_t, best_val = None, -math.inf
    for t in _median_candidates(half1, half2):
        val = expected_straddle(half1, half2, t)
        if val > best_val + 1e-15:
            best_t, best_val = t, val
    return ThresholdSpec(best_t, Provenance.SIXTEENTH_SPLIT, split=chosen)


def _uniform_pool(dists: list[DiscreteFinite]) -> DiscreteFinite:
    w = 1.0 / len(dists)
    atoms = []
    for d in dists:
        atoms.extend((v, w * p) for v, p in d.atoms)
    return DiscreteFinite(atoms)


def best_threshold(inst: Instance) -> ThresholdSpec:
    """Exhaustively maximize the exact expected value over atom values and
    midpoints of the pooled support (the value is piecewise constant between
    consecutive atoms, so these candidates cover every achievable value)."""
    _require_discrete_instance(inst, "best threshold")
    pooled = pooled_support(*inst.dists)
    cands = list(pooled)
    cands.extend(0.5 * (a + b) for a, b in zip(pooled, pooled[1:]))
    best_t, best_val = pooled[0], -math.inf
    for t in sorted(cands):
        val = exact_expected_alg(inst, t)
        if val > best_val + 1e-15:
            best_t, best_val = t, val
    return ThresholdSpec(best_t, Provenance.BEST_EXACT, achieved=best_val)


# ---------------------------------------------------------------------------
# policy specs (the external JSON dialect)

_THRESHOLD_METHODS = {
    "iid_median": iid_median_threshold,
    "mixture_median": mixture_median_threshold,
    "sixteenth": sixteenth_threshold,
    "best": best_threshold,
}


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    t: Optional[float] = None
    inner: Optional["PolicySpec"] = None
    arm: Optional[int] = None

    KINDS = (
        "threshold", "iid_median", "mixture_median", "sixteenth", "best",
        "sample", "single_sample", "unknown", "budgeted", "bandit",
    )

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidParam(f"unknown policy kind {self.kind!r}")
        if self.kind in ("threshold", "budgeted") and self.t is None:
            raise InvalidParam(f"policy {self.kind!r} needs a threshold T")
        if self.kind == "bandit" and self.inner is None:
            raise InvalidParam("bandit policy needs an inner policy")


def policy_from_json(obj: dict) -> PolicySpec:
    if not isinstance(obj, dict) or "policy" not in obj:
        raise InvalidParam(f"not a policy object: {obj!r}")
    kind = obj["policy"]
    inner = policy_from_json(obj["inner"]) if obj.get("inner") is not None else None
    t = obj.get("T")
    arm = obj.get("arm")
    return PolicySpec(kind=kind, t=None if t is None else float(t),
                      inner=inner, arm=None if arm is None else int(arm))


def policy_to_json(spec: PolicySpec) -> dict:
    out: dict = {"policy": spec.kind}
    if spec.t is not None:
        out["T"] = spec.t
    if spec.inner is not None:
        out["inner"] = policy_to_json(spec.inner)
    if spec.arm is not None:
        out["arm"] = spec.arm
    return out


def resolve_threshold(inst: Instance, spec: PolicySpec) -> ThresholdSpec:
    """Turn a threshold-family policy spec into a concrete threshold."""
    if spec.kind == "threshold":
        return ThresholdSpec(spec.t, Provenance.USER_GIVEN)
    try:
        constructor = _THRESHOLD_METHODS[spec.kind]
    except KeyError:
        raise InvalidParam(f"policy {spec.kind!r} is not threshold-family")
    return constructor(inst)
