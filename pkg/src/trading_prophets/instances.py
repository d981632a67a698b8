"""Problem instances: distributions + order model + affiliation + capacity.

An ``Instance`` bundles n price distributions with how they are presented
(fixed order, or a fresh uniformly random permutation per trace), an optional
shared additive shift (one draw added to all n prices of a trace), and a
holding capacity.  ``BanditInstance`` runs k single-item instances in
parallel with independent permutations.

Builders for the named hard instances live in :func:`builtin_instance`.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .distributions import (
    Dist,
    DiscreteFinite,
    dist_from_json,
    dist_to_json,
    sample_many,
)
from .errors import InvalidParam, UnknownInstance


class Order(enum.Enum):
    FIXED = "fixed"
    RANDOM = "random"


@dataclass(frozen=True)
class Instance:
    dists: tuple[Dist, ...]
    order: Order = Order.RANDOM
    affiliation_base: Optional[Dist] = None
    capacity: int = 1

    def __post_init__(self):
        if len(self.dists) < 1:
            raise InvalidParam("instance needs at least one distribution")
        if not isinstance(self.order, Order):
            raise InvalidParam(f"bad order {self.order!r}")
        if not (isinstance(self.capacity, int) and self.capacity >= 1):
            raise InvalidParam(f"capacity must be a positive integer, got {self.capacity!r}")

    @property
    def n(self) -> int:
        return len(self.dists)


@dataclass(frozen=True)
class Trace:
    """One realized run: perm[i] is the dist index shown at period i (0-based)."""

    perm: tuple[int, ...]
    prices: tuple[float, ...]
    base_shift: Optional[float] = None


@dataclass(frozen=True)
class BanditInstance:
    arms: tuple[Instance, ...]

    def __post_init__(self):
        if len(self.arms) < 1:
            raise InvalidParam("need at least one arm")
        ns = {a.n for a in self.arms}
        if len(ns) != 1:
            raise InvalidParam(f"arms disagree on horizon: {sorted(ns)}")

    @property
    def k(self) -> int:
        return len(self.arms)

    @property
    def n(self) -> int:
        return self.arms[0].n


def is_iid(inst: Instance) -> bool:
    return all(d == inst.dists[0] for d in inst.dists[1:])


# ---------------------------------------------------------------------------
# trace generation
#
# Consumption order per batch: one sample_many call per distribution (in index
# order), then the Fisher-Yates swap vectors (when order is RANDOM), then the
# shared shift.  draw_trace is the trials=1 case of the same path, so single
# and batched generation agree draw-for-draw.


def draw_many(inst: Instance, rng: np.random.Generator, trials: int):
    """(perms, prices) as (trials x n) int / float arrays, arrival order."""
    n = inst.n
    draws = np.empty((trials, n), dtype=float)
    for j, d in enumerate(inst.dists):
        draws[:, j] = sample_many(d, rng, trials)
    if inst.order is Order.RANDOM:
        perms = _fisher_yates_many(n, rng, trials)
        prices = np.take_along_axis(draws, perms, axis=1)
    else:
        perms = np.broadcast_to(np.arange(n), (trials, n)).copy()
        prices = draws
    if inst.affiliation_base is not None:
        shifts = sample_many(inst.affiliation_base, rng, trials)
        prices = prices + shifts[:, None]
    else:
        shifts = None
    return perms, prices, shifts


def _fisher_yates_many(n: int, rng: np.random.Generator, trials: int) -> np.ndarray:
    perms = np.broadcast_to(np.arange(n), (trials, n)).copy()
    rows = np.arange(trials)
    for i in range(n - 1, 0, -1):
        j = rng.integers(0, i + 1, size=trials)
        tmp = perms[rows, i].copy()
        perms[rows, i] = perms[rows, j]
        perms[rows, j] = tmp
    return perms


def draw_trace(inst: Instance, rng: np.random.Generator) -> Trace:
    perms, prices, shifts = draw_many(inst, rng, 1)
    return Trace(
        perm=tuple(int(x) for x in perms[0]),
        prices=tuple(float(x) for x in prices[0]),
        base_shift=None if shifts is None else float(shifts[0]),
    )


def random_walk_many(n: int, p0: float, rng: np.random.Generator, trials: int) -> np.ndarray:
    """trials x n matrix of +-1-step walks started at p0 (first step applied)."""
    if n < 1:
        raise InvalidParam("walk length must be >= 1")
    steps = 2.0 * rng.integers(0, 2, size=(trials, n)) - 1.0
    return p0 + np.cumsum(steps, axis=1)


def random_walk_trace(n: int, p0: float, rng: np.random.Generator) -> Trace:
    prices = random_walk_many(n, p0, rng, 1)[0]
    return Trace(perm=tuple(range(n)), prices=tuple(float(x) for x in prices))


def draw_bandit_many(binst: BanditInstance, rng: np.random.Generator, trials: int) -> np.ndarray:
    """trials x k x n price tensor; per-arm permutations drawn independently."""
    out = np.empty((trials, binst.k, binst.n), dtype=float)
    for a, arm in enumerate(binst.arms):
        _, prices, _ = draw_many(arm, rng, trials)
        out[:, a, :] = prices
    return out


# ---------------------------------------------------------------------------
# named instances


def _check_eps(eps: float, hi: float = 1.0) -> float:
    eps = float(eps)
    if not (0.0 < eps <= hi):
        raise InvalidParam(f"epsilon must be in (0, {hi}], got {eps}")
    return eps


def builtin_instance(name: str, **params) -> Union[Instance, BanditInstance]:
    """Construct a named instance.  See each builder for its parameters."""
    builders = {
        "iid_halfgap": _iid_halfgap,
        "rdm_order_third": _rdm_order_third,
        "adversarial_intro": _adversarial_intro,
        "mixture_median_counterexample": _mixture_median_counterexample,
        "two_medians_tightness": _two_medians_tightness,
        "bandit_gap": _bandit_gap,
    }
    try:
        builder = builders[name]
    except KeyError:
        raise UnknownInstance(
            f"unknown instance {name!r}; choose from {sorted(builders)}"
        )
    try:
        return builder(**params)
    except TypeError as exc:
        raise InvalidParam(f"bad parameters for {name}: {exc}")


def _iid_halfgap(n: int, eps: float) -> Instance:
    """n i.i.d. copies of {1 w.p. eps/2; 1/2 w.p. 1-eps; 0 w.p. eps/2}."""
    n = int(n)
    if n < 1:
        raise InvalidParam("n must be >= 1")
    eps = _check_eps(eps)
    d = DiscreteFinite([(0.0, eps / 2), (0.5, 1.0 - eps), (1.0, eps / 2)])
    return Instance(dists=(d,) * n)


def _rdm_order_third(M: float) -> Instance:
    """Random-order pair whose prophet value is about 3x the best online value."""
    M = float(M)
    if M <= 0:
        raise InvalidParam("M must be > 0")
    p = M / (M + 2.0)
    q = 2.0 / (M + 2.0)
    d1 = DiscreteFinite([(M + 2.0, p), (0.0, q)])
    d2 = DiscreteFinite([(M, p), (2.0 * M + 2.0, q)])
    return Instance(dists=(d1, d2), order=Order.RANDOM)


def _adversarial_intro(eps: float) -> Instance:
    """Fixed-order pair where any buy of the sure price 1 nets zero in expectation."""
    eps = _check_eps(eps)
    d1 = DiscreteFinite([(1.0, 1.0)])
    d2 = DiscreteFinite([(1.0 / eps, eps), (0.0, 1.0 - eps)])
    return Instance(dists=(d1, d2), order=Order.FIXED)


def _mixture_median_counterexample(eps: float) -> Instance:
    """Pair where the pooled-mixture median threshold captures O(1) of an Omega(1/eps) prophet."""
    eps = _check_eps(eps, hi=0.5)
    d1 = DiscreteFinite([(0.0, 2.0 * eps), (1.0, 1.0 - 2.0 * eps)])
    d2 = DiscreteFinite([(0.0, 1.0 - eps), (1.0 / eps**2, eps)])
    return Instance(dists=(d1, d2), order=Order.RANDOM)


def _two_medians_tightness(gamma: float, eps1: float, eps2: float) -> Instance:
    """Pair on which the better of the two per-dist medians captures only ~1/4."""
    gamma, eps1, eps2 = float(gamma), float(eps1), float(eps2)
    if not 0.0 < gamma < 0.5:
        raise InvalidParam("gamma must be in (0, 1/2)")
    if eps1 <= 0 or eps2 <= 0:
        raise InvalidParam("eps1, eps2 must be > 0")
    d1 = DiscreteFinite([
        (5.0 + eps1 + eps2, 0.5 - gamma),
        (5.0 + eps1, gamma),
        (5.0, 0.5 - gamma),
        (0.0, gamma),
    ])
    d2 = DiscreteFinite([
        (10.0, gamma),
        (5.0, 0.5 - gamma),
        (5.0 - eps1, gamma),
        (5.0 - eps1 - eps2, 0.5 - gamma),
    ])
    return Instance(dists=(d1, d2), order=Order.RANDOM)


def _bandit_gap(k: int) -> BanditInstance:
    """k arms, horizon 2, each price i.i.d. {0 w.p. 1-1/k; k w.p. 1/k}."""
    k = int(k)
    if k < 1:
        raise InvalidParam("k must be >= 1")
    d = DiscreteFinite([(0.0, 1.0 - 1.0 / k), (float(k), 1.0 / k)])
    arm = Instance(dists=(d, d), order=Order.RANDOM)
    return BanditInstance(arms=(arm,) * k)


# ---------------------------------------------------------------------------
# JSON encoding


def instance_to_json(inst: Union[Instance, BanditInstance]) -> dict:
    if isinstance(inst, BanditInstance):
        return {"arms": [instance_to_json(a) for a in inst.arms]}
    return {
        "dists": [dist_to_json(d) for d in inst.dists],
        "order": inst.order.value,
        "affiliation": None if inst.affiliation_base is None
        else dist_to_json(inst.affiliation_base),
        "capacity": inst.capacity,
    }


def instance_from_json(obj: dict) -> Union[Instance, BanditInstance]:
    if not isinstance(obj, dict):
        raise InvalidParam(f"not an instance object: {obj!r}")
    if "arms" in obj:
        return BanditInstance(arms=tuple(instance_from_json(a) for a in obj["arms"]))
    try:
        dists = tuple(dist_from_json(d) for d in obj["dists"])
    except KeyError:
        raise InvalidParam("instance object missing 'dists'")
    order_str = obj.get("order", "random")
    try:
        order = Order(order_str)
    except ValueError:
        raise InvalidParam(f"order must be 'random' or 'fixed', got {order_str!r}")
    aff = obj.get("affiliation")
    return Instance(
        dists=dists,
        order=order,
        affiliation_base=None if aff is None else dist_from_json(aff),
        capacity=int(obj.get("capacity", 1)),
    )


def instance_hash(inst: Union[Instance, BanditInstance]) -> str:
    """Short content hash for run metadata."""
    blob = json.dumps(instance_to_json(inst), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
