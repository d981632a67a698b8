"""Exact optimal online policies by backward induction.

Three solvers share the same recursion over (period, holding) with
expectations taken atom by atom:

- :func:`dp_value_iid` — one distribution repeated n times;
- :func:`dp_fixed_order` / :func:`dp_value_revealed_order` — per-period
  distributions for a known arrival order, and the average of that value
  over all n! orders (an upper bound on any online policy that does not get
  to see the order);
- :func:`dp_value_k_items` — integer holdings 0..k with unrestricted trade
  size per period, plus a certificate that some optimal action always moves
  holdings to 0 or k.

Ties always break toward Pass, so indifference never manufactures profit.
Buying in the last period is not allowed (it can never be unwound).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional, Sequence

from .distributions import DiscreteFinite
from .errors import TooManyPeriods, UnsupportedDistKind
from .offline_oracle import Action

_TIE = 1e-12


@dataclass(frozen=True)
class DPValue:
    value: float
    policy_table: dict = field(default_factory=dict, compare=False)
    extremality: Optional[bool] = None


def _require_discrete(d) -> DiscreteFinite:
    if not isinstance(d, DiscreteFinite):
        raise UnsupportedDistKind("dynamic program needs a DiscreteFinite distribution")
    return d


def dp_value_iid(d: DiscreteFinite, n: int) -> DPValue:
    """Optimal online expected profit for n i.i.d. draws from d."""
    _require_discrete(d)
    if n < 1:
        raise TooManyPeriods(f"need n >= 1, got {n}")
    return dp_fixed_order([d] * n)


def dp_fixed_order(dists: Sequence[DiscreteFinite]) -> DPValue:
    """Optimal online expected profit when period i draws from dists[i].

    policy_table maps (period, price, holding) -> Action, periods 1-based.
    """
    ds = [_require_discrete(d) for d in dists]
    n = len(ds)
    if n < 1:
        raise TooManyPeriods("need at least one period")
    table: dict[tuple[int, float, int], Action] = {}
    v_hold, v_flat = 0.0, 0.0  # continuation values after the last period
    for i in range(n, 0, -1):
        last = i == n
        new_hold = 0.0
        new_flat = 0.0
        for x, p in ds[i - 1].atoms:
            sell_val = x + v_flat
            if sell_val > v_hold + _TIE:
                act_h, val_h = Action.SELL, sell_val
            else:
                act_h, val_h = Action.PASS, v_hold
            buy_val = -x + v_hold
            if (not last) and buy_val > v_flat + _TIE:
                act_f, val_f = Action.BUY, buy_val
            else:
                act_f, val_f = Action.PASS, v_flat
            table[(i, x, 1)] = act_h
            table[(i, x, 0)] = act_f
            new_hold += p * val_h
            new_flat += p * val_f
        v_hold, v_flat = new_hold, new_flat
    return DPValue(value=v_flat, policy_table=table)


_REVEALED_ORDER_CAP = 8


def dp_value_revealed_order(dists: Sequence[DiscreteFinite]) -> DPValue:
    """Average of the fixed-order optimum over all n! arrival orders.

    This is the value of the best online policy that is told the order (but
    not the realizations) upfront, and therefore upper-bounds every policy
    that is not.  Orders that present the same distribution sequence are
    deduplicated, so the i.i.d. case costs a single solve.
    """
    ds = [_require_discrete(d) for d in dists]
    n = len(ds)
    if n > _REVEALED_ORDER_CAP:
        raise TooManyPeriods(f"n = {n} exceeds the n! enumeration cap of {_REVEALED_ORDER_CAP}")
    cache: dict[tuple[DiscreteFinite, ...], float] = {}
    total = 0.0
    count = 0
    for perm in permutations(range(n)):
        key = tuple(ds[i] for i in perm)
        if key not in cache:
            cache[key] = dp_fixed_order(list(key)).value
        total += cache[key]
        count += 1
    return DPValue(value=total / count)


def dp_value_k_items(d: DiscreteFinite, n: int, k: int) -> DPValue:
    """Optimal value with integer holdings 0..k and unrestricted trade size.

    The certificate (``extremality``) holds when, from every reachable
    state, some optimal action lands on holdings 0 or k; holdings then never
    leave {0, k} under an optimal policy.
    """
    _require_discrete(d)
    if n < 1 or k < 1:
        raise TooManyPeriods(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    atoms = d.atoms
    # values[s] = continuation value entering the period after this one
    values = [0.0] * (k + 1)
    layers: list[list[float]] = [values]
    for i in range(n, 0, -1):
        last = i == n
        new_values = []
        for s in range(k + 1):
            ev = 0.0
            for x, p in atoms:
                choices = range(0, (s if last else k) + 1)
                ev += p * max((s - s2) * x + values[s2] for s2 in choices)
            new_values.append(ev)
        values = new_values
        layers.append(values)
    layers.reverse()  # layers[i] = values entering period i+1 (layers[n] = zeros)

    # forward pass over reachable holdings, checking extremality
    extremal = True
    table: dict[tuple[int, float, int], int] = {}
    reachable = {0}
    for i in range(1, n + 1):
        last = i == n
        cont = layers[i]
        nxt: set[int] = set()
        for s in sorted(reachable):
            for x, p in atoms:
                choices = list(range(0, (s if last else k) + 1))
                vals = [(s - s2) * x + cont[s2] for s2 in choices]
                best = max(vals)
                good = [s2 for s2, v in zip(choices, vals)
                        if v >= best - _TIE and s2 in (0, k)]
                if not good:
                    extremal = False
                    good = [choices[max(range(len(vals)), key=vals.__getitem__)]]
                if s in good:
                    pick = s  # indifference keeps current holdings (Pass)
                else:
                    pick = good[0]
                table[(i, x, s)] = pick
                nxt.update(good)
        reachable = nxt
    return DPValue(value=layers[0][0], policy_table=table, extremality=extremal)


# ---------------------------------------------------------------------------
# replay


def run_policy_table(prices: Sequence[float], table: dict) -> float:
    """Replay a (period, price, holding) -> decision table; returns profit.

    Single-item tables store Actions; multi-item tables store the target
    holdings as an int (trade the difference at the period's price).
    Unknown states Pass.  Anything still held after the last period counts
    for nothing, mirroring the recursion's terminal condition (the table
    itself sells in the last period whenever that is strictly profitable).
    """
    holding = 0
    profit = 0.0
    n = len(prices)
    for i, x in enumerate(prices, start=1):
        act = table.get((i, x, holding), Action.PASS)
        if isinstance(act, int) and not isinstance(act, bool):
            target = act
            if target != holding and target >= 0 and (i < n or target <= holding):
                profit += (holding - target) * x
                holding = target
        elif act is Action.SELL and holding:
            profit += x
            holding = 0
        elif act is Action.BUY and not holding and i < n:
            profit -= x
            holding = 1
    return profit


def policy_table_to_json(dpv: DPValue) -> list[dict]:
    out = []
    for (period, price, holding), act in sorted(dpv.policy_table.items()):
        name = act.value if isinstance(act, Action) else act
        out.append({"period": period, "price": price, "holding": holding,
                    "action": name})
    return out
