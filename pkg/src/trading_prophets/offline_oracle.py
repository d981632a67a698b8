"""Hindsight-optimal profit (the prophet's benchmark) for all model variants.

Two equivalent views of the single-item optimum are implemented:

- a characterization in terms of the realized sequence's local shape —
  buy at a strict-from-the-left local minimum, sell at a strict-from-the-right
  local maximum, with sentinels +inf before period 1 and -inf after period n
  (within a run of equal prices this buys only at the first and sells only at
  the last);
- the telescoping sum of positive one-step increments.

They agree on every sequence; the test suite additionally pins both against
exhaustive enumeration of all feasible action sequences.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptySequence, NonPositivePrice, ShapeMismatch


class Action(enum.Enum):
    BUY = "buy"
    SELL = "sell"
    PASS = "pass"


@dataclass(frozen=True)
class ActionSeq:
    actions: tuple[Action, ...]

    def __iter__(self):
        return iter(self.actions)

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, idx):
        return self.actions[idx]

    def count(self, action: Action) -> int:
        return self.actions.count(action)


def opt_actions(prices: Sequence[float]) -> ActionSeq:
    """The hindsight optimum's action per period.

    Buy at i iff p[i] < p[i-1] and p[i] <= p[i+1]; sell at i iff
    p[i] >= p[i-1] and p[i] > p[i+1], with p[0] = +inf and p[n+1] = -inf.
    The asymmetry (<= forward on buys, >= backward on sells) is what makes
    equal-price runs trade only at their endpoints, keeping the action
    sequence deterministic on atomic distributions.
    """
    p = list(prices)
    if not p:
        raise EmptySequence("no prices")
    ext = [math.inf] + p + [-math.inf]
    out = []
    for i in range(1, len(p) + 1):
        prev_x, x, next_x = ext[i - 1], ext[i], ext[i + 1]
        if x < prev_x and x <= next_x:
            out.append(Action.BUY)
        elif x >= prev_x and x > next_x:
            out.append(Action.SELL)
        else:
            out.append(Action.PASS)
    return ActionSeq(tuple(out))


def seq_profit(prices: Sequence[float], seq: ActionSeq) -> float:
    gains = 0.0
    for p, a in zip(prices, seq.actions):
        if a is Action.BUY:
            gains -= p
        elif a is Action.SELL:
            gains += p
    return gains


def opt_profit(prices: Sequence[float]) -> float:
    """Sum of positive one-step increments (telescoped optimal profit)."""
    p = np.asarray(prices, dtype=float)
    if p.size == 0:
        raise EmptySequence("no prices")
    if p.size == 1:
        return 0.0
    d = np.diff(p)
    return float(d[d > 0].sum())


def opt_profit_many(price_matrix: np.ndarray) -> np.ndarray:
    """Row-wise opt_profit for a trials x n matrix."""
    m = np.asarray(price_matrix, dtype=float)
    if m.ndim != 2 or m.shape[1] < 1:
        raise ShapeMismatch(f"expected trials x n matrix, got shape {m.shape}")
    if m.shape[1] == 1:
        return np.zeros(m.shape[0])
    return np.clip(np.diff(m, axis=1), 0.0, None).sum(axis=1)


def opt_profit_k(prices: Sequence[float], k: int) -> float:
    """With capacity k the optimum trades all k items on the same schedule."""
    if k < 1:
        raise ShapeMismatch(f"capacity must be >= 1, got {k}")
    return k * opt_profit(prices)


def opt_budgeted(prices: Sequence[float]) -> float:
    """Final budget of the all-in/all-out hindsight optimum, starting from 1."""
    p = np.asarray(prices, dtype=float)
    if p.size == 0:
        raise EmptySequence("no prices")
    if np.any(p <= 0.0):
        raise NonPositivePrice("budgeted model needs strictly positive prices")
    return float(math.exp(opt_profit(np.log(p))))


def opt_budgeted_many(price_matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(price_matrix, dtype=float)
    if np.any(m <= 0.0):
        raise NonPositivePrice("budgeted model needs strictly positive prices")
    return np.exp(opt_profit_many(np.log(m)))


def opt_bandit(price_matrix) -> float:
    """Pathwise optimum across k arms: sum over periods of the best
    nonnegative one-step gain available on any arm."""
    m = np.asarray(price_matrix, dtype=float)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected k x n matrix, got shape {m.shape}")
    k, n = m.shape
    if k < 1 or n < 2:
        raise ShapeMismatch(f"need k >= 1 arms and n >= 2 periods, got {k} x {n}")
    gains = np.clip(np.diff(m, axis=1), 0.0, None)
    return float(gains.max(axis=0).sum())


def opt_bandit_many(price_tensor: np.ndarray) -> np.ndarray:
    """Trial-wise opt_bandit for a trials x k x n tensor."""
    t = np.asarray(price_tensor, dtype=float)
    if t.ndim != 3 or t.shape[1] < 1 or t.shape[2] < 2:
        raise ShapeMismatch(f"expected trials x k x n with n >= 2, got {t.shape}")
    gains = np.clip(np.diff(t, axis=2), 0.0, None)
    return gains.max(axis=1).sum(axis=1)
