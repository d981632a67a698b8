import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trading_prophets.errors import EmptySequence, NonPositivePrice, ShapeMismatch
from trading_prophets.offline_oracle import (
    Action,
    opt_actions,
    opt_bandit,
    opt_bandit_many,
    opt_budgeted,
    opt_budgeted_many,
    opt_profit,
    opt_profit_k,
    opt_profit_many,
    seq_profit,
)

from .oracles import (
    brute_force_opt,
    brute_force_opt_bandit,
    brute_force_opt_batch,
    brute_force_opt_k,
)

B, S, P = Action.BUY, Action.SELL, Action.PASS


class TestOptActions:
    @pytest.mark.parametrize(
        "prices,actions,profit",
        [
            ([2.0, 1.0, 4.0, 3.0, 5.0], [P, B, S, B, S], 5.0),
            ([3.0, 2.0, 1.0], [P, P, P], 0.0),
            ([1.0, 3.0], [B, S], 2.0),
            ([5.0], [P], 0.0),
            ([1.0, 2.0, 3.0, 4.0], [B, P, P, S], 3.0),
            ([4.0, 3.0, 2.0, 1.0], [P, P, P, P], 0.0),
        ],
    )
    def test_hand_traced(self, prices, actions, profit):
        acts = opt_actions(prices)
        assert list(acts) == actions
        assert seq_profit(prices, acts) == pytest.approx(profit, abs=1e-12)
        assert opt_profit(prices) == pytest.approx(profit, abs=1e-12)

    def test_equal_run_is_resolved_consistently(self):
        # A flat stretch must not produce a buy and a sell at the same price
        # that straddle nothing; profit still has to match the telescoped sum.
        prices = [2.0, 2.0, 2.0, 5.0, 5.0, 1.0]
        acts = opt_actions(prices)
        assert seq_profit(prices, acts) == pytest.approx(opt_profit(prices))
        assert acts.count(B) == acts.count(S)

    def test_empty_sequence_rejected(self):
        with pytest.raises(EmptySequence):
            opt_actions([])
        with pytest.raises(EmptySequence):
            opt_profit([])

    def test_never_buys_last_period(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            p = rng.integers(0, 9, size=rng.integers(1, 9)).astype(float)
            acts = opt_actions(p)
            assert acts[-1] is not B

    def test_actions_alternate(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            p = rng.integers(0, 9, size=rng.integers(1, 10)).astype(float)
            trades = [a for a in opt_actions(p) if a is not P]
            assert trades == [B, S] * (len(trades) // 2)


class TestOracleEquivalence:
    """The three independent computations of the offline optimum agree."""

    def test_brute_force_fuzz(self):
        rng = np.random.default_rng(123)
        for _ in range(400):
            n = int(rng.integers(1, 13))
            p = rng.integers(0, 20, size=n).astype(float)
            want = brute_force_opt(p)
            assert opt_profit(p) == pytest.approx(want, abs=1e-9)
            assert seq_profit(p, opt_actions(p)) == pytest.approx(want, abs=1e-9)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(5)
        mat = rng.uniform(0, 10, size=(64, 7))
        got = opt_profit_many(mat)
        assert got.shape == (64,)
        np.testing.assert_allclose(got, brute_force_opt_batch(mat), atol=1e-9)

    @given(st.lists(st.floats(0, 100), min_size=1, max_size=10))
    @settings(max_examples=200, deadline=None)
    def test_telescoping_identity(self, prices):
        diffs = [b - a for a, b in zip(prices, prices[1:])]
        want = sum(d for d in diffs if d > 0)
        assert opt_profit(prices) == pytest.approx(want, abs=1e-9)


class TestInvariances:
    @given(
        st.lists(st.floats(0, 50), min_size=1, max_size=9),
        st.floats(-5, 5),
        st.floats(0.1, 4),
    )
    @settings(max_examples=150, deadline=None)
    def test_shift_and_scale(self, prices, shift, scale):
        base = opt_profit(prices)
        assert opt_profit([x + shift for x in prices]) == pytest.approx(base, abs=1e-8)
        assert opt_profit([x * scale for x in prices]) == pytest.approx(
            scale * base, rel=1e-9, abs=1e-9
        )

    def test_reversal_preserves_optimum_of_negated(self):
        # Reversing time swaps the roles of rises and falls.
        rng = np.random.default_rng(11)
        for _ in range(100):
            p = rng.uniform(0, 10, size=6)
            assert opt_profit(p[::-1]) == pytest.approx(
                brute_force_opt(p[::-1]), abs=1e-9
            )


class TestMultiItem:
    def test_k_times_single(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            n = int(rng.integers(1, 8))
            k = int(rng.integers(1, 5))
            p = rng.integers(0, 12, size=n).astype(float)
            assert opt_profit_k(p, k) == pytest.approx(k * opt_profit(p), abs=1e-9)

    def test_matches_holdings_enumeration(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            k = int(rng.integers(1, 5))
            p = rng.integers(0, 12, size=n).astype(float)
            assert opt_profit_k(p, k) == pytest.approx(
                brute_force_opt_k(p, k), abs=1e-9
            )

    def test_rejects_bad_k(self):
        with pytest.raises(ShapeMismatch):
            opt_profit_k([1.0, 2.0], 0)


class TestBudgeted:
    @pytest.mark.parametrize(
        "prices,want",
        [([2.0, 1.0, 4.0], 4.0), ([1.0, 2.0], 2.0), ([3.0], 1.0), ([2.0, 2.0], 1.0)],
    )
    def test_examples(self, prices, want):
        assert opt_budgeted(prices) == pytest.approx(want, rel=1e-12)

    def test_log_equivalence(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            p = rng.uniform(0.2, 5.0, size=rng.integers(1, 9))
            assert math.log(opt_budgeted(p)) == pytest.approx(
                opt_profit(np.log(p)), abs=1e-9
            )

    def test_batch(self):
        rng = np.random.default_rng(32)
        mat = rng.uniform(0.5, 3.0, size=(50, 6))
        got = opt_budgeted_many(mat)
        np.testing.assert_allclose(
            got, [opt_budgeted(row) for row in mat], rtol=1e-12
        )

    def test_nonpositive_rejected(self):
        with pytest.raises(NonPositivePrice):
            opt_budgeted([1.0, 0.0, 2.0])
        with pytest.raises(NonPositivePrice):
            opt_budgeted_many(np.array([[1.0, -2.0]]))


class TestBandit:
    @pytest.mark.parametrize(
        "matrix,want",
        [
            ([[2.0, 1.0, 4.0], [0.0, 3.0, 0.0]], 6.0),
            ([[0.0, 5.0], [3.0, 1.0]], 5.0),
            ([[1.0, 1.0, 1.0]], 0.0),
        ],
    )
    def test_examples(self, matrix, want):
        assert opt_bandit(np.array(matrix)) == pytest.approx(want, abs=1e-12)

    def test_matches_schedule_enumeration(self):
        rng = np.random.default_rng(41)
        for _ in range(200):
            k = int(rng.integers(1, 4))
            n = int(rng.integers(2, 7))
            m = rng.integers(0, 10, size=(k, n)).astype(float)
            assert opt_bandit(m) == pytest.approx(brute_force_opt_bandit(m), abs=1e-9)

    def test_single_arm_reduces_to_plain_optimum(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            p = rng.uniform(0, 10, size=rng.integers(2, 9))
            assert opt_bandit(p[None, :]) == pytest.approx(opt_profit(p), abs=1e-9)

    def test_batch(self):
        rng = np.random.default_rng(43)
        cube = rng.uniform(0, 5, size=(40, 3, 5))
        got = opt_bandit_many(cube)
        np.testing.assert_allclose(
            got, [opt_bandit(m) for m in cube], atol=1e-12
        )

    def test_shape_errors(self):
        with pytest.raises(ShapeMismatch):
            opt_bandit(np.zeros((0, 4)))
        with pytest.raises(ShapeMismatch):
            opt_bandit(np.zeros((2, 1)))
