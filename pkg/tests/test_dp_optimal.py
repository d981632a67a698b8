import math

import numpy as np
import pytest

from trading_prophets.distributions import DiscreteFinite, UniformInterval, fuzz_discrete
from trading_prophets.errors import TooManyPeriods, UnsupportedDistKind
from trading_prophets.exact_analytics import exact_expected_alg, exact_expected_opt
from trading_prophets.instances import Instance, Order, builtin_instance, draw_many
from trading_prophets.dp_optimal import (
    dp_fixed_order,
    dp_value_iid,
    dp_value_k_items,
    dp_value_revealed_order,
    policy_table_to_json,
    run_policy_table,
)

COIN = DiscreteFinite([(0.0, 0.5), (1.0, 0.5)])


class TestIidDP:
    def test_coin_two_periods(self):
        # buy only a first-period 0 (prob 1/2), sell at E[X2] = 1/2: value 1/4
        assert dp_value_iid(COIN, 2).value == pytest.approx(0.25, abs=1e-12)

    def test_coin_value_grows_linearly_in_periods(self):
        # each extra period adds at most E|X - X'|/2 = 1/4
        vals = [dp_value_iid(COIN, n).value for n in range(1, 7)]
        assert vals[0] == 0.0
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        for d in diffs:
            assert 0.0 - 1e-12 <= d <= 0.25 + 1e-12

    def test_point_mass_is_zero(self):
        assert dp_value_iid(DiscreteFinite([(3.0, 1.0)]), 5).value == 0.0

    def test_never_exceeds_prophet(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            d = fuzz_discrete(rng, max_atoms=4)
            n = int(rng.integers(1, 7))
            inst = Instance(dists=(d,) * n)
            assert dp_value_iid(d, n).value <= exact_expected_opt(inst) + 1e-9

    def test_beats_every_fixed_threshold(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            d = fuzz_discrete(rng, max_atoms=4)
            n = int(rng.integers(2, 6))
            inst = Instance(dists=(d,) * n)
            v = dp_value_iid(d, n).value
            for t in d.values:
                assert v >= exact_expected_alg(inst, t) - 1e-9

    def test_halfgap_close_to_half_of_prophet(self):
        inst = builtin_instance("iid_halfgap", n=5, eps=0.01)
        v = dp_value_iid(inst.dists[0], 5).value
        ratio = v / exact_expected_opt(inst)
        assert ratio <= 0.52

    def test_bad_n(self):
        with pytest.raises(TooManyPeriods):
            dp_value_iid(COIN, 0)

    def test_continuous_rejected(self):
        with pytest.raises(UnsupportedDistKind):
            dp_value_iid(UniformInterval(0.0, 1.0), 3)


class TestFixedOrderDP:
    def test_adversarial_nets_zero(self):
        inst = builtin_instance("adversarial_intro", eps=0.01)
        assert dp_fixed_order(inst.dists).value == pytest.approx(0.0, abs=1e-12)

    def test_matches_exact_formula_for_known_policy(self):
        # when the DP's policy is "always buy then sell", the value must be
        # the expected positive drift
        up = DiscreteFinite([(1.0, 1.0)])
        down = DiscreteFinite([(5.0, 1.0)])
        assert dp_fixed_order([up, down]).value == pytest.approx(4.0)
        assert dp_fixed_order([down, up]).value == pytest.approx(0.0)

    def test_table_replay_matches_value(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            dists = tuple(fuzz_discrete(rng, max_atoms=3) for _ in range(4))
            dpv = dp_fixed_order(dists)
            inst = Instance(dists=dists, order=Order.FIXED)
            _, prices, _ = draw_many(inst, np.random.default_rng(50), 120_000)
            profits = np.array([run_policy_table(row, dpv.policy_table) for row in prices])
            se = profits.std(ddof=1) / math.sqrt(len(profits))
            assert dpv.value == pytest.approx(profits.mean(), abs=max(5 * se, 1e-9))

    def test_table_is_json_serializable(self):
        dpv = dp_fixed_order([COIN, COIN])
        rows = policy_table_to_json(dpv)
        assert all(set(r) == {"period", "price", "holding", "action"} for r in rows)
        # period 1 at price 0, flat -> buy
        assert {"period": 1, "price": 0.0, "holding": 0, "action": "buy"} in rows


class TestRevealedOrderDP:
    def test_iid_reduces_to_single_solve(self):
        v1 = dp_value_revealed_order([COIN] * 4).value
        v2 = dp_value_iid(COIN, 4).value
        assert v1 == pytest.approx(v2, abs=1e-12)

    def test_rdm_order_third_is_one(self):
        inst = builtin_instance("rdm_order_third", M=1000.0)
        # whichever order arrives, the online player can lock in exactly 1:
        # both orders' fixed DPs average to 1
        assert dp_value_revealed_order(inst.dists).value == pytest.approx(1.0, abs=1e-9)

    def test_average_of_fixed_orders(self):
        rng = np.random.default_rng(4)
        d1, d2, d3 = (fuzz_discrete(rng, max_atoms=3) for _ in range(3))
        got = dp_value_revealed_order([d1, d2, d3]).value
        import itertools

        want = np.mean([
            dp_fixed_order(list(perm)).value for perm in itertools.permutations([d1, d2, d3])
        ])
        assert got == pytest.approx(float(want), abs=1e-12)

    def test_upper_bounds_any_threshold_on_random_order(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            dists = tuple(fuzz_discrete(rng, max_atoms=3) for _ in range(3))
            inst = Instance(dists=dists, order=Order.RANDOM)
            v = dp_value_revealed_order(dists).value
            for t in set(v2 for d in dists for v2 in d.values):
                assert v >= exact_expected_alg(inst, t) - 1e-9

    def test_period_cap(self):
        with pytest.raises(TooManyPeriods):
            dp_value_revealed_order([COIN] * 9)


class TestMultiItemDP:
    def test_coin_three_items(self):
        dpv = dp_value_k_items(COIN, 2, 3)
        assert dpv.value == pytest.approx(0.75, abs=1e-12)
        assert dpv.extremality is True

    def test_scales_linearly_in_k(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            d = fuzz_discrete(rng, max_atoms=4)
            n = int(rng.integers(1, 6))
            k = int(rng.integers(1, 5))
            base = dp_value_k_items(d, n, 1)
            multi = dp_value_k_items(d, n, k)
            assert multi.value == pytest.approx(k * base.value, abs=1e-9)
            assert multi.extremality is True

    def test_k_one_matches_single_item_dp(self):
        rng = np.random.default_rng(7)
        for _ in range(15):
            d = fuzz_discrete(rng, max_atoms=4)
            n = int(rng.integers(1, 6))
            assert dp_value_k_items(d, n, 1).value == pytest.approx(
                dp_value_iid(d, n).value, abs=1e-12
            )

    def test_replay_table_with_holdings(self):
        dpv = dp_value_k_items(COIN, 3, 2)
        _, prices, _ = draw_many(
            Instance(dists=(COIN,) * 3, order=Order.FIXED),
            np.random.default_rng(8),
            100_000,
        )
        profits = np.array([run_policy_table(row, dpv.policy_table) for row in prices])
        se = profits.std(ddof=1) / math.sqrt(len(profits))
        assert dpv.value == pytest.approx(profits.mean(), abs=max(5 * se, 1e-9))


class TestRunPolicyTable:
    def test_unknown_states_pass(self):
        assert run_policy_table([9.0, 9.0], {}) == 0.0

    def test_hand_built_table(self):
        table = {
            (1, 0.0, 0): __import__(
                "trading_prophets.offline_oracle", fromlist=["Action"]
            ).Action.BUY,
            (2, 1.0, 1): __import__(
                "trading_prophets.offline_oracle", fromlist=["Action"]
            ).Action.SELL,
        }
        assert run_policy_table([0.0, 1.0], table) == 1.0
        assert run_policy_table([1.0, 1.0], table) == 0.0
