import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trading_prophets.distributions import (
    DiscreteFinite,
    MixtureDist,
    Perturbed,
    UniformInterval,
    as_discrete,
    cdf,
    dist_from_json,
    dist_mean,
    dist_to_json,
    expected_abs_dev,
    expected_abs_diff,
    expected_pos_diff,
    expected_straddle,
    fuzz_discrete,
    is_discrete,
    lower_partial,
    median,
    next_support_value,
    pooled_support,
    prob_below,
    sample_many,
    upper_partial,
)
from trading_prophets.errors import InvalidParam

COIN = DiscreteFinite([(0.0, 0.5), (1.0, 0.5)])
UNIT = UniformInterval(0.0, 1.0)


def halfgap_dist(eps: float) -> DiscreteFinite:
    return DiscreteFinite([(0.0, eps / 2), (0.5, 1.0 - eps), (1.0, eps / 2)])


class TestConstruction:
    def test_atoms_merged_sorted_and_zero_prob_dropped(self):
        d = DiscreteFinite([(2.0, 0.25), (1.0, 0.5), (2.0, 0.25), (7.0, 0.0)])
        assert d.atoms == ((1.0, 0.5), (2.0, 0.5))
        assert d.values == (1.0, 2.0)

    @pytest.mark.parametrize(
        "atoms",
        [[], [(0.0, 0.6)], [(0.0, 0.5), (1.0, 0.6)], [(0.0, -0.1), (1.0, 1.1)],
         [(math.inf, 1.0)], [(0.0, math.nan)]],
    )
    def test_bad_atoms_rejected(self, atoms):
        with pytest.raises(InvalidParam):
            DiscreteFinite(atoms)

    def test_bad_interval_rejected(self):
        with pytest.raises(InvalidParam):
            UniformInterval(1.0, 1.0)
        with pytest.raises(InvalidParam):
            UniformInterval(2.0, -1.0)

    def test_bad_perturbation_rejected(self):
        with pytest.raises(InvalidParam):
            Perturbed(COIN, 0.0)
        with pytest.raises(InvalidParam):
            Perturbed(COIN, -1.0)

    def test_bad_mixture_rejected(self):
        with pytest.raises(InvalidParam):
            MixtureDist([])
        with pytest.raises(InvalidParam):
            MixtureDist([COIN, UNIT], weights=[0.7, 0.7])

    def test_discreteness_predicate(self):
        assert is_discrete(COIN)
        assert is_discrete(MixtureDist([COIN, halfgap_dist(0.1)]))
        assert not is_discrete(UNIT)
        assert not is_discrete(Perturbed(COIN, 0.01))
        with pytest.raises(InvalidParam):
            as_discrete(UNIT)

    def test_mixture_collapse(self):
        mix = MixtureDist([DiscreteFinite([(3.0, 1.0)]), DiscreteFinite([(9.0, 1.0)])])
        assert as_discrete(mix).atoms == ((3.0, 0.5), (9.0, 0.5))


class TestPointwise:
    def test_cdf_and_prob_below_conventions(self):
        # cdf is P(X <= x); prob_below is P(X < t).
        assert cdf(COIN, 0.0) == pytest.approx(0.5)
        assert prob_below(COIN, 0.0) == 0.0
        assert prob_below(COIN, 1.0) == pytest.approx(0.5)
        assert cdf(UNIT, 0.25) == pytest.approx(0.25)
        assert prob_below(UNIT, 0.25) == pytest.approx(0.25)

    def test_partial_moments(self):
        # E[(X-t)1{X>=t}] and E[(t-X)1{X<t}]
        assert upper_partial(COIN, 0.5) == pytest.approx(0.25)
        assert lower_partial(COIN, 0.5) == pytest.approx(0.25)
        assert upper_partial(UNIT, 0.5) == pytest.approx(0.125)
        assert lower_partial(UNIT, 0.5) == pytest.approx(0.125)
        # at an atom the upper side includes the atom itself
        assert upper_partial(COIN, 1.0) == pytest.approx(0.0)
        assert lower_partial(COIN, 1.0) == pytest.approx(0.5)

    def test_means(self):
        assert dist_mean(COIN) == pytest.approx(0.5)
        assert dist_mean(UNIT) == pytest.approx(0.5)
        assert dist_mean(Perturbed(COIN, 0.3)) == pytest.approx(0.5)
        assert dist_mean(MixtureDist([COIN, UniformInterval(2.0, 4.0)])) == pytest.approx(1.75)


class TestExactExpectations:
    def test_coin_values(self):
        assert expected_abs_diff(COIN, COIN) == pytest.approx(0.5)
        assert expected_abs_dev(COIN, 0.5) == pytest.approx(0.5)
        assert expected_straddle(COIN, COIN, 0.5) == pytest.approx(0.5)
        # threshold at the upper atom: only (0,1) pairs with the 1 on the high side
        assert expected_straddle(COIN, COIN, 1.0) == pytest.approx(0.5)

    def test_halfgap_values(self):
        d = halfgap_dist(0.1)
        assert expected_abs_diff(d, d) == pytest.approx(0.1 - 0.01 / 2)
        assert median(d) == 0.5
        assert expected_straddle(d, d, 0.5) == pytest.approx(0.05)

    def test_uniform_values(self):
        assert expected_abs_diff(UNIT, UNIT) == pytest.approx(1.0 / 3.0)
        assert expected_abs_dev(UNIT, 0.5) == pytest.approx(0.25)
        assert expected_straddle(UNIT, UNIT, 0.5) == pytest.approx(0.25)
        assert expected_pos_diff(UNIT, UNIT) == pytest.approx(1.0 / 6.0)

    def test_atom_vs_interval(self):
        point = DiscreteFinite([(0.0, 1.0)])
        assert expected_abs_diff(point, UNIT) == pytest.approx(0.5)
        assert expected_abs_diff(UniformInterval(0.0, 1.0), UniformInterval(2.0, 3.0)) == pytest.approx(2.0)
        # overlap [1,2]: integrating |u-v|/4 over the rectangle by hand gives 13/12
        assert expected_abs_diff(UniformInterval(0.0, 2.0), UniformInterval(1.0, 3.0)) == pytest.approx(
            13.0 / 12.0, abs=1e-12
        )

    def test_pos_diff_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            f, g = fuzz_discrete(rng), fuzz_discrete(rng)
            lhs = expected_pos_diff(f, g)
            rhs = 0.5 * (expected_abs_diff(f, g) + dist_mean(g) - dist_mean(f))
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_straddle_tie_convention(self):
        # a value exactly at the threshold counts as the high side
        lo = DiscreteFinite([(0.0, 1.0)])
        at = DiscreteFinite([(1.0, 1.0)])
        assert expected_straddle(lo, at, 1.0) == pytest.approx(1.0)
        assert expected_straddle(at, at, 1.0) == pytest.approx(0.0)


class TestMedians:
    @pytest.mark.parametrize(
        "atoms,want",
        [
            ([(3.0, 1.0)], 3.0),
            ([(3.0, 0.5), (9.0, 0.5)], 3.0),
            ([(1.0, 0.2), (2.0, 0.2), (5.0, 0.6)], 5.0),
            ([(0.0, 0.55), (100.0, 0.45)], 0.0),
        ],
    )
    def test_discrete_convention(self, atoms, want):
        assert median(DiscreteFinite(atoms)) == want

    def test_mixture_median_examples(self):
        mix = MixtureDist([DiscreteFinite([(3.0, 1.0)]), DiscreteFinite([(9.0, 1.0)])])
        assert median(mix) == 3.0
        eps = 0.1
        d1 = DiscreteFinite([(0.0, 2 * eps), (1.0, 1 - 2 * eps)])
        d2 = DiscreteFinite([(0.0, 1 - eps), (1.0 / eps**2, eps)])
        assert median(MixtureDist([d1, d2])) == 0.0

    def test_continuous_median_and_flat_gap(self):
        assert median(UNIT) == pytest.approx(0.5)
        gap = Perturbed(DiscreteFinite([(0.0, 0.5), (5.0, 0.5)]), 0.1)
        assert median(gap) == pytest.approx(2.5, abs=1e-9)

    def test_perturbed_median_is_balanced(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            d = Perturbed(fuzz_discrete(rng), float(rng.uniform(1e-6, 0.5)))
            m = median(d)
            assert abs(prob_below(d, m) - 0.5) <= 1e-6

    def test_median_minimizes_abs_deviation(self):
        rng = np.random.default_rng(18)
        for _ in range(50):
            d = fuzz_discrete(rng)
            m = median(d)
            best = expected_abs_dev(d, m)
            for t in d.values:
                assert best <= expected_abs_dev(d, t) + 1e-10


class TestAgainstMonteCarlo:
    N = 400_000

    @pytest.mark.parametrize(
        "dist",
        [
            halfgap_dist(0.2),
            UniformInterval(1.0, 4.0),
            Perturbed(DiscreteFinite([(0.0, 0.3), (2.0, 0.7)]), 0.5),
            MixtureDist([DiscreteFinite([(1.0, 1.0)]), UniformInterval(0.0, 3.0)]),
        ],
        ids=["discrete", "uniform", "perturbed", "mixture"],
    )
    def test_expectations_match_sampling(self, dist):
        rng = np.random.default_rng(99)
        x = sample_many(dist, rng, self.N)
        y = sample_many(dist, rng, self.N)
        t = float(np.median(x))

        def close(exact, draws):
            se = draws.std(ddof=1) / math.sqrt(self.N)
            assert exact == pytest.approx(draws.mean(), abs=max(5 * se, 1e-9))

        close(dist_mean(dist), x)
        close(expected_abs_diff(dist, dist), np.abs(x - y))
        close(expected_abs_dev(dist, t), np.abs(x - t))
        close(upper_partial(dist, t), np.where(x >= t, x - t, 0.0))
        close(lower_partial(dist, t), np.where(x < t, t - x, 0.0))
        fires = (x >= t) != (y >= t)
        close(expected_straddle(dist, dist, t), np.abs(x - y) * fires)
        close(expected_pos_diff(dist, dist), np.clip(y - x, 0.0, None))
        close(prob_below(dist, t), (x < t).astype(float))

    def test_sampling_is_deterministic_per_seed(self):
        d = MixtureDist([COIN, UNIT], weights=[0.25, 0.75])
        a = sample_many(d, np.random.default_rng(5), 1000)
        b = sample_many(d, np.random.default_rng(5), 1000)
        assert np.array_equal(a, b)


@st.composite
def discrete_dists(draw):
    m = draw(st.integers(1, 5))
    vals = draw(
        st.lists(st.floats(0, 20), min_size=m, max_size=m, unique=True)
    )
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m))
    total = sum(raw)
    return DiscreteFinite([(v, p / total) for v, p in zip(vals, raw)])


class TestProperties:
    @given(discrete_dists(), discrete_dists(), st.floats(-1, 21))
    @settings(max_examples=200, deadline=None)
    def test_straddle_bounded_by_abs_diff(self, f, g, t):
        s = expected_straddle(f, g, t)
        assert -1e-12 <= s <= expected_abs_diff(f, g) + 1e-9

    @given(discrete_dists(), discrete_dists(), st.floats(-1, 21))
    @settings(max_examples=100, deadline=None)
    def test_straddle_symmetric(self, f, g, t):
        assert expected_straddle(f, g, t) == pytest.approx(
            expected_straddle(g, f, t), abs=1e-10
        )

    @given(discrete_dists(), st.floats(-1, 21))
    @settings(max_examples=150, deadline=None)
    def test_self_diff_at_most_twice_deviation(self, f, t):
        assert expected_abs_diff(f, f) <= 2 * expected_abs_dev(f, t) + 1e-9

    @given(discrete_dists(), discrete_dists(), st.floats(-1, 21))
    @settings(max_examples=100, deadline=None)
    def test_triangle_through_threshold(self, f, g, t):
        assert expected_abs_diff(f, g) <= (
            expected_abs_dev(f, t) + expected_abs_dev(g, t) + 1e-9
        )


class TestSupportAndJson:
    def test_pooled_support_and_successor(self):
        pool = pooled_support(COIN, DiscreteFinite([(0.5, 1.0)]))
        assert pool == [0.0, 0.5, 1.0]
        assert next_support_value(pool, 0.0) == 0.5
        assert next_support_value(pool, 0.75) == 1.0
        assert next_support_value(pool, 1.0) is None

    @pytest.mark.parametrize(
        "dist",
        [COIN, UNIT, Perturbed(COIN, 0.125)],
        ids=["discrete", "uniform", "perturbed"],
    )
    def test_round_trip(self, dist):
        blob = json.dumps(dist_to_json(dist))
        assert dist_from_json(json.loads(blob)) == dist

    def test_unknown_kind_rejected(self):
        with pytest.raises(InvalidParam):
            dist_from_json({"kind": "gaussian", "mu": 0.0})
