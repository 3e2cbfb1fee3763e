import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from rankverify.core import (
    BradleyTerry,
    IndependentBinomial,
    Multinomial,
    NormalVariance,
    Observation,
    SeedRequired,
    interpret_delta,
    make_family,
    order_observation,
    order_probability,
    tie_break_prefixes,
)
from rankverify.simulate import ExactModel


def brute_force_tournaments(n):
    """Score-vector counts by listing every tournament."""
    counts = {}
    pairs = list(itertools.combinations(range(n), 2))
    for outcome in itertools.product((0, 1), repeat=len(pairs)):
        wins = [0] * n
        for (a, b), r in zip(pairs, outcome):
            wins[a if r else b] += 1
        counts[tuple(wins)] = counts.get(tuple(wins), 0) + 1
    return counts


class TestCarriers:
    def test_bradley_terry_three_players(self):
        bt = BradleyTerry(3)
        assert bt.carrier_log([1, 1, 1]) == pytest.approx(math.log(2))
        assert bt.carrier_log([2, 1, 0]) == 0.0
        assert bt.carrier_log([3, 0, 0]) == -math.inf

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_bradley_terry_counts_match_brute_force(self, n):
        bt = BradleyTerry(n)
        for wins, count in brute_force_tournaments(n).items():
            assert bt.carrier_log(wins) == pytest.approx(math.log(count))

    def test_bradley_terry_density_form(self):
        # exp(theta . x) g(x) reproduces the tournament law with expit(theta_j - theta_k)
        theta = np.array([0.8, -0.3, 0.1, 0.4])
        model = ExactModel(BradleyTerry(4), theta)
        direct = {}
        pairs = list(itertools.combinations(range(4), 2))
        for outcome in itertools.product((0, 1), repeat=len(pairs)):
            wins = [0] * 4
            prob = 1.0
            for (a, b), r in zip(pairs, outcome):
                p = expit(theta[a] - theta[b])
                prob *= p if r else 1 - p
                wins[a if r else b] += 1
            direct[tuple(wins)] = direct.get(tuple(wins), 0.0) + prob
        for x, p in zip(model.outcomes, model.prob):
            assert p == pytest.approx(direct[tuple(x.tolist())], rel=1e-12)

    def test_bradley_terry_cap(self):
        with pytest.raises(ValueError, match="cap"):
            BradleyTerry(7)

    def test_multinomial_symmetry(self):
        fam = Multinomial(3, 4)
        assert fam.carrier_log([4, 0, 0]) == fam.carrier_log([0, 4, 0])
        assert fam.carrier_log([2, 1, 1]) == pytest.approx(math.log(12))

    def test_binomial_off_support(self):
        assert IndependentBinomial(3, 5).carrier_log([6, 0, 0]) == -math.inf
        assert IndependentBinomial(3, 5).carrier_log([5, 0, 1]) == pytest.approx(math.log(5))

    def test_multinomial_off_support(self):
        fam = Multinomial(3, 4)
        assert fam.carrier_log([2, 1, 0]) == -math.inf
        assert fam.carrier_log([5, -1, 0]) == -math.inf

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            Multinomial(3, 4).carrier_log([4, 0])

    def test_normal_variance_needs_three(self):
        with pytest.raises(ValueError):
            NormalVariance(3, 2)
        assert NormalVariance(2, 5).beta_shape == 2.0

    def test_normal_variance_carrier(self):
        fam = NormalVariance(2, 7)
        assert fam.carrier_log([1.0, math.e]) == pytest.approx(2.0)
        assert fam.carrier_log([1.0, 0.0]) == -math.inf

    def test_log_partition_is_not_evaluated(self):
        with pytest.raises(NotImplementedError):
            Multinomial(3, 4).log_partition([0, 0, 0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 6), min_size=4, max_size=4), st.permutations(range(4)))
    def test_permutation_symmetry(self, x, perm):
        x = np.array(x)
        y = x[list(perm)]
        for fam in (Multinomial(4, int(x.sum()) or 1), IndependentBinomial(4, 6)):
            assert fam.carrier_log(x) == fam.carrier_log(y)
        nv = NormalVariance(4, 6)
        assert nv.carrier_log(x + 0.5) == pytest.approx(nv.carrier_log(y + 0.5), rel=1e-12)

    @pytest.mark.parametrize("fam", [Multinomial(3, 6), IndependentBinomial(3, 3), BradleyTerry(4)])
    def test_support_conservation(self, fam):
        model = ExactModel(fam, np.linspace(-0.5, 0.7, fam.n))
        assert math.fsum(model.prob) == pytest.approx(1.0, abs=1e-10)

    def test_multinomial_theta_shift_invariance(self):
        fam = Multinomial(3, 5)
        a = ExactModel(fam, [0.3, -0.2, 0.0]).prob
        b = ExactModel(fam, [1.3, 0.8, 1.0]).prob
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_stochastic_ordering(self, rng):
        fam = Multinomial(3, 30)
        draws = np.array([fam.sample([0.4, 0.0, 0.0], rng) for _ in range(4000)])
        for t in range(31):
            s1 = np.mean(draws[:, 0] >= t)
            s2 = np.mean(draws[:, 1] >= t)
            se = math.sqrt((s1 * (1 - s1) + s2 * (1 - s2)) / len(draws)) + 1e-12
            assert s1 >= s2 - 3 * se


class TestOrdering:
    def test_clear_order(self):
        view = order_observation([276, 214, 151])
        assert view.order == (0, 1, 2)
        assert view.tie_groups == ()

    def test_lowest_index(self):
        view = order_observation([36, 36, 10], tie_mode="lowest-index")
        assert view.order == (0, 1, 2)
        assert view.tie_groups == ((0, 1),)
        assert view.randomized_groups == ()

    def test_seeded_reproducible(self):
        a = order_observation([5, 5, 5], seed=7)
        b = order_observation([5, 5, 5], seed=7)
        assert a.order == b.order
        assert sorted(a.order) == [0, 1, 2]

    def test_seed_required_only_when_tie_matters(self):
        with pytest.raises(SeedRequired):
            order_observation([5, 5, 1])
        order_observation([9, 5, 1, 1], depth=2)
        with pytest.raises(SeedRequired):
            order_observation([9, 5, 1, 1])

    def test_random_ties_are_uniform(self):
        firsts = [order_observation([3, 3, 3], seed=s).winner for s in range(3000)]
        counts = np.bincount(firsts, minlength=3)
        assert np.all(np.abs(counts / 3000 - 1 / 3) < 0.03)

    def test_descending(self, rng):
        for _ in range(50):
            x = rng.integers(0, 5, size=6)
            view = order_observation(x, seed=1)
            vals = x[list(view.order)]
            assert np.all(np.diff(vals) <= 0)

    def test_order_probability(self):
        assert order_probability([4, 4, 4, 1], [2]) == pytest.approx(1 / 3)
        assert order_probability([4, 4, 4, 1], [2, 0]) == pytest.approx(1 / 6)
        assert order_probability([4, 4, 1], [2]) == 0.0
        assert order_probability([4, 4, 1], [2], pool=[1, 2]) == 0.0
        assert order_probability([4, 3, 3], [1], pool=[1, 2]) == 0.5

    def test_tie_break_prefixes_sum_to_one(self):
        prefixes = list(tie_break_prefixes([2, 2, 2, 1], 2))
        assert len(prefixes) == 6
        assert math.fsum(p for _, p in prefixes) == pytest.approx(1.0)


class TestObservation:
    def test_labels_unique(self):
        with pytest.raises(ValueError, match="unique"):
            Observation(("a", "a"), np.array([1, 2]))

    def test_default_labels(self):
        assert Observation.from_values([3, 1]).labels == ("1", "2")

    def test_validate(self):
        Observation.from_values([2, 1]).validate(Multinomial(2, 3))
        with pytest.raises(ValueError, match="outside"):
            Observation.from_values([2, 2]).validate(Multinomial(2, 3))


class TestInterpretation:
    def test_ratios(self):
        fam = Multinomial(3, 10)
        assert interpret_delta(fam, math.log(1.108)).value == pytest.approx(1.108)
        assert interpret_delta(fam, math.log(1.075)).value == pytest.approx(1.075)

    @pytest.mark.parametrize("fam", [Multinomial(3, 10), IndependentBinomial(3, 5), BradleyTerry(3)])
    def test_zero_gap(self, fam):
        assert interpret_delta(fam, 0.0).value == 1.0

    def test_normal_variance_zero(self):
        assert interpret_delta(NormalVariance(3, 5), 0.0).value == 0.0

    def test_bradley_terry_head_to_head(self):
        # P(j beats k) / P(k beats j) for a gap delta
        d = 0.7
        odds = expit(d) / expit(-d)
        assert interpret_delta(BradleyTerry(3), d).value == pytest.approx(odds)

    def test_make_family(self):
        assert make_family("bradley-terry", 4) == BradleyTerry(4)
        assert make_family("binomial", 3, 5) == IndependentBinomial(3, 5)
        with pytest.raises(ValueError):
            make_family("poisson", 3, 5)
        with pytest.raises(ValueError):
            make_family("multinomial", 3)
