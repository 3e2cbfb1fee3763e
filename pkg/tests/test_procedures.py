import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import logit

from rankverify.core import (
    BradleyTerry,
    IndependentBinomial,
    Multinomial,
    NormalVariance,
    SeedRequired,
    order_observation,
)
from rankverify.procedures import (
    crossing_point,
    max_p_combine,
    procedure1,
    procedure2,
    procedure2prime,
    procedure3,
    procedure3prime,
    selective_p,
    selective_setup,
)
from rankverify.simulate import ExactModel


class TestMaxP:
    def test_examples(self):
        assert max_p_combine([0.2, 0.04, 0.6]) == 0.6
        assert max_p_combine([0.3]) == 0.3

    def test_errors(self):
        with pytest.raises(ValueError):
            max_p_combine([])
        with pytest.raises(ValueError):
            max_p_combine([0.2, 1.5])

    def test_runner_up_is_max(self, rng):
        fam = Multinomial(6, 60)
        for _ in range(200):
            x = fam.sample(rng.normal(0, 0.3, 6), rng)
            view = order_observation(x, seed=1)
            ps = [selective_p(fam, x, view, 0, k) for k in range(1, 6)]
            assert max_p_combine(ps) == ps[0]


class TestSelectiveP:
    def test_iowa_runner_up(self, iowa, iowa_family):
        view = order_observation(iowa.values, depth=2)
        p = selective_p(iowa_family, iowa, view, 0, 1)
        one_sided = stats.binom.sf(275, 490, 0.5)
        assert p == pytest.approx(2 * one_sided, rel=1e-10)
        assert p == pytest.approx(0.006, abs=5e-4)

    def test_iowa_trump_vs_rubio(self, iowa, iowa_family):
        view = order_observation(iowa.values, depth=2)
        assert selective_p(iowa_family, iowa, view, 0, 2) <= selective_p(iowa_family, iowa, view, 0, 1)

    def test_at_lower_bound(self):
        fam = Multinomial(3, 10)
        view = order_observation([4, 4, 2], seed=0)
        assert selective_p(fam, [4, 4, 2], view, 0, 1) == 1.0

    def test_rank_order_required(self):
        fam = Multinomial(3, 10)
        view = order_observation([5, 3, 2])
        with pytest.raises(ValueError):
            selective_setup(fam, [5, 3, 2], view, 1, 0)


class TestProcedure1:
    def test_iowa(self, iowa, iowa_family):
        out = procedure1(iowa_family, iowa)
        assert out.reject
        assert out.p_value == pytest.approx(0.006, abs=5e-4)
        assert (out.winner, out.runner_up) == ("Trump", "Cruz")
        assert out.level_used == 0.05

    def test_tie(self):
        out = procedure1(Multinomial(2, 14), [7, 7], seed=3)
        assert out.p_value == 1.0 and not out.reject
        assert out.seed_trace["randomized_ties"]

    def test_two_populations_exact(self):
        out = procedure1(Multinomial(2, 5), [5, 0])
        assert out.p_value == pytest.approx(2 * 0.5 ** 5, rel=1e-12)
        assert not out.reject

    def test_adjusted_level(self):
        x = [20, 9, 3, 2]
        plain = procedure1(Multinomial(4, 34), x)
        adj = procedure1(Multinomial(4, 34), x, adjusted=True)
        assert adj.level_used == pytest.approx(0.05 * 4 / 3)
        assert adj.p_value == plain.p_value
        assert adj.reject == (adj.p_value <= adj.level_used)

    def test_errors(self):
        with pytest.raises(ValueError):
            procedure1(Multinomial(2, 5), [5, 0], alpha=1.2)
        with pytest.raises(SeedRequired):
            procedure1(Multinomial(2, 5), [5, 0], randomized=True)
        with pytest.raises(SeedRequired):
            procedure1(Multinomial(3, 6), [3, 3, 0])

    def test_randomized_is_seeded(self):
        a = procedure1(Multinomial(2, 12), [9, 3], seed=4, randomized=True)
        b = procedure1(Multinomial(2, 12), [9, 3], seed=4, randomized=True)
        c = procedure1(Multinomial(2, 12), [9, 3])
        assert a.p_value == b.p_value <= c.p_value

    def test_reject_iff_p_below_level(self, rng):
        fam = Multinomial(4, 40)
        for _ in range(100):
            out = procedure1(fam, fam.sample([0.5, 0, 0, 0], rng), seed=1)
            assert out.reject == (out.p_value <= out.level_used)

    def test_other_families(self):
        out = procedure1(IndependentBinomial(3, 20), [18, 8, 7])
        ref = stats.fisher_exact([[18, 2], [8, 12]]).pvalue
        assert out.reject and out.p_value < 0.01
        assert out.p_value == pytest.approx(ref, rel=0.5)
        bt = procedure1(BradleyTerry(4), [3, 2, 1, 0])
        assert 0 < bt.p_value <= 1

    def test_normal_variance_is_f_test(self):
        x = np.array([3.1, 1.0, 0.7])
        out = procedure1(NormalVariance(3, 10), x)
        ratio = x[0] / x[1]
        ref = 2 * min(stats.f.sf(ratio, 9, 9), stats.f.cdf(ratio, 9, 9))
        assert out.p_value == pytest.approx(ref, rel=1e-9)


class TestProcedure2:
    def test_iowa(self, iowa, iowa_family):
        out = procedure2(iowa_family, iowa)
        assert out.interpretation.value == pytest.approx(1.075, abs=5e-3)
        assert out.method == "procedure2"

    def test_tied_leaders(self):
        assert procedure2(Multinomial(3, 10), [4, 4, 2], seed=1).delta_lower == -math.inf

    def test_clopper_pearson(self):
        out = procedure2(Multinomial(2, 40), [30, 10])
        lower = stats.beta.ppf(0.025, 30, 11)
        assert out.delta_lower == pytest.approx(logit(lower), abs=1e-7)

    def test_crossing_point_caps(self):
        assert crossing_point(lambda d: 0.0, 0.05) == math.inf
        assert crossing_point(lambda d: 1.0, 0.05) == -math.inf
        assert crossing_point(lambda d: 1 / (1 + math.exp(-(d - 3))), 0.5) == pytest.approx(3, abs=1e-8)


class TestProcedure2Prime:
    def test_iowa_conservative(self, iowa, iowa_family):
        out = procedure2prime(iowa_family, iowa)
        naive = procedure2(iowa_family, iowa)
        assert out.delta_lower >= naive.delta_lower
        assert out.interpretation.value == pytest.approx(1.0983, abs=1e-4)

    def test_iowa_strict_tail(self, iowa, iowa_family):
        # randomized inversion with U = 0 (strict upper tail)
        view = order_observation(iowa.values, depth=2)
        setup = selective_setup(iowa_family, iowa.values, view, 0, 1)
        delta = crossing_point(lambda d: setup.p_value(d, 0.0), 0.05)
        assert math.exp(delta) == pytest.approx(1.108, abs=1e-3)

    def test_tied_leaders_unbounded(self):
        assert procedure2prime(Multinomial(3, 10), [4, 4, 2], seed=2).delta_lower == -math.inf

    def test_dominates_procedure2(self, rng):
        for fam in (Multinomial(3, 30), Multinomial(5, 80), IndependentBinomial(4, 15)):
            for _ in range(60):
                x = fam.sample(rng.normal(0, 0.6, fam.n), rng)
                a = procedure2(fam, x, seed=0)
                b = procedure2prime(fam, x, seed=0)
                if math.isfinite(a.delta_lower):
                    assert b.delta_lower >= a.delta_lower - 1e-7

    def test_normal_variance(self):
        out = procedure2prime(NormalVariance(3, 12), [4.0, 1.0, 0.8])
        assert math.isfinite(out.delta_lower)
        assert out.interpretation.label.startswith("precision gap")


class TestProcedure3:
    def test_iowa(self, iowa, iowa_family):
        report = procedure3(iowa_family, iowa, seed=0)
        assert report.j_hat == 4
        assert report.verified == ["Trump", "Cruz", "Rubio", "Carson"]
        assert report.steps[-1].p_value == 1.0
        assert {report.steps[-1].upper, report.steps[-1].lower} == {"Paul", "Bush"}

    def test_cruz_rubio(self, iowa, iowa_family):
        report = procedure3(iowa_family, iowa, seed=0)
        ref = 2 * stats.binom.sf(213, 365, 0.5)
        assert report.steps[1].p_value == pytest.approx(ref, rel=1e-10)
        assert report.steps[1].p_value == pytest.approx(0.0011, abs=1e-4)

    def test_all_equal(self):
        assert procedure3(Multinomial(4, 20), [5, 5, 5, 5], seed=1).j_hat == 0
        assert procedure3prime(Multinomial(4, 20), [5, 5, 5, 5], seed=1).j_hat == 0

    def test_prefix_structure(self, rng):
        fam = Multinomial(6, 200)
        for _ in range(30):
            report = procedure3(fam, fam.sample([2, 1.5, 1, 0.5, 0, 0], rng), seed=1)
            flags = [s.rejected for s in report.steps]
            assert flags == sorted(flags, reverse=True)
            assert report.j_hat == sum(flags)

    def test_prime_iowa(self, iowa, iowa_family):
        assert procedure3prime(iowa_family, iowa, seed=0).j_hat >= 4

    def test_prime_first_step_is_selective(self, iowa, iowa_family):
        view = order_observation(iowa.values, depth=2)
        first = procedure3prime(iowa_family, iowa, seed=0).steps[0].p_value
        assert first == pytest.approx(selective_p(iowa_family, iowa, view, 0, 1), rel=1e-12)

    def test_prime_steps_smaller(self, rng):
        fam = Multinomial(5, 60)
        for _ in range(100):
            x = fam.sample([1, 0.6, 0.3, 0, 0], rng)
            a = procedure3(fam, x, seed=9)
            b = procedure3prime(fam, x, seed=9)
            for sa, sb in zip(a.steps, b.steps):
                assert sb.p_value <= sa.p_value + 1e-12


class TestTheoremsOnOracle:
    @pytest.mark.parametrize("family", [Multinomial(3, 12), Multinomial(4, 9), BradleyTerry(4)])
    def test_runner_up_maximal(self, family):
        model = ExactModel(family, np.zeros(family.n))
        assert model.p_ordering_violations(deltas=(-1.0, 0.0, 0.5, 2.0)) == []

    @pytest.mark.parametrize("theta", [[0, 0, -40], [0, 0, 0], [0.4, 0.4, 0], [1.0, 0.2, 0.0], [0.3, 0, 0.3]])
    def test_conditional_level(self, theta):
        rates = ExactModel(Multinomial(3, 12), theta).winner_test_rates(0.05)
        assert rates["conditional"] <= 0.05 + 1e-10

    @pytest.mark.parametrize("theta", [[1e-6, 0, -40], [0.3, 0, 0], [1.0, 0.2, 0.0], [0.3, 0.29, 0.3001]])
    def test_marginal_level(self, theta):
        # the (1 - 1/n) alpha bound needs a unique best population
        rates = ExactModel(Multinomial(3, 12), theta).winner_test_rates(0.05)
        assert rates["marginal"] <= (1 - 1 / 3) * 0.05 + 1e-10

    def test_conditional_level_exact_at_boundary(self):
        rates = ExactModel(Multinomial(3, 12), [0, 0, -40]).winner_test_rates(0.05)
        assert rates["conditional"] == pytest.approx(0.05, abs=1e-9)

    def test_bradley_terry_level(self):
        rates = ExactModel(BradleyTerry(4), [0.5, 0.5, 0, -0.2]).winner_test_rates(0.1)
        assert rates["conditional"] <= 0.1 + 1e-10

    @pytest.mark.parametrize("theta", [[0.7, 0, 0], [0.2, 0.1, 0], [2, -1, -1], [0.05, 0, 0, 0]])
    def test_best_wins_often(self, theta):
        model = ExactModel(Multinomial(len(theta), 10), theta)
        assert model.best_wins_probability() >= 1 / len(theta) - 1e-10

    def test_coverage_exact_randomized(self):
        for delta in (0.0, 0.5, 1.2):
            model = ExactModel(Multinomial(3, 12), [delta, 0, -40])
            assert model.bound_noncoverage(0.05) == pytest.approx(0.05, abs=1e-9)

    @pytest.mark.parametrize("theta", [[0.5, 0, 0], [0, 0, 0], [1, 0.5, -0.3]])
    def test_coverage_conservative(self, theta):
        model = ExactModel(Multinomial(3, 12), theta)
        assert model.bound_noncoverage(0.05) <= 0.05 + 1e-10
        assert model.bound_noncoverage(0.05, method="procedure2") <= 0.05 + 1e-10
        assert model.bound_noncoverage(0.05, randomized=False) <= 0.05 + 1e-10


def test_runner_up_maximal_random_draws(rng):
    fams = [Multinomial(4, 40), Multinomial(6, 100), IndependentBinomial(4, 20)]
    for i in range(3000):
        fam = fams[i % 3]
        x = fam.sample(rng.normal(0, 0.5, fam.n), rng)
        view = order_observation(x, seed=i)
        for delta in (-1.0, 0.0, 0.5, 2.0):
            p12 = selective_p(fam, x, view, 0, 1, delta)
            for k in range(2, fam.n):
                assert selective_p(fam, x, view, 0, k, delta) <= p12 + 1e-12
