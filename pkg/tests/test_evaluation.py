import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cppm.evaluation import (
    cvar,
    cvar_cr,
    cvar_cr_hard_family,
    hard_instance,
    hard_instance_values,
    monte_carlo_distribution,
    offline_opt,
    verify_lemma,
    welfare_distribution,
)
from cppm.grid import generalized_inverse
from cppm.mechanism import run_r_dynamic, static_profile
from cppm.model import Instance, MarketParams, WelfareDistribution
from cppm.pricing import (
    DesignRequest,
    design_delta_dynamic,
    design_fully_dynamic,
    design_risk_neutral,
    design_static_risk,
)

RNG = np.random.default_rng(99)


def dist(measures, welfares):
    return WelfareDistribution(measures=np.array(measures, float),
                               welfares=np.array(welfares, float))


class TestOfflineOpt:
    def test_examples(self):
        assert offline_opt(Instance([1, 5, 3]), 2) == 8
        assert offline_opt(Instance([7]), 3) == 7

    def test_against_sort(self):
        vals = RNG.uniform(0, 1000, 1000)
        expected = float(np.sort(vals)[-10:].sum())
        assert offline_opt(Instance(vals), 10) == pytest.approx(expected, rel=1e-12)


class TestCvar:
    def test_constant(self):
        d = dist([0.25, 0.75], [4.0, 4.0])
        for delta in (0.1, 0.5, 1.0):
            assert cvar(d, delta) == pytest.approx(4.0, rel=1e-15)

    def test_full_tail_is_mean(self):
        d = dist([0.2, 0.3, 0.5], [1.0, 2.0, 10.0])
        assert cvar(d, 1.0) == pytest.approx(0.2 + 0.6 + 5.0, abs=1e-15)

    def test_two_point_hand_value(self):
        # atoms (0.3 at 2, 0.7 at 10); worst half = 0.3 of 2 and 0.2 of 10
        d = dist([0.3, 0.7], [2.0, 10.0])
        assert cvar(d, 0.5) == pytest.approx((0.3 * 2 + 0.2 * 10) / 0.5, rel=1e-14)

    def test_uniform_quantile_integral(self):
        m = 5001
        d = WelfareDistribution.from_samples((np.arange(m) + 0.5) / m)
        assert cvar(d, 0.4) == pytest.approx(0.2, abs=2.0 / m)

    def test_rejects_bad_delta(self):
        d = dist([1.0], [1.0])
        with pytest.raises(ValueError):
            cvar(d, 0.0)
        with pytest.raises(ValueError):
            cvar(d, 1.2)

    @given(st.lists(st.floats(min_value=0, max_value=50), min_size=1, max_size=30),
           st.floats(min_value=0.05, max_value=0.95))
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_delta(self, values, d1):
        d = WelfareDistribution.from_samples(np.array(values))
        d2 = min(1.0, d1 + 0.04)
        assert cvar(d, d1) <= cvar(d, d2) + 1e-9
        assert cvar(d, 1.0) == pytest.approx(d.mean(), abs=1e-12)


class TestWelfareDistribution:
    def test_point_mass_for_flat_profile(self):
        params = MarketParams(3, 3, 2, 0)
        prof = design_risk_neutral(DesignRequest(params=params, grid_size=100))
        d = welfare_distribution(prof, Instance([3.0, 3.0, 3.0]), m_seeds=101)
        assert len(d.welfares) == 1
        assert d.welfares[0] == 6.0 and d.measures[0] == 1.0

    def test_single_buyer_split(self):
        params = MarketParams(1, 100, 1, 0)
        prof = design_risk_neutral(DesignRequest(params=params, grid_size=5000))
        v = 37.0
        d = welfare_distribution(prof, Instance([v]), m_seeds=4001)
        accept_measure = generalized_inverse(prof.levels[0], v)
        assert d.welfares.tolist() == [0.0, v]
        assert d.measures[1] == pytest.approx(accept_measure, abs=1.5 / 4001)

    def test_refinement_stability(self):
        params = MarketParams(1, 100, 4, 3)
        prof = design_risk_neutral(DesignRequest(params=params, grid_size=3000))
        inst = Instance(RNG.uniform(1, 100, 25))
        c1 = cvar(welfare_distribution(prof, inst, m_seeds=1001), 0.5)
        c2 = cvar(welfare_distribution(prof, inst, m_seeds=10001), 0.5)
        assert abs(c1 - c2) <= 5e-3 * 100.0


class TestRatioReports:
    def test_all_top_instance(self):
        params = MarketParams(1, 100, 5, 2)
        prof = design_risk_neutral(DesignRequest(params=params, grid_size=2000))
        report = cvar_cr(prof, [Instance([100.0] * 5)], 1.0, m_seeds=501)
        assert report.worst_ratio <= prof.alpha
        assert report.flagged == ()
        assert report.rows[0].opt == 500.0

    def test_hard_family_matches_generic(self):
        params = MarketParams(1, 10, 3, 1)
        prof = design_risk_neutral(DesignRequest(params=params, grid_size=2000))
        eps = (10 - 1) / 6
        fam = cvar_cr_hard_family(prof, eps, 1.0, m_seeds=801)
        values = hard_instance_values(params, eps)
        insts = [(f"staircase-v={v:.10g}", hard_instance(params, eps, v)) for v in values]
        gen = cvar_cr(prof, insts, 1.0, m_seeds=801)
        assert len(fam.rows) == len(gen.rows) == 7
        for a, b in zip(fam.rows, gen.rows):
            assert a.opt == pytest.approx(b.opt, rel=1e-12)
            assert a.cvar == pytest.approx(b.cvar, rel=1e-12)
        assert fam.worst_ratio == pytest.approx(gen.worst_ratio, rel=1e-12)

    def test_flagging(self):
        # all buyers at L: welfare 2 only while the static price stays at L,
        # so the ratio comes out near alpha and exceeds a designed_alpha of 1.01
        params = MarketParams(1, 100, 2, 0)
        prof = design_risk_neutral(DesignRequest(params=params, grid_size=2000))
        report = cvar_cr(prof, [Instance([1.0, 1.0])], 1.0, m_seeds=2001,
                         designed_alpha=1.01, flag_rtol=1e-3)
        assert report.worst_ratio == pytest.approx(prof.alpha, rel=5e-3)
        assert report.flagged == ("instance-0",)


class TestHardInstance:
    def test_direct_construction(self):
        params = MarketParams(1, 3, 2, 1)
        inst = hard_instance(params, 1.0, 3.0)
        assert inst.valuations == (1, 1, 2, 2, 3, 3)

    def test_bottom_truncation(self):
        params = MarketParams(1, 3, 2, 1)
        assert hard_instance(params, 1.0, 1.0).valuations == (1, 1)

    def test_fractional_step(self):
        params = MarketParams(1, 2, 1, 0)
        inst = hard_instance(params, 0.5, 2.0)
        assert inst.valuations == (1.0, 1.5, 2.0)

    def test_off_lattice_rejected(self):
        params = MarketParams(1, 3, 2, 1)
        with pytest.raises(ValueError, match="lattice"):
            hard_instance(params, 1.0, 2.5)


class TestMonteCarlo:
    def runner(self, params):
        def run(instance, rng):
            seeds = rng.random(params.k)
            return run_r_dynamic(params, instance, list(seeds)).welfare
        return run

    def test_single_run(self):
        params = MarketParams(1, 100, 2, 1)
        d = monte_carlo_distribution(self.runner(params), Instance([40.0, 60.0]), 1, 5)
        assert d.measures.tolist() == [1.0]

    def test_deterministic_given_seed(self):
        params = MarketParams(1, 100, 3, 2)
        inst = Instance([20.0, 50.0, 90.0, 30.0])
        d1 = monte_carlo_distribution(self.runner(params), inst, 300, 17)
        d2 = monte_carlo_distribution(self.runner(params), inst, 300, 17)
        assert np.array_equal(d1.welfares, d2.welfares)
        assert np.array_equal(d1.measures, d2.measures)

    def test_k1_matches_exact_distribution(self):
        # with one unit the independent-seeds baseline is the static design
        params = MarketParams(1, 100, 1, 0)
        inst = Instance([30.0, 80.0])
        n = 4000
        mc = monte_carlo_distribution(self.runner(params), inst, n, 11)
        prof = static_profile(params, 2000)
        exact = welfare_distribution(prof, inst, m_seeds=4001)
        support = np.unique(np.concatenate([mc.welfares, exact.welfares]))
        F_mc = np.array([mc.measures[mc.welfares <= w].sum() for w in support])
        F_ex = np.array([exact.measures[exact.welfares <= w].sum() for w in support])
        assert np.max(np.abs(F_mc - F_ex)) <= 3.0 / math.sqrt(n)


class TestVerifyLemma:
    @pytest.fixture(scope="class")
    @staticmethod
    def profiles():
        made = {}
        made["neutral"] = design_risk_neutral(DesignRequest(
            params=MarketParams(1, 100, 6, 2), grid_size=1500))
        made["static"] = design_static_risk(DesignRequest(
            params=MarketParams(1, 100, 6, 0, 0.6), grid_size=1500))
        made["fully"] = design_fully_dynamic(DesignRequest(
            params=MarketParams(1, 100, 6, 5, 0.6), grid_size=1500))
        made["capped"] = design_delta_dynamic(DesignRequest(
            params=MarketParams(1, 100, 6, 2, 0.6), grid_size=1500))
        return made

    def test_monotonicity_passes(self, profiles):
        rng = np.random.default_rng(5)
        for prof in profiles.values():
            for _ in range(10):
                inst = Instance(rng.uniform(1, 100, int(rng.integers(2, 20))))
                assert verify_lemma(prof, inst, "monotonicity", 401).passed

    def test_floor_passes_on_staircase(self, profiles):
        for prof in profiles.values():
            inst = hard_instance(prof.params, 9.9, 1 + 9.9 * 5)
            assert verify_lemma(prof, inst, "floor", 401).passed

    def test_rounding_passes(self, profiles):
        rng = np.random.default_rng(6)
        for _ in range(8):
            inst = Instance(rng.uniform(1, 100, int(rng.integers(2, 15))))
            assert verify_lemma(profiles["fully"], inst, "rounding", 1001).passed

    def test_rounding_needs_per_unit(self, profiles):
        with pytest.raises(ValueError, match="per-unit"):
            verify_lemma(profiles["neutral"], Instance([50.0]), "rounding", 101)

    def test_unknown_property(self, profiles):
        with pytest.raises(ValueError, match="unknown"):
            verify_lemma(profiles["neutral"], Instance([50.0]), "tightness", 101)
