import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from robustgen.bounds import DecaySpec
from robustgen.concentration import DomainError, MultinomialSpec
from robustgen.simulate import (
    BLOCK,
    CoverageResult,
    TrialPlan,
    decay_probabilities,
    default_k_max,
    empirical_quantile,
    probability_profile,
    results_to_csv,
    run_coverage,
    run_coverage_many,
    sample_multinomial,
    simulate_occupancy_decay,
    simulated_constant,
    wilson_interval,
)


def spec(K, n, kind="uniform"):
    return MultinomialSpec.from_probs(n, probability_profile(kind, K))


class TestSampling:
    def test_K1_is_degenerate(self):
        X = sample_multinomial(spec(1, 37), 0, size=5)
        assert np.all(X == 37)

    def test_spike(self):
        X = sample_multinomial(spec(6, 50, "spike"), 1, size=3)
        assert np.all(X[:, 0] == 50) and np.all(X[:, 1:] == 0)

    def test_counts_sum_to_n(self):
        X = sample_multinomial(spec(10, 123, "geometric"), 2, size=100)
        assert np.all(X.sum(axis=1) == 123)

    @pytest.mark.parametrize("K,n,kind", [(2, 10, "uniform"), (10, 100, "geometric"), (100, 1000, "uniform")])
    def test_pooled_chi_square(self, K, n, kind):
        s = spec(K, n, kind)
        X = sample_multinomial(s, 7, size=2000)
        total = X.sum(axis=0)
        keep = s.p > 0
        expected = 2000 * n * s.p[keep]
        # merge the far tail of the geometric profile so every expected count is large
        big = expected >= 5
        obs = np.append(total[keep][big], total[keep][~big].sum())
        exp = np.append(expected[big], expected[~big].sum())
        if exp[-1] == 0:
            obs, exp = obs[:-1], exp[:-1]
        assert stats.chisquare(obs, exp).pvalue > 1e-4

    def test_clt_first_coordinate(self):
        n, p0 = 10_000, 0.3
        s = MultinomialSpec.from_probs(n, [p0, 1 - p0])
        x = sample_multinomial(s, 11, size=20_000)[:, 0]
        z = (x.mean() - n * p0) / math.sqrt(n * p0 * (1 - p0) / len(x))
        assert abs(z) < 5
        assert x.var() == pytest.approx(n * p0 * (1 - p0), rel=0.05)


class TestWilson:
    def test_zero_violations(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0 and hi == pytest.approx(0.03699, abs=1e-4)

    def test_all_violations(self):
        assert wilson_interval(10, 10)[1] == 1.0

    @given(st.integers(1, 10**6), st.data())
    def test_contains_phat(self, n, data):
        k = data.draw(st.integers(0, n))
        lo, hi = wilson_interval(k, n)
        assert lo - 1e-12 <= k / n <= hi + 1e-12

    def test_pass_rule(self):
        r = CoverageResult("bhc", 2, 10, 0.05, 6, 100, 0.05)
        assert r.wilson_lower < 0.05 and r.passed
        r = CoverageResult("bhc", 2, 10, 0.05, 20, 100, 0.05)
        assert not r.passed


class TestCoverage:
    def test_K1_no_violations(self):
        for stat in ("bhc", "lemma5", "lemma6", "lemma_new", "theorem4", "lemma8"):
            r = run_coverage(TrialPlan(500, 3, spec(1, 20), stat, 0.05))
            assert r.violations == 0

    def test_spike_no_violations(self):
        for stat in ("bhc", "lemma6", "lemma_new", "theorem4", "lemma8"):
            assert run_coverage(TrialPlan(200, 3, spec(5, 20, "spike"), stat, 0.05)).violations == 0

    def test_single_trial(self):
        r = run_coverage(TrialPlan(1, 0, spec(10, 100), "bhc", 0.05))
        assert r.trials == 1 and r.violations in (0, 1)

    def test_workers_do_not_change_results(self):
        plans = [TrialPlan(2 * BLOCK + 17, 99, spec(50, 200), s, 0.1)
                 for s in ("bhc", "lemma5", "theorem4", "lemma8")]
        a = run_coverage_many(plans, workers=1)
        b = run_coverage_many(plans, workers=4)
        assert results_to_csv(a) == results_to_csv(b)

    def test_shared_samples_match_single_runs(self):
        plans = [TrialPlan(3000, 5, spec(20, 100), s, 0.2) for s in ("lemma5", "lemma6")]
        together = run_coverage_many(plans)
        alone = [run_coverage(p) for p in plans]
        assert [r.violations for r in together] == [r.violations for r in alone]

    def test_alias(self):
        assert TrialPlan(1, 0, spec(2, 5), "thm4", 0.1).statistic == "theorem4"

    def test_repaired_envelope_covers(self):
        r = run_coverage(TrialPlan(20_000, 1, spec(100, 1000), "lemma5_repaired", 0.05))
        assert r.passed and r.empirical_rate < 0.05

    @pytest.mark.parametrize("stat", ["lemma3", "lemma4"])
    def test_tail_frequency_below_bound(self, stat):
        a = np.linspace(0, 1, 10)
        plan = TrialPlan(20_000, 8, spec(10, 200), stat, 0.05, weights=a.tolist())
        r = run_coverage(plan)
        assert r.bound_delta <= 1.0
        assert r.passed

    def test_tail_needs_fixed_weights(self):
        with pytest.raises(DomainError):
            TrialPlan(10, 0, spec(3, 5), "lemma3", 0.1)

    def test_rejects(self):
        with pytest.raises(DomainError):
            TrialPlan(0, 0, spec(3, 5), "bhc", 0.1)
        with pytest.raises(DomainError):
            TrialPlan(1, 0, spec(3, 5), "nope", 0.1)
        with pytest.raises(DomainError):
            TrialPlan(1, 0, spec(3, 5), "bhc", 1.0)
        with pytest.raises(DomainError):
            TrialPlan(1, 0, spec(3, 5), "lemma_new", 0.1, weights=[1.0, -1.0, 0.0]).fixed_weights()

    def test_csv_columns(self):
        r = run_coverage(TrialPlan(10, 0, spec(3, 5), "bhc", 0.1))
        header = results_to_csv([r]).splitlines()[0]
        assert header == "statistic,K,n,delta,trials,violations,rate,wilson_upper,pass"


class TestDecay:
    def test_probabilities_normalised(self):
        p, tail = decay_probabilities(DecaySpec(2, 3, 1), 100)
        assert p.sum() == pytest.approx(1.0) and tail < 1e-9
        assert np.all(np.diff(p) <= 0)

    def test_tail_bound_dominates(self):
        s = DecaySpec(1.0, 5.0, 1)
        p_small, tail = decay_probabilities(s, 20)
        k = np.arange(21, 5000)
        true_tail = np.exp(-(k / 5.0)).sum() / np.exp(-(np.arange(1, 21) / 5.0)).sum()
        assert tail >= true_tail

    def test_simulated_constant(self):
        s = DecaySpec(2.0, 1.0, 1.0)
        p, _ = decay_probabilities(s, 50)
        C = simulated_constant(s, 50)
        k = np.arange(1, 51)
        assert np.all(p <= C * np.exp(-((k / 1.0) ** 2.0)) * (1 + 1e-12))
        assert C == pytest.approx(1.0 / np.exp(-(k ** 2.0)).sum())

    def test_n1_single_cell(self):
        s = DecaySpec(2, 3, 1)
        t = simulate_occupancy_decay(s, default_k_max(s), 1, 100, 0)
        assert np.all(t == 1)

    def test_insufficient_k_max(self):
        with pytest.raises(DomainError):
            simulate_occupancy_decay(DecaySpec(0.5, 10, 1), 20, 10, 10, 0)

    def test_deterministic(self):
        s = DecaySpec(1.5, 4, 1)
        K = default_k_max(s)
        assert np.array_equal(simulate_occupancy_decay(s, K, 500, 50, 3),
                              simulate_occupancy_decay(s, K, 500, 50, 3))

    @settings(max_examples=30)
    @given(st.lists(st.integers(0, 100), min_size=1, max_size=50), st.floats(0.01, 1.0))
    def test_quantile_definition(self, values, q):
        v = empirical_quantile(values, q)
        arr = np.array(values)
        assert np.mean(arr <= v) >= q - 1e-12
        smaller = arr[arr < v]
        if smaller.size:
            assert np.mean(arr <= smaller.max()) < q


def test_profiles():
    assert probability_profile("geometric", 3).tolist() == pytest.approx([4 / 7, 2 / 7, 1 / 7])
    with pytest.raises(DomainError):
        probability_profile("zipf", 3)
