import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustgen.bounds import (
    BoundReport,
    DecaySpec,
    LossProfile,
    PreconditionError,
    proposition1_bound,
    proposition3_ts_bound,
    reports_to_csv,
    theorem1_bound,
    theorem2_bound,
    theorem5_bound,
    theorem6_bound,
    uniform_stability_bound,
)
from robustgen.concentration import DomainError, lemma8_rhs, log_two_k_over_delta, theorem4_rhs
from robustgen.partition import CellId, OccupancyProfile

LN10 = math.log(10.0)

# independent mpmath evaluations at 50 digits
ORACLE = {
    "prop1_ex": 0.27233109912659543122,
    "thm1_mnist": 1.3588195930767691129,
    "prop3_ex": 14.677717792553436952,
    "stab_ex": 0.11054860738063674459,
}


def profile(counts):
    cells = {CellId("eps", (i + 1,)): c for i, c in enumerate(counts)}
    return OccupancyProfile(cells, n=sum(counts))


def losses_with_mean(mean, n):
    return np.full(n, mean)


class TestOracles:
    def test_prop1(self):
        loss = LossProfile(losses_with_mean(0.1, 60000), zeta=1.0, B=1.0)
        r = proposition1_bound(loss, 0.02, math.log(1000), 0.05, 60000)
        assert r.total == pytest.approx(ORACLE["prop1_ex"], rel=1e-13)

    def test_prop1_overflow_sentinel(self):
        loss = LossProfile(losses_with_mean(0.1, 60000), zeta=1.0, B=1.0)
        r = proposition1_bound(loss, 0.02, 784 * LN10, 0.05, 60000)
        assert r.overflow and r.total == math.inf

    def test_thm1_mnist(self):
        occ = profile([12000] * 5)
        loss = LossProfile(losses_with_mean(0.1, 60000), zeta=1.0)
        r = theorem1_bound(loss, 0.02, occ, 784 * LN10, 0.05, 60000)
        assert r.total == pytest.approx(ORACLE["thm1_mnist"], rel=1e-13)

    def test_prop3(self):
        v = proposition3_ts_bound(DecaySpec(2, 3, 1), 10**4, 0.05)
        assert v.hypothesis_holds
        assert v.value == pytest.approx(ORACLE["prop3_ex"], rel=1e-13)

    def test_stability(self):
        r = uniform_stability_bound(0.0, 1.0, 1.0, 0.05, 10**4)
        assert r.total == pytest.approx(ORACLE["stab_ex"], rel=1e-13)


class TestReductions:
    def test_thm1_is_mean_eps_plus_zeta_thm4(self):
        occ = profile([3, 9, 1, 7])
        loss = LossProfile(np.linspace(0, 2, 20), zeta=2.5)
        r = theorem1_bound(loss, 0.3, occ, 6.0, 0.1, 20)
        expected = loss.mean_loss + 0.3 + 2.5 * theorem4_rhs(1, 1, 4, 6.0, 0.1, 20)
        assert r.total == pytest.approx(expected, rel=1e-13)

    def test_thm2_matches_lemma8(self):
        counts = [3, 9, 1, 7]
        occ = profile(counts)
        alphas = [0.2, 0.5, 0.1, 0.9]
        loss = LossProfile(np.linspace(0, 1, 20), zeta=1.0, alpha_occupied=alphas,
                           alpha_unoccupied_max=0.4)
        r = theorem2_bound(loss, 0.0, occ, 6.0, 0.1, 20)
        assert r.concentration == pytest.approx(lemma8_rhs(alphas, 0.4, counts, 6.0, 0.1, 20), rel=1e-13)

    def test_thm5_full_nhat_is_thm1(self):
        occ = profile([5, 5])
        loss = LossProfile(np.ones(10), zeta=1.0)
        a = theorem5_bound(loss, 0.1, 10, 99.0, occ, 3.0, 0.05, 10)
        b = theorem1_bound(loss, 0.1, occ, 3.0, 0.05, 10)
        assert a.total == pytest.approx(b.total, rel=1e-15)
        assert a.extra_terms["pseudo_residual"] == 0.0

    def test_thm6_residual(self):
        occ = profile([5, 5])
        loss = LossProfile(np.ones(10), zeta=1.0, alpha_occupied=[1.0, 1.0])
        r = theorem6_bound(loss, 0.4, 6, 2.0, occ, 3.0, 0.05, 10)
        assert r.robustness_term == pytest.approx(0.24)
        assert r.extra_terms["pseudo_residual"] == pytest.approx(0.8)

    def test_mapping_alphas(self):
        occ = profile([2, 2])
        alphas = {c: 0.5 for c in occ.cells}
        loss = LossProfile(np.full(4, 0.5), zeta=1.0, alpha_occupied=alphas)
        assert math.isfinite(theorem2_bound(loss, 0, occ, 2.0, 0.1, 4).total)


class TestPreconditions:
    def test_prop1_needs_B(self):
        with pytest.raises(PreconditionError):
            proposition1_bound(LossProfile(np.ones(3), zeta=1.0), 0, 1.0, 0.1, 3)

    def test_thm2_needs_alphas(self):
        with pytest.raises(PreconditionError):
            theorem2_bound(LossProfile(np.ones(3), zeta=1.0), 0, profile([3]), 1.0, 0.1, 3)

    def test_alpha_missing_cell(self):
        occ = profile([1, 2])
        loss = LossProfile(np.ones(3), zeta=1.0, alpha_occupied={occ.cells[0]: 0.5})
        with pytest.raises(PreconditionError):
            theorem2_bound(loss, 0, occ, 1.0, 0.1, 3)

    def test_sizes_disagree(self):
        with pytest.raises(PreconditionError):
            theorem1_bound(LossProfile(np.ones(4), zeta=1.0), 0, profile([3]), 1.0, 0.1, 3)

    def test_zeta_below_loss(self):
        with pytest.raises(DomainError):
            LossProfile(np.array([0.1, 2.0]), zeta=1.0)

    def test_conditional_zeta_allows_large_losses(self):
        LossProfile(np.array([0.1, 2.0]), zeta=1.0, zeta_kind="conditional")

    def test_B_dominates_zeta(self):
        with pytest.raises(DomainError):
            LossProfile(np.ones(2), zeta=2.0, B=1.0)

    def test_negative_loss(self):
        with pytest.raises(DomainError):
            LossProfile(np.array([-0.1]), zeta=1.0)

    def test_nhat_range(self):
        with pytest.raises(DomainError):
            theorem5_bound(LossProfile(np.ones(3), zeta=1.0), 0, 0, 1.0, profile([3]), 1.0, 0.1, 3)

    def test_decay_spec(self):
        with pytest.raises(DomainError):
            DecaySpec(0, 1, 1)
        with pytest.raises(DomainError):
            DecaySpec(1, 1, -1)

    def test_prop3_hypothesis_flag(self):
        assert not proposition3_ts_bound(DecaySpec(0.5, 3, 1), 10, 0.05).hypothesis_holds


class TestReports:
    def test_csv_header_and_total(self):
        r = BoundReport("x", 0.1, 0.2, 0.3, 0.4, extra_terms={"a": 0.5})
        lines = reports_to_csv([r]).splitlines()
        assert lines[0] == "bound_name,empirical_loss,robustness_term,sqrt_term,linear_term,extra,total"
        assert float(lines[1].split(",")[-1]) == r.total

    @given(st.lists(st.floats(0, 10), min_size=1, max_size=40), st.floats(0, 5),
           st.floats(1e-4, 0.5), st.floats(0, 100))
    def test_total_is_sum_of_terms(self, losses, eps, delta, ln_K):
        n = len(losses)
        loss = LossProfile(np.array(losses), zeta=max(losses) + 1.0, B=max(losses) + 2.0,
                           alpha_occupied=[max(losses)])
        occ = profile([n])
        for r in (theorem1_bound(loss, eps, occ, ln_K, delta, n),
                  theorem2_bound(loss, eps, occ, ln_K, delta, n),
                  proposition1_bound(loss, eps, ln_K, delta, n)):
            d = r.to_dict()
            s = (d["empirical_loss"] + d["robustness_term"] + d["concentration_sqrt_term"]
                 + d["concentration_linear_term"] + sum(d["extra_terms"].values()))
            assert d["total"] == s
            assert r.total >= loss.mean_loss + eps

    @given(st.integers(1, 10**6), st.floats(1e-6, 0.5), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_stability_decreasing_in_lambda(self, n, delta, B, lam):
        a = uniform_stability_bound(0.0, B, lam, delta, n).total
        b = uniform_stability_bound(0.0, B, lam * 2, delta, n).total
        assert b < a

    @given(st.floats(0.1, 5), st.floats(0.1, 50), st.floats(0, 5), st.integers(3, 10**8),
           st.floats(1e-6, 0.5))
    def test_prop3_monotone_in_n(self, alpha, beta, C, n, delta):
        spec = DecaySpec(alpha, beta, C)
        a = proposition3_ts_bound(spec, n, delta).value
        assert proposition3_ts_bound(spec, n * 2, delta).value >= a
        assert a >= math.log(1 / delta)


def test_L_is_natural_log():
    assert log_two_k_over_delta(math.log(5), 0.1) == pytest.approx(math.log(100))
