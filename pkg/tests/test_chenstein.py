import math

import numpy as np
import pytest

import ergostat as es
from ergostat import oracle

from chains import battery


class TestProcessConstruction:
    def test_stationary_is_fixed_point(self):
        for name, proc in battery().items():
            pi = proc.stationary
            np.testing.assert_allclose(pi @ proc.transition, pi, atol=1e-12)
            assert pi.sum() == pytest.approx(1.0, abs=1e-12)

    def test_epsilon_is_marked_mass(self):
        proc = battery()["threestate2mark"]
        assert proc.epsilon == pytest.approx(
            proc.stationary[1] + proc.stationary[2], abs=1e-14
        )

    def test_row_sum_validation(self):
        with pytest.raises(es.ValidationError):
            es.MarkovBinaryProcess(
                transition=np.array([[0.9, 0.2], [0.5, 0.5]]),
                marked=frozenset({1}),
            )

    def test_marked_validation(self):
        P = np.array([[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(es.ValidationError):
            es.MarkovBinaryProcess(transition=P, marked=frozenset())
        with pytest.raises(es.ValidationError):
            es.MarkovBinaryProcess(transition=P, marked=frozenset({0, 1}))
        with pytest.raises(es.ValidationError):
            es.MarkovBinaryProcess(transition=P, marked=frozenset({7}))

    def test_state_capacity(self):
        n = 13
        P = np.full((n, n), 1.0 / n)
        with pytest.raises(es.CapacityError):
            es.MarkovBinaryProcess(transition=P, marked=frozenset({0}))

    def test_iid_detection(self):
        assert es.iid_process(0.2).is_iid
        assert not battery()["twostate"].is_iid
        assert battery()["iid02"].is_iid


class TestExactCountDistribution:
    @pytest.mark.parametrize("name", sorted(battery()))
    @pytest.mark.parametrize("N", [1, 2, 7, 12])
    def test_matches_path_enumeration(self, name, N):
        proc = battery()[name]
        pmf = es.exact_count_distribution(proc, N)
        enum = oracle.path_enumeration(proc.transition, proc.stationary,
                                       proc.marked, N)
        assert np.abs(pmf - enum).max() < 1e-12

    def test_iid_matches_binomial(self):
        proc = es.iid_process(0.13)
        pmf = es.exact_count_distribution(proc, 40)
        np.testing.assert_allclose(pmf, oracle.binomial_pmf(40, 0.13), atol=1e-12)

    def test_capacity_bounds(self):
        proc = es.iid_process(0.1)
        with pytest.raises(es.CapacityError):
            es.exact_count_distribution(proc, 10_001)
        with pytest.raises(es.ValidationError):
            es.exact_count_distribution(proc, 0)

    def test_long_horizon_mass_conserved(self):
        pmf = es.exact_count_distribution(battery()["twostate"], 5000)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(pmf >= -1e-15)


class TestR1:
    def test_iid_is_exactly_zero(self):
        est = es.r1_estimate(es.iid_process(0.2), 50, 5)
        assert est.value == 0.0
        assert est.method == "exact"

    def test_full_window_delta(self):
        # Delta = N-1 leaves no j with a nonempty comparison window
        est = es.r1_estimate(battery()["twostate"], 10, 9)
        assert est.value == 0.0

    def test_exact_numbers_small_chain(self):
        # N=4, Delta=2, chain twostate: sup over j=1, L=1 -> q range empty;
        # so only j with N-j-Delta >= 2 contribute; check by hand vs paths
        proc = battery()["twostate"]
        N, Delta = 6, 2
        est = es.r1_estimate(proc, N, Delta)
        probs, states = oracle.path_table(proc.transition, proc.stationary, N)
        mask = np.isin(states, sorted(proc.marked))
        worst = 0.0
        for j in range(1, N - Delta):
            L = N - j - Delta
            window = mask[:, Delta:N - j]
            assert window.shape[1] == L
            counts = window.sum(axis=1)
            for q in range(1, L):
                joint = probs[(mask[:, 0] == 1) & (counts == q)].sum()
                marg = probs[counts == q].sum()
                worst = max(worst, abs(joint - proc.epsilon * marg))
        assert est.value == pytest.approx(worst, abs=1e-12)

    def test_delta_validation(self):
        proc = battery()["twostate"]
        with pytest.raises(es.ValidationError):
            es.r1_estimate(proc, 10, 1)
        with pytest.raises(es.ValidationError):
            es.r1_estimate(proc, 10, 10)


class TestR2:
    def test_exact_pair_sum_small_chain(self):
        proc = battery()["twostate"]
        J_lower, Delta = 1, 4
        est = es.r2_estimate(proc, J_lower, Delta)
        # direct: sum_{n=J_lower}^{Delta-1} P(X_1 = 1, X_{n+1} = 1)
        pi = proc.stationary
        mask = proc.marked_mask.astype(float)
        total = 0.0
        for n in range(J_lower, Delta):
            v = pi * mask
            for _ in range(n):
                v = v @ proc.transition
            total += float((v * mask).sum())
        assert est.value == pytest.approx(total, abs=1e-12)

    def test_range_validation(self):
        proc = battery()["twostate"]
        with pytest.raises(es.ValidationError):
            es.r2_estimate(proc, 0, 3)
        with pytest.raises(es.ValidationError):
            es.r2_estimate(proc, 3, 3)


class TestTheoremBound:
    def test_formula_and_report_consistency(self):
        rep = es.theorem_bound(0.01, 100, 5, 0.001, 0.002)
        t = 1.0
        want = (6.0 * t + 4.0) * (100 * (0.001 + 0.002) + 5 * 0.01)
        assert rep.bound == pytest.approx(want, rel=1e-12)
        assert rep.C3 == pytest.approx(6.0 * t + 4.0)
        assert rep.E_size == 1

    def test_monotone_in_remainders(self):
        base = es.theorem_bound(0.01, 100, 5, 0.001, 0.002).bound
        assert es.theorem_bound(0.01, 100, 5, 0.002, 0.002).bound > base
        assert es.theorem_bound(0.01, 100, 5, 0.001, 0.003).bound > base
        assert es.theorem_bound(0.01, 100, 9, 0.001, 0.002).bound > base

    def test_accepts_measure_estimates(self):
        r1 = es.MeasureEstimate(0.001, 0.0001, "montecarlo", 100)
        r2 = es.MeasureEstimate(0.002, 0.0001, "montecarlo", 100)
        rep = es.theorem_bound(0.01, 100, 5, r1, r2)
        assert rep.R1.value == 0.001

    def test_report_rejects_inconsistent_bound(self):
        rep = es.theorem_bound(0.01, 100, 5, 0.001, 0.002)
        with pytest.raises(es.ValidationError):
            es.ChenSteinReport(
                epsilon=rep.epsilon, N=rep.N, Delta=rep.Delta, R1=rep.R1,
                R2=rep.R2, bound=rep.bound * 2.0, C3=rep.C3, E_size=rep.E_size,
            )

    def test_bound_dominates_singleton_gap_battery(self):
        # the certified bound must dominate the true total-variation style
        # gap for every battery chain at small N
        for name, proc in battery().items():
            N, Delta = 10, 3
            rep = es.theorem_bound(
                proc.epsilon, N, Delta,
                es.r1_estimate(proc, N, Delta),
                es.r2_estimate(proc, 1, Delta),
            )
            pmf = es.exact_count_distribution(proc, N)
            t = N * proc.epsilon
            gap = max(
                abs(float(pmf[k]) - t ** k * math.exp(-t) / math.factorial(k))
                for k in range(N + 1)
            )
            assert gap <= rep.bound, name


def test_agg_bound_values():
    assert es.agg_bound(1.0, 20) == pytest.approx(0.1, rel=1e-14)
    assert es.agg_bound(1.0, 100) == pytest.approx(0.02, rel=1e-14)
    assert es.agg_bound(2.0, 100) == pytest.approx(0.08, rel=1e-14)
    assert es.agg_bound(2.0, 1000) == pytest.approx(0.008, rel=1e-14)


class TestMonteCarloAgainstExact:
    def test_mc_r1_tracks_exact_markov(self):
        # force the Monte Carlo path by wrapping the chain as if dynamical:
        # instead compare MC binomial sampling on the iid chain vs exact 0
        proc = battery()["twostate"]
        exact = es.r1_estimate(proc, 40, 6)
        assert exact.method == "exact"
        assert 0.0 <= exact.value < proc.epsilon

    def test_dynamical_process_r2_positive_at_periodic_center(self):
        proc = es.dynamical_process(es.doubling(), es.Ball(1.0 / 3.0, 1e-3))
        est = es.r2_estimate(proc, 1, 4, m=4000, seed=3)
        # the 2-periodic center guarantees pair hits at gap 2
        want = oracle.doubling_pair_hit_measure(1.0 / 3.0, 1e-3, 2)
        assert est.value > 0.0
        assert est.value == pytest.approx(
            sum(oracle.doubling_pair_hit_measure(1.0 / 3.0, 1e-3, n)
                for n in range(1, 4)),
            abs=3.0 * est.std_error + 1e-4,
        )

    def test_dynamical_r1_runs_and_is_bounded(self):
        proc = es.dynamical_process(es.doubling(), es.Ball(0.41421356, 5e-3))
        est = es.r1_estimate(proc, 60, 8, m=2000, seed=4)
        assert est.method == "montecarlo"
        assert 0.0 <= est.value <= 1.0
        assert est.std_error > 0.0

    def test_dynamical_worker_invariance(self):
        proc = es.dynamical_process(es.doubling(), es.Ball(0.41421356, 5e-3))
        a = es.r1_estimate(proc, 60, 8, m=1000, seed=4, workers=1)
        b = es.r1_estimate(proc, 60, 8, m=1000, seed=4, workers=4)
        assert a.value == b.value
