import math

import pytest

import ergostat as es
from ergostat import oracle

from chains import battery


def test_binomial_pmf_sums_to_one():
    pmf = oracle.binomial_pmf(20, 0.3)
    assert pmf.shape == (21,)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert pmf[0] == pytest.approx(0.7 ** 20, rel=1e-12)


def test_poisson_pmf_known_values():
    pmf = oracle.poisson_pmf(1.0, 5)
    assert pmf[0] == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert pmf[1] == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert pmf[3] == pytest.approx(math.exp(-1.0) / 6.0, rel=1e-14)


def test_periodic_points_are_fixed_by_iterate():
    d = es.doubling()
    for q in (1, 2, 3, 5):
        for x in oracle.doubling_periodic_points(q):
            y = float(x)
            for _ in range(q):
                y = es.step(d, y)
            assert d.metric(y, float(x)) < 1e-9


def test_corr_oracle_geometric():
    assert oracle.doubling_corr_oracle(0) == pytest.approx(1.0 / 12.0, rel=1e-14)
    for k in range(1, 6):
        assert oracle.doubling_corr_oracle(k) == pytest.approx(
            2.0 ** (-k) / 12.0, rel=1e-14
        )


def test_path_table_total_mass():
    proc = battery()["twostate"]
    probs, states = oracle.path_table(proc.transition, proc.stationary, 8)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert states.shape == (2 ** 8, 8)


def test_path_enumeration_marginals():
    # one-step enumeration reproduces the stationary marked mass
    proc = battery()["threestate"]
    pmf = oracle.path_enumeration(proc.transition, proc.stationary, proc.marked, 1)
    assert pmf[1] == pytest.approx(proc.epsilon, abs=1e-12)


def test_path_enumeration_capacity():
    proc = battery()["threestate"]
    with pytest.raises(es.CapacityError):
        oracle.path_table(proc.transition, proc.stationary, 30)


class TestVrhoOracle:
    def test_small_rho_closed_form(self):
        # horizon 1: only the period-1 expansion of the fixed point at 0,
        # an arc of radius 3*rho around it -> total length 6*rho
        assert oracle.doubling_vrho_measure(1e-3, 0.25) == pytest.approx(
            6e-3, rel=1e-9
        )

    def test_horizon_two_includes_period_two(self):
        # J=2 adds arcs of radius 5*rho/3 at 0, 1/3, 2/3; the one at 0 is
        # swallowed by the radius-3*rho arc, so the union is 38*rho/3
        got = oracle.doubling_vrho_measure(1e-4, 0.25)
        assert got == pytest.approx(38e-4 / 3.0, rel=1e-9)

    def test_monotone_in_horizon_parameter(self):
        vals = [oracle.doubling_vrho_measure(1e-4, a) for a in (0.15, 0.25, 0.4)]
        assert vals[0] <= vals[1] <= vals[2]


class TestPairHitOracle:
    def test_fixed_point_overlap(self):
        # center 0: the preimage arc at 0 has radius rho/2 and sits inside B
        rho = 1e-3
        got = oracle.doubling_pair_hit_measure(0.0, rho, 1)
        assert got == pytest.approx(rho, rel=1e-9)

    def test_k_window_switchover_consistent(self):
        # mixing: mu(B meet T^-n B) ~ mu(B)^2 once 2^-n << rho; the value
        # must stay near that plateau across the full/windowed k switch
        rho, mu2 = 1e-3, (2e-3) ** 2
        for n in (11, 12, 13, 14):
            v = oracle.doubling_pair_hit_measure(1.0 / 3.0, rho, n)
            assert v == pytest.approx(mu2, rel=0.15)

    def test_generic_center_no_overlap(self):
        got = oracle.doubling_pair_hit_measure(0.41421356, 1e-4, 3)
        assert got == 0.0

    def test_period_point_positive(self):
        got = oracle.doubling_pair_hit_measure(1.0 / 3.0, 1e-4, 2)
        assert got > 0.0


def test_mp_left_branch_root_inverts():
    for alpha in (0.3, 0.5, 0.8):
        for y in (0.01, 0.3, 0.7, 1.0):
            x = oracle.mp_left_branch_root(alpha, y)
            assert 0.0 <= x <= 0.5
            assert x + 2.0 ** alpha * x ** (1 + alpha) == pytest.approx(
                y, abs=1e-12
            )
