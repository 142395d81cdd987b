from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdcap.admission import AdmissionConfig, admit, beta_coefficient, compute_beta, static_benchmark_beta
from crowdcap.instances import intro_two_category, symmetric_pools

from helpers import scenario

NEEDS = np.array([[True]])


def test_empty_queues_accept_everything():
    cfg = AdmissionConfig(Fraction(1, 10))
    assert compute_beta([10], np.zeros((1, 1, 1)), NEEDS, cfg) == 0


def test_large_weighted_backlog_declines():
    # sum A = 10, sum Q*A = 200 over needed pairs, nu = 0.1 -> c = 10 - 20
    cfg = AdmissionConfig(Fraction(1, 10))
    q = np.array([[[20]]])
    assert beta_coefficient([10], q, NEEDS, cfg) == -10
    assert compute_beta([10], q, NEEDS, cfg) == 1


def test_tie_accepts():
    cfg = AdmissionConfig(Fraction(1, 10))
    q = np.array([[[10]]])
    assert beta_coefficient([10], q, NEEDS, cfg) == 0
    assert compute_beta([10], q, NEEDS, cfg) == 0


def test_unneeded_skills_do_not_count():
    cfg = AdmissionConfig(Fraction(1))
    q = np.array([[[0, 50]]])
    assert compute_beta([1], q, np.array([[True, False]]), cfg) == 0


def test_variant_two_uses_smallest_feasible_pool():
    cfg = AdmissionConfig(Fraction(1, 10), "II")
    q = np.array([[[30], [0]], [[5], [40]]])
    adj = intro_two_category().adjacency
    # type 0: min(30, 5) = 5; type 1 only pool 1: 40
    assert beta_coefficient([2, 1], q, np.array([[True], [True]]), cfg, adj) == 3 - Fraction(1, 10) * (5 * 2 + 40)
    with pytest.raises(ValueError):
        beta_coefficient([2, 1], q, np.array([[True], [True]]), AdmissionConfig(Fraction(1, 10)))


@given(st.lists(st.integers(0, 20), min_size=1, max_size=4), st.data(), st.integers(2, 10))
def test_scaling_backlog_up_never_turns_decline_into_accept(A, data, k):
    N = len(A)
    q = np.array([[[data.draw(st.integers(0, 30))] for _ in range(N)]])
    needs = np.ones((N, 1), dtype=bool)
    cfg = AdmissionConfig(data.draw(st.fractions(Fraction(1, 1000), 1, max_denominator=1000)))
    if compute_beta(A, q, needs, cfg) == 1:
        assert compute_beta(A, q * k, needs, cfg) == 1


def test_admit_identity_and_full_decline():
    A = np.array([3, 0, 7])
    assert admit(A, 0).tolist() == [3, 0, 7]
    assert admit(A, 1).tolist() == [0, 0, 0]


def test_admit_fractional_beta_concentrates():
    rng = np.random.default_rng(2)
    kept = [int(admit([1000], 0.5, rng)[0]) for _ in range(200)]
    assert all(abs(k - 500) <= 50 for k in kept)
    with pytest.raises(ValueError):
        admit([10], 0.5)


def test_config_parsing():
    assert AdmissionConfig.parse("nu=0.01,variant=II") == AdmissionConfig(Fraction(1, 100), "II")
    assert AdmissionConfig.parse("nu=1/8").variant == "I"
    for bad in ("variant=I", "nu=0", "nu=0.1,variant=III", "nu=0.1,foo=1", "nu"):
        with pytest.raises(ValueError):
            AdmissionConfig.parse(bad)


def _single_skill(lam, hours, n_agents):
    return scenario([(1,)], [(0, (hours,))], arrivals=[lam], avail=[n_agents])


def test_benchmark_zero_inside_region():
    assert static_benchmark_beta([5], _single_skill(5, 1, 10), Fraction(1, 10**6)).beta == 0


def test_benchmark_one_third_at_one_and_a_half_times_capacity():
    s = _single_skill(15, 1, 10)
    res = static_benchmark_beta([15], s, Fraction(1, 10**9))
    assert res.status == "ok"
    assert res.beta == pytest.approx(1 / 3, abs=2e-6)


def test_benchmark_infeasible_when_epsilon_dominates():
    res = static_benchmark_beta([15], _single_skill(15, 1, 10), 11)
    assert res.status == "infeasible" and res.beta is None


def test_benchmark_zero_load():
    assert static_benchmark_beta([0], _single_skill(0, 1, 10), Fraction(1, 100)).status == "zero_load"


def test_benchmark_inflexible_uses_pool_decomposition():
    s = symmetric_pools(L=2, N=2, S=2, cls="IND", load=Fraction(3, 2))
    res = static_benchmark_beta(s.arrival_means(), s, Fraction(1, 10**9))
    assert res.beta == pytest.approx(1 / 3, abs=2e-6)
