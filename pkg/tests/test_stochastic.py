from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdcap.instances import counterexample_3a
from crowdcap.stochastic import (STREAM_ARRIVALS, STREAM_AVAILABILITY, DistributionSpec, draw, epoch_rng, mean_of,
                                 sample_arrivals, sample_availability, sample_epoch, scale_distribution, to_fraction)

from helpers import scenario


def test_mean_of_poisson_binomial_and_vector_categorical():
    assert mean_of(DistributionSpec.poisson(4)) == 4
    assert mean_of(DistributionSpec.binomial(10, "0.3")) == 3
    cat = DistributionSpec.categorical([(0, 10), (10, 0)], ["1/2", "1/2"])
    assert mean_of(cat) == (5, 5)


def test_mean_of_is_exact_rational():
    d = DistributionSpec.categorical([0, 1, 2], ["1/3", "1/3", "1/3"])
    assert mean_of(d) == Fraction(1)
    assert isinstance(mean_of(DistributionSpec.poisson("7/3")), Fraction)


def test_to_fraction_reads_decimal_floats_exactly():
    assert to_fraction(0.1) == Fraction(1, 10)
    assert to_fraction("3/4") == Fraction(3, 4)
    with pytest.raises(TypeError):
        to_fraction(True)


def test_constant_arrivals_every_epoch():
    s = scenario([(1,)], [(0, (1,))], arrivals=[4])
    assert all(sample_arrivals(s, t, 0).tolist() == [4] for t in range(50))


def test_counterexample_availability_is_one_of_two_vectors_half_the_time():
    s = counterexample_3a()
    draws = np.array([sample_availability(s, t, 0) for t in range(10_000)])
    assert {tuple(d) for d in draws} == {(0, 10), (10, 0)}
    assert abs((draws[:, 0] == 10).mean() - 0.5) <= 0.02


def test_poisson_sample_mean():
    rng = np.random.default_rng(3)
    x = draw(DistributionSpec.poisson(4), rng, 100_000)
    assert abs(x.mean() - 4) <= 0.05


@pytest.mark.parametrize("d", [
    DistributionSpec.poisson(4),
    DistributionSpec.poisson(45),
    DistributionSpec.binomial(12, "1/3"),
    DistributionSpec.categorical([1, 3, 8], ["1/2", "1/4", "1/4"]),
])
def test_empirical_mean_within_five_standard_errors(d):
    x = draw(d, epoch_rng(11, 0, STREAM_ARRIVALS), 100_000).astype(float)
    se = x.std() / np.sqrt(len(x))
    assert abs(x.mean() - float(mean_of(d))) <= 5 * se


def test_categorical_samples_stay_in_support():
    d = DistributionSpec.categorical([(1, 2), (3, 0)], ["0.3", "0.7"])
    x = draw(d, np.random.default_rng(0), 500)
    assert {tuple(r) for r in x} <= {(1, 2), (3, 0)}


def test_same_seed_and_epoch_give_identical_draws():
    s = scenario([(1,), (2,)], [(0, (3,))], arrivals=[DistributionSpec.poisson(5), DistributionSpec.poisson(2)],
                 avail=[DistributionSpec.binomial(9, "1/2")])
    a = sample_epoch(s, 17, 99)
    b = sample_epoch(s, 17, 99)
    assert a.arrivals.tolist() == b.arrivals.tolist()
    assert a.availability.tolist() == b.availability.tolist()
    other = [sample_arrivals(s, t, 99).tolist() for t in range(20)]
    assert len({tuple(x) for x in other}) > 1


def test_epoch_rng_streams_are_independent_of_call_order():
    first = epoch_rng(5, 3, STREAM_ARRIVALS).integers(0, 1 << 30, 4).tolist()
    epoch_rng(5, 3, STREAM_AVAILABILITY).integers(0, 1 << 30, 4)
    epoch_rng(5, 8, STREAM_ARRIVALS).integers(0, 1 << 30, 4)
    assert epoch_rng(5, 3, STREAM_ARRIVALS).integers(0, 1 << 30, 4).tolist() == first
    assert epoch_rng(6, 3, STREAM_ARRIVALS).integers(0, 1 << 30, 4).tolist() != first


def test_mixed_kind_arrivals_use_per_law_draws():
    s = scenario([(1,), (1,)], [(0, (1,))], arrivals=[3, DistributionSpec.poisson(2)])
    x = np.array([sample_arrivals(s, t, 1) for t in range(2000)])
    assert (x[:, 0] == 3).all()
    assert abs(x[:, 1].mean() - 2) < 0.2


def test_scale_distribution_scales_means():
    assert mean_of(scale_distribution(DistributionSpec.poisson(4), "3/2")) == 6
    assert mean_of(scale_distribution(DistributionSpec.constant(4), "1/2")) == 2


@pytest.mark.parametrize("d,msg", [
    (DistributionSpec.poisson(-1), "poisson mean"),
    (DistributionSpec.binomial(3, "1.5"), "binomial p"),
    (DistributionSpec.categorical([1, 2], ["0.5", "0.4"]), "sum to 1"),
    (DistributionSpec("weird"), "unknown distribution kind"),
])
def test_violations_name_the_problem(d, msg):
    assert any(msg in v for v in d.violations("x"))


@given(st.sampled_from(["constant", "poisson", "binomial", "categorical"]), st.integers(0, 20),
       st.fractions(0, 1, max_denominator=20))
def test_distribution_json_round_trip(kind, k, p):
    d = {
        "constant": DistributionSpec.constant(k),
        "poisson": DistributionSpec.poisson(Fraction(k, 3)),
        "binomial": DistributionSpec.binomial(k, p),
        "categorical": DistributionSpec.categorical([(k, 0), (0, k + 1)], [p, 1 - p]),
    }[kind]
    assert DistributionSpec.from_dict(d.to_dict()) == d


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6))
def test_samples_are_never_negative(seed, epoch):
    s = scenario([(1,), (2,)], [(0, (3,)), (0, (1,))],
                 arrivals=[DistributionSpec.poisson(5), DistributionSpec.binomial(4, "0.5")],
                 avail=[DistributionSpec.poisson(2), DistributionSpec.categorical([0, 7], ["0.5", "0.5"])])
    e = sample_epoch(s, epoch, seed)
    assert (e.arrivals >= 0).all() and (e.availability >= 0).all()
