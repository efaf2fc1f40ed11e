import itertools

import numpy as np
import pytest
from scipy import stats

from ergodikit import ValidationError
from ergodikit.measure import cylinder_table
from ergodikit.projection import KernelSequence, kernel_sequence
from ergodikit.sampler import (
    DirichletTensorPrior,
    OrderDistribution,
    Trajectory,
    format_trajectory,
    make_rng,
    parse_trajectory,
    read_trajectory,
    sample_order,
    sample_scheme,
    sample_tensor,
    sample_trajectory,
    write_trajectory,
)
from ergodikit.tensors import iid_tensor, make_tensor
from oracles import batch_chisquare, random_rows


def gram_chisquare(traj, seq, length):
    """p-value of the observed ``length``-gram frequencies against cylinder probabilities."""
    s = seq.alphabet_size
    x = traj.symbols
    codes = np.zeros(x.size - length + 1, dtype=np.int64)
    for i in range(length):
        codes = codes * s + x[i : i + codes.size]
    return batch_chisquare(codes, cylinder_table(seq, length))


def test_point_mass_order():
    nu = OrderDistribution.point_mass(2, 5)
    assert all(sample_order(nu, seed) == 2 for seed in range(200))


def test_order_frequencies():
    rng = make_rng(11)
    draws = [sample_order(OrderDistribution(np.array([0.5, 0.5])), rng) for _ in range(100_000)]
    assert np.mean(np.asarray(draws) == 0) == pytest.approx(0.5, abs=0.01)


def test_order_weights_normalized():
    nu = OrderDistribution(np.array([2.0, 1.0, 1.0]))
    np.testing.assert_allclose(nu.probabilities, [0.5, 0.25, 0.25])
    rng = make_rng(3)
    freq = np.bincount([sample_order(nu, rng) for _ in range(40_000)], minlength=3) / 40_000
    np.testing.assert_allclose(freq, [0.5, 0.25, 0.25], atol=0.01)


def test_order_distribution_rejects_zero_mass():
    with pytest.raises(ValidationError):
        OrderDistribution(np.zeros(3))
    with pytest.raises(ValidationError):
        OrderDistribution(np.array([1.0, -0.5]))


@pytest.mark.parametrize("alpha, mean", [((1.0, 1.0), 0.5), ((2.0, 1.0), 2 / 3)])
def test_dirichlet_first_coordinate_mean(alpha, mean):
    # one order-13 prior has 8192 independent rows
    prior = DirichletTensorPrior(2, 13, np.tile(alpha, (2**13, 1)))
    t = sample_tensor(prior, 5)
    assert t.positive
    assert t.rows[:, 0].mean() == pytest.approx(mean, abs=0.02)


def test_dirichlet_concentration():
    t = sample_tensor(DirichletTensorPrior.symmetric(3, 2, 1e6), 1)
    np.testing.assert_allclose(t.rows, 0.5, atol=0.01)


def test_small_alpha_stays_positive_and_normalized():
    t = sample_tensor(DirichletTensorPrior.symmetric(4, 3, 0.05), 9)
    assert t.positive
    assert np.max(np.abs(t.rows.sum(axis=1) - 1)) < 1e-12


def test_dirichlet_variance():
    prior = DirichletTensorPrior(3, 8, np.tile((0.5, 1.5, 2.0), (3**8, 1)))
    rows = sample_tensor(prior, 21).rows
    a0 = 4.0
    expected = (0.5 / a0) * (1 - 0.5 / a0) / (a0 + 1)
    assert rows[:, 0].var() == pytest.approx(expected, rel=0.1)


def test_prior_validation():
    with pytest.raises(ValidationError):
        DirichletTensorPrior(2, 1, np.array([[1.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(ValidationError):
        DirichletTensorPrior(2, 1, np.ones((3, 2)))


def test_determinism_and_stream_independence(rng):
    seq = kernel_sequence(make_tensor(2, random_rows(rng, 2, 2), 2))
    a = sample_trajectory(seq, 500, 42)
    b = sample_trajectory(seq, 500, 42)
    np.testing.assert_array_equal(a.symbols, b.symbols)
    assert not np.array_equal(a.symbols, sample_trajectory(seq, 500, 43).symbols)
    prior = DirichletTensorPrior.symmetric(2, 2)
    assert sample_tensor(prior, 4).equals(sample_tensor(prior, 4))
    r1 = sample_scheme(OrderDistribution.uniform(3), 1.0, 2, 100, 8)
    r2 = sample_scheme(OrderDistribution.uniform(3), 1.0, 2, 100, 8)
    assert r1[0] == r2[0] and r1[1].equals(r2[1])
    np.testing.assert_array_equal(r1[3].symbols, r2[3].symbols)


def test_single_symbol_follows_initial_law():
    seq = kernel_sequence(make_tensor(0, [0.3, 0.7], 2))
    ones = sum(int(sample_trajectory(seq, 1, seed).symbols[0]) for seed in range(100_000))
    assert ones / 100_000 == pytest.approx(0.7, abs=0.01)


def test_first_symbol_of_order_two_sequence(rng):
    seq = kernel_sequence(make_tensor(2, random_rows(rng, 2, 2), 2))
    firsts = [int(sample_trajectory(seq, 3, seed).symbols[0]) for seed in range(30_000)]
    assert np.mean(firsts) == pytest.approx(seq[0].rows[0, 1], abs=0.01)


def test_iid_bigrams_independent():
    q = [0.2, 0.5, 0.3]
    seq = KernelSequence([iid_tensor(0, q, 3), iid_tensor(1, q, 3)])
    x = sample_trajectory(seq, 50_000, 1).symbols
    table = np.zeros((3, 3))
    np.add.at(table, (x[:-1], x[1:]), 1)
    assert stats.chi2_contingency(table).pvalue > 0.001


@pytest.mark.parametrize("N", [0, 1, 2, 3])
def test_gram_frequencies_match_cylinders(rng, N):
    seq = kernel_sequence(make_tensor(N, random_rows(rng, 2, N), 2))
    traj = sample_trajectory(seq, 100_000, 17 + N)
    assert gram_chisquare(traj, seq, N + 1) > 0.001


def test_marginal_stationarity(rng):
    seq = kernel_sequence(make_tensor(3, random_rows(rng, 2, 3), 2))
    x = sample_trajectory(seq, 100_000, 5).symbols
    blocks = x.reshape(10, -1)
    table = np.stack([np.bincount(b, minlength=2) for b in blocks])
    assert stats.chi2_contingency(table).pvalue > 0.001
    # the very first symbols are already stationary: no burn-in
    firsts = np.array([sample_trajectory(seq, 4, seed).symbols for seed in range(20_000)])
    for k in range(4):
        assert firsts[:, k].mean() == pytest.approx(seq[0].rows[0, 1], abs=0.015)


def test_scheme_mixture_matches_prior_integral():
    # average bigram law under (order point mass 1, Dir(1,1) rows) vs Monte-Carlo over tensors
    nu = OrderDistribution.point_mass(1)
    mc = np.zeros(4)
    counts = np.zeros(4)
    for seed in range(400):
        order, tensor, seq, traj = sample_scheme(nu, 1.0, 2, 200, seed)
        x = traj.symbols
        counts += np.bincount(x[:-1] * 2 + x[1:], minlength=4)
        mc += cylinder_table(seq, 2)
    np.testing.assert_allclose(counts / counts.sum(), mc / mc.sum(), atol=0.02)


def test_trajectory_validation():
    with pytest.raises(ValidationError):
        Trajectory(np.array([0, 2]), 2)
    seq = kernel_sequence(make_tensor(0, [0.5, 0.5], 2))
    with pytest.raises(ValidationError):
        sample_trajectory(seq, 0, 1)


def test_trajectory_file_format(tmp_path):
    t = Trajectory(np.array([0, 1, 1, 0, 1]), 2)
    assert format_trajectory(t) == "#alphabet=2\n01101\n"
    path = tmp_path / "x.txt"
    write_trajectory(t, path, comments=["seed=3"])
    back = read_trajectory(path)
    np.testing.assert_array_equal(back.symbols, t.symbols)
    wide = Trajectory(np.array([11, 0, 3]), 12)
    assert format_trajectory(wide, header=False) == "11,0,3\n"
    np.testing.assert_array_equal(parse_trajectory("11,0,3\n", 12).symbols, [11, 0, 3])


def test_trajectory_file_errors():
    with pytest.raises(ValidationError, match="alphabet"):
        parse_trajectory("0101\n")
    with pytest.raises(ValidationError, match="mismatch"):
        parse_trajectory("#alphabet=3\n012\n", 2)
    with pytest.raises(ValidationError, match="empty"):
        parse_trajectory("#alphabet=2\n")
    with pytest.raises(ValidationError):
        parse_trajectory("#alphabet=2\n0121\n")
