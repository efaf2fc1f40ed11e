import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergodikit import ValidationError
from ergodikit.empirical import (
    count_grams,
    empirical_measure,
    estimate_tensor,
    symmetry_defect_term,
    symmetry_defect_total,
)
from ergodikit.projection import kernel_sequence
from ergodikit.sampler import Trajectory, sample_trajectory
from ergodikit.tensors import make_tensor
from oracles import dense_defect, exact_log, random_rows, window_counts

ALT = [0, 1, 0, 1, 0, 1]


def test_count_grams_examples():
    assert count_grams([0, 1, 0, 1, 0], 2, 4).as_dict() == {(0, 1): 2, (1, 0): 2}
    assert count_grams([0, 0, 0, 0], 3, 2).as_dict() == {(0, 0, 0): 2}


def test_count_grams_span_errors():
    with pytest.raises(ValidationError):
        count_grams([0, 1, 0], 2, 3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=60), st.integers(0, 4))
def test_count_grams_against_loop(x, L):
    if L > len(x):
        return
    span = len(x) - L + 1
    table = count_grams(Trajectory(np.array(x), 3), L)
    assert table.total == span
    assert table.as_dict() == window_counts(x, L, span)
    assert all(len(w) == L for w, _ in table.items())


def test_gram_csv(tmp_path):
    count_grams([0, 1, 0, 1, 0], 2, 4).to_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines() == ["word,count", "01,2", "10,2"]


def test_empirical_measure_examples():
    assert empirical_measure([0, 1, 0, 1, 0], 1) == {(0, 1): 0.5, (1, 0): 0.5}
    x = [0, 1, 1, 2, 1]
    assert empirical_measure(x, 0) == {(0,): 0.2, (1,): 0.6, (2,): 0.2}
    with pytest.raises(ValidationError):
        empirical_measure([0, 1], 2)


def test_empirical_measure_total(rng):
    x = rng.integers(0, 3, 1000)
    for N in range(4):
        assert sum(empirical_measure(x, N).values()) == pytest.approx(1.0, abs=1e-15)


def test_estimate_tensor_examples():
    est = estimate_tensor(ALT, 1)
    assert est.row([0])[1] == 1.0 and est.row([1])[0] == 1.0
    const = estimate_tensor([0] * 8, 1)
    assert const.row([0])[0] == 1.0 and const.row([1]) is None


def test_estimate_tensor_rows_at_most_one(rng):
    x = rng.integers(0, 2, 300)
    est = estimate_tensor(x, 3)
    sums = est.rows[est.observed].sum(axis=1)
    assert np.all(sums <= 1.0)
    # only the context ending the truncated span can fall short
    assert np.sum(sums < 1.0) <= 1


def test_estimate_tensor_consistency():
    truth = make_tensor(1, [[0.8, 0.2], [0.35, 0.65]], 2)
    traj = sample_trajectory(kernel_sequence(truth), 100_000, 3)
    assert estimate_tensor(traj, 1).max_error(truth) < 0.02


def test_defect_term_examples():
    assert symmetry_defect_term(ALT, 1, 0, 1, [1]).value == 6.0
    for i, w in itertools.product(range(2), range(2)):
        assert symmetry_defect_term(ALT, 1, i, i, [w]).zero
    for i, j, w in itertools.product(range(2), range(2), range(2)):
        assert symmetry_defect_term([0] * 7, 1, i, j, [w]).zero


def test_defect_total_examples():
    assert symmetry_defect_total(ALT, 1).value == pytest.approx(24, rel=1e-14)
    assert symmetry_defect_total(list(range(2)) * 30, 0).value == pytest.approx(60)
    for n in (1, 6, 50):
        assert symmetry_defect_total([0] * n, 0).value == pytest.approx(n)
    assert symmetry_defect_total(ALT, 6).zero and symmetry_defect_total(ALT, 9).zero


def test_defect_term_antisymmetry(rng):
    x = rng.integers(0, 3, 200)
    for N in (1, 2):
        for i, j in itertools.combinations(range(3), 2):
            for w in itertools.product(range(3), repeat=N):
                assert symmetry_defect_term(x, N, i, j, w) == symmetry_defect_term(x, N, j, i, w)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_defect_matches_dense_oracle(rng, N):
    for _ in range(15):
        n = int(rng.integers(N + 1, 200))
        x = rng.integers(0, 2, n).tolist()
        got = symmetry_defect_total(x, N)
        log_exact, zero = exact_log(dense_defect(x, N, 2))
        assert got.zero == zero
        if not zero:
            assert got.log_total == pytest.approx(log_exact, abs=1e-12)


def test_defect_oracle_on_ternary(rng):
    x = rng.integers(0, 3, 120).tolist()
    for N in (1, 2):
        assert symmetry_defect_total(x, N).log_total == pytest.approx(exact_log(dense_defect(x, N, 3))[0], abs=1e-12)


def test_defect_relabel_invariance(rng):
    x = rng.integers(0, 3, 400)
    for N in (1, 2, 3):
        base = symmetry_defect_total(x, N).log_total
        for perm in itertools.permutations(range(3)):
            y = np.asarray(perm)[x]
            assert symmetry_defect_total(y, N).log_total == pytest.approx(base, abs=1e-12)


def test_no_overflow_at_large_n():
    x = np.random.default_rng(0).integers(0, 2, 1_000_000)
    for N in range(9):
        d = symmetry_defect_total(x, N)
        assert math.isfinite(d.log_total) and not d.zero


def test_order_detection_direction():
    hits = 0
    for seed in range(20):
        rows = random_rows(np.random.default_rng(seed), 2, 1, concentration=2.0)
        traj = sample_trajectory(kernel_sequence(make_tensor(1, rows, 2)), 100_000, seed)
        d1 = symmetry_defect_total(traj, 1).scaled_log(2, 100_000)
        d2 = symmetry_defect_total(traj, 2).scaled_log(4, 100_000)
        hits += d1 > d2 + math.log(10)
    assert hits >= 18
