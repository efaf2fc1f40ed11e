"""Independent reference computations used by the tests.

These deliberately avoid the library's code paths: plain Python loops, exact
integer arithmetic and generic linear algebra.
"""

import itertools
import math

import numpy as np


def window_counts(x, length, span):
    counts = {}
    for k in range(span):
        w = tuple(int(v) for v in x[k : k + length])
        counts[w] = counts.get(w, 0) + 1
    return counts


def dense_defect(x, N, s):
    """Exact ``D_n^(N)`` as a Python integer, enumerating all s**(N+2) tuples."""
    n = len(x)
    if N == 0:
        return n
    if N >= n:
        return 0
    span = n - N
    short = window_counts(x, N, span)
    long_ = window_counts(x, N + 1, span)
    total = 0
    for i in range(s):
        for j in range(s):
            for w in itertools.product(range(s), repeat=N):
                head = w[:-1]
                delta = short.get((i, *head), 0) * long_.get((j, *w), 0) - short.get(
                    (j, *head), 0
                ) * long_.get((i, *w), 0)
                total += abs(delta) ** N
    return total


def exact_log(value):
    """``(log value, is_zero)`` for a nonnegative Python integer."""
    return (-math.inf, True) if value == 0 else (math.log(value), False)


def full_matrix(tensor):
    """Dense flattening by direct word comparison."""
    s, N = tensor.alphabet_size, tensor.order
    words = list(itertools.product(range(s), repeat=N))
    idx = {w: k for k, w in enumerate(words)}
    P = np.zeros((len(words), len(words)))
    for u in words:
        for j in range(s):
            P[idx[u], idx[u[1:] + (j,)]] = tensor.rows[idx[u], j]
    return P


def eig_stationary(P):
    """Left Perron vector via a general eigendecomposition."""
    vals, vecs = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, k])
    return v / v.sum()


def brute_cylinder(kernels, word):
    """Cylinder probability straight from the product definition."""
    N = len(kernels) - 1
    s = kernels[0].alphabet_size
    p = 1.0
    for k, x in enumerate(word):
        order = min(k, N)
        ctx = word[k - order : k]
        code = 0
        for v in ctx:
            code = code * s + v
        p *= kernels[order].rows[code, x]
    return p


def random_rows(rng, s, N, concentration=1.0):
    return rng.dirichlet(np.full(s, concentration), size=s**N)


def batch_chisquare(codes, probs, batches=50):
    """Goodness-of-fit p-value for window frequencies of a dependent sequence.

    Overlapping windows of a Markov chain are correlated, so Pearson's
    statistic (which assumes independent draws) is far too liberal for slowly
    mixing chains.  Here the covariance of the frequency vector is estimated
    from ``batches`` contiguous batch means and the Hotelling form of the
    Wald statistic is referred to its F law.
    """
    from scipy import stats

    k = len(probs)
    usable = len(codes) - len(codes) % batches
    blocks = np.asarray(codes[:usable]).reshape(batches, -1)
    freqs = np.stack([np.bincount(b, minlength=k) / b.size for b in blocks])[:, :-1]
    diff = freqs.mean(axis=0) - np.asarray(probs)[:-1]
    cov = np.atleast_2d(np.cov(freqs, rowvar=False)) / batches
    d = np.linalg.matrix_rank(cov)
    t2 = float(diff @ np.linalg.pinv(cov) @ diff)
    f = t2 * (batches - d) / (d * (batches - 1))
    return float(stats.f.sf(f, d, batches - d))
