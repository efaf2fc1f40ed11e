"""Cylinder probabilities of the measure built from a kernel sequence."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .projection import KernelSequence
from .tensors import decode_context

LOG_SPACE_THRESHOLD = 64
# enumeration cost is s**(depth+1); depth 12 for binary
MAX_ENUMERATED_WORDS = 2**12


def cylinder_probability(seq: KernelSequence, word: Sequence[int], log: bool = False) -> float:
    """Probability of the cylinder ``[x_1, ..., x_m]``.

    The first ``N+1`` symbols use ``kappa_0, ..., kappa_N`` in turn, later
    symbols reuse the top kernel on a rolling length-``N`` context.  Words
    longer than 64 symbols are accumulated in log space; ``log=True``
    returns the log-probability.
    """
    s, N = seq.alphabet_size, seq.top_order
    word = [int(x) for x in word]
    for x in word:
        if not 0 <= x < s:
            raise ValidationError(f"symbol {x} out of range for alphabet of size {s}")
    use_log = log or len(word) > LOG_SPACE_THRESHOLD
    acc = 0.0 if use_log else 1.0
    ctx = 0
    for k, x in enumerate(word):
        order = min(k, N)
        p = seq.kernels[order].rows[ctx, x]
        if use_log:
            acc += math.log(p) if p > 0 else -math.inf
        else:
            acc *= p
        ctx = ctx * s + x
        if k >= N:
            ctx %= s**N
    if log:
        return acc
    return math.exp(acc) if use_log else acc


def cylinder_table(seq: KernelSequence, length: int) -> np.ndarray:
    """Probabilities of all ``s**length`` cylinders, in encoded-word order."""
    s, N = seq.alphabet_size, seq.top_order
    q = np.ones(1)
    for k in range(length):
        order = min(k, N)
        ctx = np.arange(s**k) % (s**order)
        q = (q[:, None] * seq.kernels[order].rows[ctx]).ravel()
    return q


def stationarity_defect(seq: KernelSequence, depth: int) -> tuple[float, tuple[int, ...]]:
    """Largest violation of the cylinder symmetry and the word attaining it.

    Checks ``|sum_j Q([j, t]) - Q([t])|`` and ``|sum_j Q([t, j]) - Q([t])|``
    for every word ``t`` of length at most ``depth``.
    """
    if depth < 0:
        raise ValidationError("depth must be nonnegative")
    s = seq.alphabet_size
    if depth == 0:
        return 0.0, ()
    if s**depth > MAX_ENUMERATED_WORDS:
        raise ValidationError(
            f"depth {depth} needs {s ** (depth + 1)} cylinders; limit is s**depth <= {MAX_ENUMERATED_WORDS}"
        )
    worst, worst_word = 0.0, ()
    q = cylinder_table(seq, 0)
    for length in range(depth + 1):
        q_next = cylinder_table(seq, length + 1)
        right = np.abs(q_next.reshape(s**length, s).sum(axis=1) - q)
        left = np.abs(q_next.reshape(s, s**length).sum(axis=0) - q)
        gap = np.maximum(left, right)
        i = int(np.argmax(gap))
        if gap[i] > worst:
            worst, worst_word = float(gap[i]), decode_context(i, length, s)
        q = q_next
    return worst, worst_word


def stationarity_residual(seq: KernelSequence, depth: int) -> float:
    return stationarity_defect(seq, depth)[0]
