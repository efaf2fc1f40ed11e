"""Window counts, empirical measures and symmetry defects of a trajectory.

Gram counts are kept sparse: a :class:`GramTable` maps the encoded word of
each observed window to its count.  The symmetry defect ``D_n^(N)``
compares, for every pair of symbols ``i, j`` and every length-``N`` word
``w``, the cross products

    c_N(i, w[:-1]) * c_{N+1}(j, w)  vs.  c_N(j, w[:-1]) * c_{N+1}(i, w)

where both count tables run over the same ``n - N`` windows.  The absolute
difference is raised to the power ``N`` and summed; everything after the
exact integer difference happens in log space.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .errors import ValidationError
from .sampler import Trajectory
from .tensors import decode_context, encode_context

# c_N * c_{N+1} <= n**2 must stay below 2**63
MAX_LENGTH = 2**31 - 1

TrajectoryLike = Union[Trajectory, Sequence[int], np.ndarray]


def _unpack(X: TrajectoryLike, alphabet_size: int | None = None) -> tuple[np.ndarray, int]:
    if isinstance(X, Trajectory):
        if alphabet_size is not None and alphabet_size != X.alphabet_size:
            raise ValidationError("alphabet size disagrees with the trajectory")
        return X.symbols, X.alphabet_size
    x = np.asarray(X, dtype=np.int64).ravel()
    if alphabet_size is None:
        alphabet_size = max(2, int(x.max()) + 1 if x.size else 2)
    return Trajectory(x, alphabet_size).symbols, alphabet_size


@dataclass(frozen=True, eq=False)
class GramTable:
    """Counts of length-``length`` windows starting at positions ``1..span``."""

    alphabet_size: int
    length: int
    span: int
    codes: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    def __getitem__(self, word) -> int:
        code = word if isinstance(word, (int, np.integer)) else encode_context(word, self.alphabet_size)
        i = np.searchsorted(self.codes, code)
        if i < self.codes.size and self.codes[i] == code:
            return int(self.counts[i])
        return 0

    def __len__(self) -> int:
        return self.codes.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def items(self) -> Iterator[tuple[tuple[int, ...], int]]:
        for code, count in zip(self.codes.tolist(), self.counts.tolist()):
            yield decode_context(code, self.length, self.alphabet_size), count

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return dict(self.items())

    def lookup(self, codes: np.ndarray) -> np.ndarray:
        """Vectorized counts for an array of encoded words (0 if unseen)."""
        idx = np.searchsorted(self.codes, codes)
        idx = np.minimum(idx, max(self.codes.size - 1, 0))
        if self.codes.size == 0:
            return np.zeros_like(codes)
        hit = self.codes[idx] == codes
        return np.where(hit, self.counts[idx], 0)

    def word_string(self, code: int) -> str:
        word = decode_context(code, self.length, self.alphabet_size)
        sep = "" if self.alphabet_size <= 10 else "."
        return sep.join(map(str, word))

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["word", "count"])
            for code, count in zip(self.codes.tolist(), self.counts.tolist()):
                w.writerow([self.word_string(code), count])


def _window_codes(x: np.ndarray, s: int, length: int, span: int) -> np.ndarray:
    codes = np.zeros(span, dtype=np.int64)
    for i in range(length):
        codes = codes * s + x[i : i + span]
    return codes


def count_grams(X: TrajectoryLike, gram_length: int, window_span: int | None = None,
                alphabet_size: int | None = None) -> GramTable:
    """Count the words ``X[k:k+L]`` for ``k = 1..window_span``.

    ``window_span`` defaults to ``n - L + 1`` (every window).  It is a
    parameter because the defect statistics count ``N``-grams and
    ``(N+1)``-grams over the same ``n - N`` starting positions.
    """
    x, s = _unpack(X, alphabet_size)
    n = x.size
    if window_span is None:
        window_span = n - gram_length + 1
    if gram_length < 0 or window_span < 0:
        raise ValidationError("gram length and span must be nonnegative")
    if window_span + gram_length - 1 > n:
        raise ValidationError(
            f"span {window_span} of {gram_length}-grams exceeds trajectory length {n}"
        )
    if s**gram_length >= 2**62:
        raise ValidationError("gram length too large for 64-bit word codes")
    codes, counts = np.unique(_window_codes(x, s, gram_length, window_span), return_counts=True)
    return GramTable(s, gram_length, window_span, codes, counts.astype(np.int64))


def empirical_measure(X: TrajectoryLike, N: int) -> dict[tuple[int, ...], float]:
    """Relative frequencies of ``(N+1)``-grams over ``n - N`` windows."""
    x, s = _unpack(X)
    n = x.size
    if n <= N:
        raise ValidationError(f"need n > N, got n={n}, N={N}")
    table = count_grams(x, N + 1, n - N, s)
    return {word: c / (n - N) for word, c in table.items()}


@dataclass(frozen=True, eq=False)
class TensorEstimate:
    """Plug-in transition estimates; rows of unseen contexts are NaN."""

    alphabet_size: int
    order: int
    rows: np.ndarray = field(repr=False)
    observed: np.ndarray = field(repr=False)

    def row(self, context: Sequence[int]) -> np.ndarray | None:
        c = encode_context(context, self.alphabet_size)
        return self.rows[c] if self.observed[c] else None

    def max_error(self, truth) -> float:
        """Sup-norm error against a tensor over the observed contexts."""
        return float(np.max(np.abs(self.rows[self.observed] - truth.rows[self.observed])))


def estimate_tensor(X: TrajectoryLike, N: int) -> TensorEstimate:
    """Ratio of ``(N+1)``-gram to ``N``-gram counts, both over ``n - N`` windows."""
    x, s = _unpack(X)
    n = x.size
    if n <= N:
        raise ValidationError(f"need n > N, got n={n}, N={N}")
    span = n - N
    num = np.zeros(s ** (N + 1))
    top = count_grams(x, N + 1, span, s)
    num[top.codes] = top.counts
    den = np.zeros(s**N)
    ctx = count_grams(x, N, span, s)
    den[ctx.codes] = ctx.counts
    observed = den > 0
    rows = np.full((s**N, s), np.nan)
    rows[observed] = num.reshape(s**N, s)[observed] / den[observed, None]
    return TensorEstimate(s, N, rows, observed)


class LogValue(NamedTuple):
    """Nonnegative number stored as its logarithm plus an exact-zero flag."""

    log: float
    zero: bool

    @property
    def value(self) -> float:
        return 0.0 if self.zero else math.exp(self.log)


@dataclass(frozen=True)
class SymmetryDefect:
    order: int
    log_total: float
    zero: bool

    @property
    def value(self) -> float:
        return 0.0 if self.zero else math.exp(self.log_total)

    def scaled_log(self, power: float, n: int) -> float:
        """``log(D / n**power)``; ``-inf`` when ``D`` is zero."""
        return -math.inf if self.zero else self.log_total - power * math.log(n)


def _defect_tables(x: np.ndarray, s: int, N: int) -> tuple[GramTable, GramTable]:
    span = x.size - N
    return count_grams(x, N, span, s), count_grams(x, N + 1, span, s)


def symmetry_defect_term(X: TrajectoryLike, N: int, i: int, j: int, word: Sequence[int]) -> LogValue:
    """One summand ``|c_N(i,w') c_{N+1}(j,w) - c_N(j,w') c_{N+1}(i,w)|**N``.

    ``w`` is a word of length ``N`` and ``w'`` drops its last symbol.
    """
    x, s = _unpack(X)
    n = x.size
    if N < 1 or n <= N:
        raise ValidationError(f"defect terms need 1 <= N < n, got N={N}, n={n}")
    word = tuple(int(v) for v in word)
    if len(word) != N:
        raise ValidationError(f"word must have length {N}")
    short, long_ = _defect_tables(x, s, N)
    head = word[:-1]
    delta = short[(i, *head)] * long_[(j, *word)] - short[(j, *head)] * long_[(i, *word)]
    if delta == 0:
        return LogValue(-math.inf, True)
    return LogValue(N * math.log(abs(delta)), False)


def _defect_logs(x: np.ndarray, s: int, N: int) -> np.ndarray:
    """Log of every nonzero defect term, in (prefix, i, j, last) order.

    Only prefixes ``w'`` with some observed ``N``-gram ``(x, w')`` can yield a
    nonzero term, so those are the only ones enumerated.
    """
    short, long_ = _defect_tables(x, s, N)
    if short.codes.size == 0:
        return np.empty(0)
    mid = s ** (N - 1)
    prefixes = np.unique(short.codes % mid)
    sym = np.arange(s)
    # a[m, x] = c_N(x, prefix_m); b[m, x, y] = c_{N+1}(x, prefix_m, y)
    a = short.lookup(sym[None, :] * mid + prefixes[:, None])
    b = long_.lookup(
        sym[None, :, None] * (mid * s) + prefixes[:, None, None] * s + sym[None, None, :]
    )
    delta = a[:, :, None, None] * b[:, None, :, :] - a[:, None, :, None] * b[:, :, None, :]
    delta = np.abs(delta).ravel()
    nz = delta[delta != 0]
    return N * np.log(nz.astype(np.float64))


def symmetry_defect_total(X: TrajectoryLike, N: int) -> SymmetryDefect:
    """``D_n^(N)`` with the conventions ``D_n^(0) = n`` and ``D_n^(N) = 0`` for ``N >= n``."""
    x, s = _unpack(X)
    n = x.size
    if N < 0:
        raise ValidationError("order must be nonnegative")
    if n > MAX_LENGTH:
        raise ValidationError(f"trajectories longer than {MAX_LENGTH} overflow exact counting")
    if N == 0:
        return SymmetryDefect(0, math.log(n), False) if n > 0 else SymmetryDefect(0, -math.inf, True)
    if N >= n:
        return SymmetryDefect(N, -math.inf, True)
    logs = _defect_logs(x, s, N)
    if logs.size == 0:
        return SymmetryDefect(N, -math.inf, True)
    return SymmetryDefect(N, float(logsumexp(logs)), False)
