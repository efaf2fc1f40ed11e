"""Alphabets, context encoding and stochastic tensors.

A stochastic tensor of order ``N`` over an alphabet of size ``s`` is stored as
an ``(s**N, s)`` array: one next-symbol distribution per length-``N``
context, contexts enumerated in big-endian radix-``s`` order.  Only
transitions between overlapping words ``(r_1..r_N) -> (r_2..r_N, j)`` can be
expressed, so the zero pattern of the full ``s**N x s**N`` object never needs
to be stored.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError

ROW_TOL = 1e-12

Word = Sequence[int]


@dataclass(frozen=True)
class Alphabet:
    """The finite state space ``{0, ..., size-1}``."""

    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ValidationError(f"alphabet size must be an integer >= 2, got {self.size!r}")

    def __len__(self) -> int:
        return self.size

    def words(self, length: int) -> Iterable[tuple[int, ...]]:
        """All words of ``length`` in encoded (lexicographic) order."""
        return itertools.product(range(self.size), repeat=length)


def _size(alphabet: Union[Alphabet, int]) -> int:
    return alphabet.size if isinstance(alphabet, Alphabet) else Alphabet(int(alphabet)).size


def encode_context(word: Word, alphabet: Union[Alphabet, int]) -> int:
    """Big-endian radix-``s`` value of ``word``.

    >>> encode_context([1, 0, 1], 2)
    5
    """
    s = _size(alphabet)
    code = 0
    for sym in word:
        sym = int(sym)
        if not 0 <= sym < s:
            raise ValidationError(f"symbol {sym} out of range for alphabet of size {s}")
        code = code * s + sym
    return code


def decode_context(code: int, order: int, alphabet: Union[Alphabet, int]) -> tuple[int, ...]:
    """Inverse of :func:`encode_context` for words of length ``order``."""
    s = _size(alphabet)
    if not 0 <= code < s**order:
        raise ValidationError(f"code {code} out of range for order {order} over {s} symbols")
    word = []
    for _ in range(order):
        code, sym = divmod(code, s)
        word.append(sym)
    return tuple(reversed(word))


@dataclass(frozen=True, eq=False)
class StochasticTensor:
    """Order-``N`` conditional law: one next-symbol distribution per context.

    Use :func:`make_tensor` to construct validated instances.

    Attributes
    ----------
    alphabet_size : int
    order : int
    rows : ndarray, shape (s**order, s)
        Read-only; row ``c`` is the law of the next symbol after the context
        with code ``c``.
    positive : bool
        True iff every row entry is strictly positive.
    """

    alphabet_size: int
    order: int
    rows: np.ndarray = field(repr=False)
    positive: bool = False

    @property
    def num_contexts(self) -> int:
        return self.rows.shape[0]

    def row(self, context: Word) -> np.ndarray:
        return self.rows[encode_context(context, self.alphabet_size)]

    def prob(self, symbol: int, context: Word) -> float:
        return float(self.row(context)[symbol])

    def equals(self, other: "StochasticTensor", atol: float = 0.0) -> bool:
        if (self.alphabet_size, self.order) != (other.alphabet_size, other.order):
            return False
        if atol == 0.0:
            return bool(np.array_equal(self.rows, other.rows))
        return bool(np.max(np.abs(self.rows - other.rows)) <= atol)

    def max_abs_diff(self, other: "StochasticTensor") -> float:
        if (self.alphabet_size, self.order) != (other.alphabet_size, other.order):
            raise ValidationError("tensors of different shape cannot be compared")
        return float(np.max(np.abs(self.rows - other.rows)))


def make_tensor(
    order: int,
    rows: Union[Mapping[tuple, Sequence[float]], Sequence[Sequence[float]], np.ndarray],
    alphabet: Union[Alphabet, int],
) -> StochasticTensor:
    """Validate and freeze a stochastic tensor.

    ``rows`` is either a mapping from context words to probability vectors or
    an array-like of shape ``(s**order, s)`` in encoded-context order.  Rows
    whose sums are within ``1e-12`` of one are renormalized once; rows already
    normalized to rounding are kept as given.
    """
    s = _size(alphabet)
    if int(order) != order or order < 0:
        raise ValidationError(f"order must be a nonnegative integer, got {order!r}")
    order = int(order)
    r = s**order

    if isinstance(rows, Mapping):
        table = np.full((r, s), np.nan)
        for ctx, vec in rows.items():
            ctx = tuple(ctx) if not isinstance(ctx, int) else (ctx,)
            if len(ctx) != order:
                raise ValidationError(f"context {ctx} has length {len(ctx)}, expected {order}")
            table[encode_context(ctx, s)] = np.asarray(vec, dtype=float)
        missing = np.flatnonzero(np.isnan(table).any(axis=1))
        if missing.size:
            raise ValidationError(f"missing context {decode_context(int(missing[0]), order, s)}")
    else:
        table = np.array(rows, dtype=float)
        if order == 0 and table.ndim == 1:
            table = table[None, :]
        if table.shape != (r, s):
            raise ValidationError(f"rows must have shape {(r, s)}, got {table.shape}")

    if not np.all(np.isfinite(table)):
        raise ValidationError("tensor contains non-finite entries")
    if np.any(table < 0):
        bad = int(np.flatnonzero((table < 0).any(axis=1))[0])
        raise ValidationError(f"negative entry in row for context {decode_context(bad, order, s)}")
    sums = table.sum(axis=1)
    worst = int(np.argmax(np.abs(sums - 1.0)))
    if abs(sums[worst] - 1.0) > ROW_TOL:
        raise ValidationError(
            f"row for context {decode_context(worst, order, s)} sums to {float(sums[worst])!r}"
        )
    # leave rows already normalized to rounding untouched, so that writing
    # and re-reading a tensor reproduces it bit for bit
    drift = np.abs(sums - 1.0) > 4 * s * np.finfo(float).eps
    table[drift] /= sums[drift, None]
    table.setflags(write=False)
    return StochasticTensor(s, order, table, bool(np.all(table > 0)))


def uniform_tensor(order: int, alphabet: Union[Alphabet, int]) -> StochasticTensor:
    s = _size(alphabet)
    return make_tensor(order, np.full((s**order, s), 1.0 / s), s)


def iid_tensor(order: int, law: Sequence[float], alphabet: Union[Alphabet, int]) -> StochasticTensor:
    """Context-free tensor: every row equals ``law``."""
    s = _size(alphabet)
    return make_tensor(order, np.tile(np.asarray(law, dtype=float), (s**order, 1)), s)


@dataclass(frozen=True, eq=False)
class FlattenedMatrix:
    """Row-stochastic ``s**N x s**N`` matrix on the N-th higher shift space."""

    alphabet_size: int
    order: int
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def flatten(tensor: StochasticTensor) -> FlattenedMatrix:
    """Arrange a tensor as a sparse transition matrix between contexts.

    Entry ``(encode(r_1..r_N), encode(r_2..r_N, j))`` holds ``P(j | r_1..r_N)``;
    each row carries exactly ``s`` structural entries (de Bruijn pattern).
    """
    if tensor.order < 1:
        raise ValidationError("order-0 tensors have no higher shift space to flatten onto")
    s, r = tensor.alphabet_size, tensor.num_contexts
    base = (np.arange(r) * s) % r
    indices = (base[:, None] + np.arange(s)[None, :]).ravel()
    indptr = np.arange(0, r * s + 1, s)
    mat = sp.csr_matrix((tensor.rows.ravel().copy(), indices, indptr), shape=(r, r))
    return FlattenedMatrix(s, tensor.order, mat)


def context_permutation(perm: Sequence[int], order: int) -> np.ndarray:
    """Map each context code to the code of its symbol-wise relabeled word."""
    s = len(perm)
    codes = np.arange(s**order)
    out = np.zeros_like(codes)
    for pos in range(order):
        digit = (codes // s ** (order - 1 - pos)) % s
        out += np.asarray(perm)[digit] * s ** (order - 1 - pos)
    return out


def relabel(tensor: StochasticTensor, perm: Sequence[int]) -> StochasticTensor:
    """Apply the alphabet permutation ``sym -> perm[sym]`` to a tensor."""
    perm = np.asarray(perm)
    s = tensor.alphabet_size
    if sorted(perm.tolist()) != list(range(s)):
        raise ValidationError(f"{perm.tolist()} is not a permutation of range({s})")
    cmap = context_permutation(perm, tensor.order)
    rows = np.empty_like(tensor.rows)
    rows[np.ix_(cmap, perm)] = tensor.rows
    return make_tensor(tensor.order, rows, s)


# -- file format -------------------------------------------------------------


def tensor_to_dict(tensor: StochasticTensor) -> dict:
    return {
        "alphabet_size": tensor.alphabet_size,
        "order": tensor.order,
        "rows": tensor.rows.tolist(),
    }


def tensor_from_dict(doc: Mapping) -> StochasticTensor:
    try:
        return make_tensor(int(doc["order"]), doc["rows"], int(doc["alphabet_size"]))
    except KeyError as exc:
        raise ValidationError(f"tensor document lacks field {exc.args[0]!r}") from None


def write_tensor(tensor: StochasticTensor, path: Union[str, Path], **extra) -> None:
    """Write a tensor as JSON; floats use shortest round-trip repr."""
    doc = dict(extra)
    doc.update(tensor_to_dict(tensor))
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_tensor(path: Union[str, Path]) -> StochasticTensor:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return tensor_from_dict(doc)
