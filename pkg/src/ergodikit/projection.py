"""Stationary vectors and the projections between tensor spaces.

``project_down`` sends a positive order-``N`` tensor to the unique order-
``N-1`` tensor that makes the pair stationary: flatten to the higher shift
space, take the Perron (stationary) vector, then renormalize it into
conditional probabilities one order lower.  ``project_chain`` composes these
steps and ``kernel_sequence`` collects the whole consistent chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, ValidationError
from .tensors import FlattenedMatrix, StochasticTensor, flatten, make_tensor

RESIDUAL_TOL = 1e-10
POWER_STOP = 1e-14
POWER_MAXITER = 10**6
DENSE_LIMIT = 1024
MIN_ENTRY = 1e-300
CONSISTENCY_TOL = 1e-10
# ζ row sums differ from 1 by roughly residual / min denominator
STATIONARY_ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class StationaryVector:
    alphabet_size: int
    order: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = self.weights
        if w.shape != (self.alphabet_size**self.order,):
            raise ValidationError(f"weights must have length {self.alphabet_size**self.order}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("stationary weights must be a probability vector")


def _check_positive_matrix(matrix: FlattenedMatrix) -> None:
    data = matrix.matrix.data
    if data.size != matrix.dimension * matrix.alphabet_size or np.any(data <= MIN_ENTRY):
        raise ValidationError(
            "stationary vector requires a positive tensor; uniqueness is not guaranteed otherwise"
        )


def _dense_stationary(P: np.ndarray) -> np.ndarray:
    r = P.shape[0]
    A = P.T - np.eye(r)
    A[-1, :] = 1.0
    b = np.zeros(r)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def _power_stationary(matrix, maxiter: int) -> np.ndarray:
    Pt = matrix.T.tocsr()
    r = matrix.shape[0]
    v = np.full(r, 1.0 / r)
    for _ in range(maxiter):
        w = Pt @ v
        w /= w.sum()
        if np.max(np.abs(w - v)) <= POWER_STOP * np.max(w):
            return w
        v = w
    raise ConvergenceError(f"power iteration did not converge within {maxiter} iterations")


def stationary_vector(
    matrix: FlattenedMatrix, method: str = "auto", maxiter: int = POWER_MAXITER
) -> StationaryVector:
    """Unique probability vector ``v`` with ``v P = v``.

    Parameters
    ----------
    matrix : FlattenedMatrix
        Flattening of a positive tensor.
    method : {"auto", "dense", "power"}
        ``auto`` uses a dense solve of the normalized singular system when the
        dimension is at most 1024 and power iteration otherwise.

    Raises
    ------
    ValidationError
        If a structural entry is zero (or below 1e-300).
    ConvergenceError
        If power iteration exhausts ``maxiter`` or the final residual
        ``||vP - v||_inf`` is not below 1e-10.
    """
    _check_positive_matrix(matrix)
    if method == "auto":
        method = "dense" if matrix.dimension <= DENSE_LIMIT else "power"
    if method == "dense":
        v = _dense_stationary(matrix.toarray())
    elif method == "power":
        v = _power_stationary(matrix.matrix, maxiter)
    else:
        raise ValueError(f"unknown method {method!r}")

    v = np.clip(v, 0.0, None)
    v /= v.sum()
    res = stationary_residual(matrix, v)
    if not res < RESIDUAL_TOL:
        raise ConvergenceError(f"stationary residual {res:.3e} exceeds {RESIDUAL_TOL}")
    v.setflags(write=False)
    return StationaryVector(matrix.alphabet_size, matrix.order, v)


def stationary_residual(matrix: FlattenedMatrix, v) -> float:
    """``||v P - v||_inf``."""
    v = v.weights if isinstance(v, StationaryVector) else np.asarray(v)
    return float(np.max(np.abs(matrix.matrix.T @ v - v)))


def renormalize_stationary(v: StationaryVector) -> StochasticTensor:
    """Turn a stationary law on length-``N`` words into an order-``N-1`` tensor.

    Entry ``P(t_N | t_1..t_{N-1}) = v[t] / sum_j v[(j, t_1..t_{N-1})]``.
    """
    if v.order < 1:
        raise ValidationError("cannot renormalize a vector on length-0 words")
    s, N = v.alphabet_size, v.order
    w = v.weights
    denom = w.reshape(s, s ** (N - 1)).sum(axis=0)
    if np.any(denom <= 0):
        raise ValidationError("zero denominator in stationary renormalization")
    rows = w.reshape(s ** (N - 1), s) / denom[:, None]
    sums = rows.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > STATIONARY_ROW_TOL:
        raise ValidationError(
            f"vector is not stationary: renormalized rows sum up to {sums.max()!r}"
        )
    return make_tensor(N - 1, rows / sums[:, None], s)


def _require_positive(tensor: StochasticTensor) -> None:
    if not tensor.positive or tensor.rows.min() <= MIN_ENTRY:
        raise ValidationError("projection requires a positive tensor")


def project_down(tensor: StochasticTensor, method: str = "auto") -> StochasticTensor:
    """One projection step from order ``N`` to ``N-1``."""
    if tensor.order < 1:
        raise ValidationError("order-0 tensor cannot be projected further down")
    _require_positive(tensor)
    return renormalize_stationary(stationary_vector(flatten(tensor), method=method))


def project_chain(tensor: StochasticTensor, target_order: int, method: str = "auto") -> StochasticTensor:
    """Composed projection to ``target_order``; the identity when orders match."""
    if not 0 <= target_order <= tensor.order:
        raise ValidationError(
            f"target order {target_order} must lie in [0, {tensor.order}]"
        )
    _require_positive(tensor)
    out = tensor
    while out.order > target_order:
        out = project_down(out, method=method)
    return out


class KernelSequence:
    """Consistent chain ``(kappa_0, ..., kappa_N)`` of positive tensors.

    With ``check=True`` (default) adjacent kernels must agree under
    :func:`project_down` within 1e-10.  ``check=False`` admits arbitrary
    sequences, e.g. to exercise the stationarity checker on counterexamples.
    """

    __slots__ = ("kernels",)

    def __init__(self, kernels: Sequence[StochasticTensor], check: bool = True):
        kernels = tuple(kernels)
        if not kernels:
            raise ValidationError("kernel sequence must contain at least kappa_0")
        s = kernels[0].alphabet_size
        for m, k in enumerate(kernels):
            if k.order != m or k.alphabet_size != s:
                raise ValidationError(f"kernel {m} has order {k.order} over {k.alphabet_size} symbols")
        if check:
            for k in kernels:
                _require_positive(k)
            for m in range(len(kernels) - 1):
                gap = project_down(kernels[m + 1]).max_abs_diff(kernels[m])
                if gap > CONSISTENCY_TOL:
                    raise ValidationError(
                        f"kernel {m} differs from the projection of kernel {m + 1} by {gap:.3e}"
                    )
        self.kernels = kernels

    @property
    def top_order(self) -> int:
        return len(self.kernels) - 1

    @property
    def alphabet_size(self) -> int:
        return self.kernels[0].alphabet_size

    @property
    def top(self) -> StochasticTensor:
        return self.kernels[-1]

    def __len__(self) -> int:
        return len(self.kernels)

    def __getitem__(self, m: int) -> StochasticTensor:
        return self.kernels[m]

    def __iter__(self):
        return iter(self.kernels)

    def __repr__(self) -> str:
        return f"KernelSequence(alphabet_size={self.alphabet_size}, top_order={self.top_order})"


def kernel_sequence(tensor: StochasticTensor, method: str = "auto") -> KernelSequence:
    _require_positive(tensor)
    chain = [tensor]
    while chain[-1].order > 0:
        chain.append(project_down(chain[-1], method=method))
    return KernelSequence(reversed(chain), check=False)


class BinaryOrder3Solution(NamedTuple):
    kappa2: StochasticTensor
    kappa1: StochasticTensor
    kappa0: StochasticTensor
    c1: float
    c2: float


def closed_form_binary_order3(tensor: StochasticTensor) -> BinaryOrder3Solution:
    """Explicit lower kernels of a positive binary order-3 tensor.

    Evaluates the hand-solved stationarity equations directly, without any
    eigenvector computation, so it can serve as an oracle for
    :func:`project_chain`.  ``p(up, low)`` below reads as the probability of
    moving from word ``up`` to the overlapping word ``low``.
    """
    if tensor.alphabet_size != 2 or tensor.order != 3:
        raise ValidationError("closed form applies to binary order-3 tensors only")
    _require_positive(tensor)

    def p(up: str, low: str) -> float:
        assert up[1:] == low[:-1], (up, low)
        return float(tensor.rows[int(up, 2), int(low[-1])])

    a, b = p("100", "000"), p("000", "001")
    e, f = p("111", "110"), p("011", "111")
    x = p("101", "010") - p("001", "010")
    y = p("010", "100") - p("110", "100")
    den = 1.0 + x * y

    k2 = np.array(
        [
            [a / (a + b), b / (a + b)],
            [
                (p("101", "010") + p("110", "100") * (p("001", "010") - p("101", "010"))) / den,
                (p("101", "011") - p("010", "100") * (p("001", "010") - p("101", "010"))) / den,
            ],
            [
                (p("110", "100") + p("101", "010") * (p("010", "100") - p("110", "100"))) / den,
                (p("110", "101") - p("001", "010") * (p("010", "100") - p("110", "100"))) / den,
            ],
            [e / (e + f), f / (e + f)],
        ]
    )
    c1 = (a + b) / den * (p("110", "100") + p("101", "010") * y) / b
    c2 = (e + f) / den * (p("101", "011") - p("010", "100") * (p("001", "010") - p("101", "010"))) / e
    k1 = np.array([[c1 / (1 + c1), 1 / (1 + c1)], [1 / (1 + c2), c2 / (1 + c2)]])
    k0 = np.array([1 / (1 + (1 + c2) / (1 + c1)), 1 / (1 + (1 + c1) / (1 + c2))])
    return BinaryOrder3Solution(
        make_tensor(2, k2, 2), make_tensor(1, k1, 2), make_tensor(0, k0, 2), float(c1), float(c2)
    )
