"""Three-stage generative sampler: order, tensor, trajectory.

All randomness comes from a Philox generator keyed by ``(seed, stream)``.
Each stage has its own default stream so that, e.g., changing the order
prior does not shift the random numbers used for the trajectory.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .errors import ValidationError
from .projection import KernelSequence, kernel_sequence
from .tensors import StochasticTensor, make_tensor

ORDER_STREAM = 0
TENSOR_STREAM = 1
TRAJECTORY_STREAM = 2

Seed = Union[int, np.random.Generator]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for the ``(seed, stream)`` pair."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


def _rng(seed: Seed, stream: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed, stream)


@dataclass(frozen=True, eq=False)
class OrderDistribution:
    """Finite nonnegative weights on orders ``0..max_order``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("order weights must be a nonempty vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("order weights must be finite and nonnegative")
        if w.sum() <= 0:
            raise ValidationError("order weights have zero total mass")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, max_order: int, mass: float = 1.0) -> "OrderDistribution":
        return cls(np.full(max_order + 1, mass / (max_order + 1)))

    @classmethod
    def point_mass(cls, order: int, max_order: int | None = None) -> "OrderDistribution":
        w = np.zeros((order if max_order is None else max_order) + 1)
        w[order] = 1.0
        return cls(w)

    @property
    def max_order(self) -> int:
        return self.weights.size - 1

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    def mode(self) -> int:
        return int(np.argmax(self.weights))


@dataclass(frozen=True, eq=False)
class DirichletTensorPrior:
    """Independent Dirichlet laws, one per length-``order`` context.

    ``alphas`` has shape ``(s**order, s)``; row ``c`` parametrizes the law of
    the next-symbol distribution after context ``c``.
    """

    alphabet_size: int
    order: int
    alphas: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.alphas, dtype=float)
        shape = (self.alphabet_size**self.order, self.alphabet_size)
        if a.shape != shape:
            raise ValidationError(f"alphas must have shape {shape}, got {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValidationError("Dirichlet parameters must be positive and finite")
        a.setflags(write=False)
        object.__setattr__(self, "alphas", a)

    @classmethod
    def symmetric(cls, order: int, alphabet_size: int, alpha: float = 1.0) -> "DirichletTensorPrior":
        return cls(alphabet_size, order, np.full((alphabet_size**order, alphabet_size), float(alpha)))

    def mean(self) -> StochasticTensor:
        return make_tensor(self.order, self.alphas / self.alphas.sum(axis=1, keepdims=True), self.alphabet_size)


@dataclass(frozen=True, eq=False)
class Trajectory:
    symbols: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        x = np.array(self.symbols, dtype=np.int64).ravel()
        if x.size and (x.min() < 0 or x.max() >= self.alphabet_size):
            raise ValidationError(f"trajectory symbols must lie in [0, {self.alphabet_size})")
        x.setflags(write=False)
        object.__setattr__(self, "symbols", x)

    def __len__(self) -> int:
        return self.symbols.size

    def prefix(self, m: int) -> "Trajectory":
        return Trajectory(self.symbols[:m], self.alphabet_size)


def sample_order(nu: OrderDistribution, seed: Seed, stream: int = ORDER_STREAM) -> int:
    """Draw ``N ~ nu`` by inverting the cumulative weights."""
    cum = np.cumsum(nu.probabilities)
    u = _rng(seed, stream).random()
    return int(min(np.searchsorted(cum, u, side="right"), nu.max_order))


def _log_gamma_draws(rng: np.random.Generator, alphas: np.ndarray) -> np.ndarray:
    # numpy's standard_gamma is Marsaglia-Tsang; shape < 1 uses the
    # G(a) = G(a+1) * U**(1/a) boost, kept in log space against underflow
    small = alphas < 1.0
    g = rng.standard_gamma(np.where(small, alphas + 1.0, alphas))
    logs = np.log(g)
    if np.any(small):
        u = rng.random(alphas.shape)
        logs = np.where(small, logs + np.log(u) / alphas, logs)
    return logs


def sample_tensor(prior: DirichletTensorPrior, seed: Seed, stream: int = TENSOR_STREAM) -> StochasticTensor:
    """Draw every row independently from its Dirichlet law."""
    rng = _rng(seed, stream)
    logs = _log_gamma_draws(rng, prior.alphas)
    rows = np.exp(logs - logsumexp(logs, axis=1, keepdims=True))
    return make_tensor(prior.order, rows / rows.sum(axis=1, keepdims=True), prior.alphabet_size)


def sample_trajectory(seq: KernelSequence, n: int, seed: Seed, stream: int = TRAJECTORY_STREAM) -> Trajectory:
    """Draw ``X_1..X_n`` from the measure of a kernel sequence.

    ``X_1 ~ kappa_0`` and ``X_k`` given the past uses ``kappa_{min(k-1, N)}``
    on the most recent ``min(k-1, N)`` symbols.  No burn-in is needed: the
    product measure is stationary when the sequence is consistent.
    """
    if n < 1:
        raise ValidationError("trajectory length must be at least 1")
    s, N = seq.alphabet_size, seq.top_order
    cums = []
    for k in seq.kernels:
        c = np.cumsum(k.rows, axis=1)
        c[:, -1] = 1.0
        cums.append(c.tolist())
    u = _rng(seed, stream).random(n).tolist()
    out = [0] * n
    wrap = s**N
    ctx = 0
    top = cums[N]
    for k in range(n):
        row = cums[k][ctx] if k < N else top[ctx]
        x = bisect.bisect_right(row, u[k])
        out[k] = x
        ctx = (ctx * s + x) % wrap if N else 0
    return Trajectory(np.asarray(out, dtype=np.int64), s)


def sample_scheme(
    nu: OrderDistribution,
    alphas: Union[float, Sequence[DirichletTensorPrior]],
    alphabet_size: int,
    n: int,
    seed: int,
):
    """Run all three stages; returns ``(order, tensor, kernels, trajectory)``."""
    order = sample_order(nu, seed)
    if isinstance(alphas, (int, float)):
        prior = DirichletTensorPrior.symmetric(order, alphabet_size, alphas)
    else:
        prior = alphas[order]
    tensor = sample_tensor(prior, seed)
    seq = kernel_sequence(tensor)
    return order, tensor, seq, sample_trajectory(seq, n, seed)


# -- file format -------------------------------------------------------------


def format_trajectory(traj: Trajectory, header: bool = True, comments: Sequence[str] = ()) -> str:
    lines = [f"#{c}" for c in comments]
    if header:
        lines.append(f"#alphabet={traj.alphabet_size}")
    if traj.alphabet_size <= 10:
        lines.append("".join(map(str, traj.symbols.tolist())))
    else:
        lines.append(",".join(map(str, traj.symbols.tolist())))
    return "\n".join(lines) + "\n"


def write_trajectory(traj: Trajectory, path: Union[str, Path], comments: Sequence[str] = ()) -> None:
    Path(path).write_text(format_trajectory(traj, comments=comments))


def parse_trajectory(text: str, alphabet_size: int | None = None) -> Trajectory:
    declared = None
    body = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            if key.strip() == "alphabet":
                declared = int(val)
        elif line:
            body.append(line)
    s = declared if declared is not None else alphabet_size
    if s is None:
        raise ValidationError("trajectory has no '#alphabet=' header and no alphabet size was given")
    if alphabet_size is not None and declared is not None and declared != alphabet_size:
        raise ValidationError(f"alphabet mismatch: file declares {declared}, expected {alphabet_size}")
    if not body:
        raise ValidationError("trajectory file is empty")
    try:
        if s > 10 or any("," in line for line in body):
            symbols = [int(tok) for tok in " ".join(body).replace(",", " ").split()]
        else:
            symbols = [int(ch) for ch in "".join(body)]
    except ValueError:
        raise ValidationError("trajectory contains non-numeric symbols") from None
    return Trajectory(np.asarray(symbols, dtype=np.int64), s)


def read_trajectory(path: Union[str, Path], alphabet_size: int | None = None) -> Trajectory:
    return parse_trajectory(Path(path).read_text(), alphabet_size)
