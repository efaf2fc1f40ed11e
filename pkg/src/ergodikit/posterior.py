"""Posterior updates for the tensor laws and for the dependence order.

Tensor laws are updated by Dirichlet conjugacy: each cell gains the count of
the matching ``(N+1)``-gram.  The order distribution is updated by mixing the
prior mass ``beta(N)`` with the symmetry defect ``D_n^(N)`` and normalizing::

    nu(N | X) = (beta(N) + D_n^(N)) / (beta_total + sum_k D_n^(k))

Defects reach ``n**(2N)`` and beyond, so the whole rule is evaluated in log
space with an exact-zero flag per term.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from .empirical import GramTable, SymmetryDefect, TrajectoryLike, _unpack, count_grams, symmetry_defect_total
from .errors import ValidationError
from .sampler import DirichletTensorPrior, OrderDistribution
from .tensors import StochasticTensor


POSTERIOR_FORMAT = "ergodikit-posterior/1"


def transition_counts(X: TrajectoryLike, N: int) -> GramTable:
    """``(N+1)``-gram counts over the ``n - N`` windows used by the update."""
    x, s = _unpack(X)
    return count_grams(x, N + 1, x.size - N, s)


def update_dirichlet(prior: DirichletTensorPrior, X: TrajectoryLike) -> DirichletTensorPrior:
    """Add the observed transition counts to every Dirichlet parameter.

    If the trajectory is too short to contain a single ``(N+1)``-window, the
    prior is returned unchanged and a warning is issued.
    """
    x, s = _unpack(X, prior.alphabet_size)
    N = prior.order
    if x.size <= N:
        warnings.warn(
            f"trajectory of length {x.size} has no windows of length {N + 1}; prior left unchanged",
            stacklevel=2,
        )
        return prior
    table = count_grams(x, N + 1, x.size - N, s)
    alphas = np.array(prior.alphas)
    alphas.ravel()[table.codes] += table.counts
    return DirichletTensorPrior(s, N, alphas)


def order_defects(X: TrajectoryLike, max_order: int) -> list[SymmetryDefect]:
    x, _ = _unpack(X)
    return [symmetry_defect_total(x, N) for N in range(max_order + 1)]


def order_log_weights(beta: OrderDistribution, defects: Sequence[SymmetryDefect]) -> np.ndarray:
    """Unnormalized ``log(beta(N) + D_n^(N))``; ``-inf`` where both vanish."""
    out = np.empty(beta.weights.size)
    for N, (b, d) in enumerate(zip(beta.weights, defects)):
        lb = math.log(b) if b > 0 else -math.inf
        out[N] = lb if d.zero else np.logaddexp(lb, d.log_total)
    return out


def update_order(
    beta: OrderDistribution,
    X: TrajectoryLike,
    defects: Sequence[SymmetryDefect] | None = None,
) -> OrderDistribution:
    """Order posterior after seeing ``X``.

    The prior is truncated at ``beta.max_order``; defects of higher orders do
    not enter the normalization.
    """
    if defects is None:
        defects = order_defects(X, beta.max_order)
    logw = order_log_weights(beta, defects)
    # fixed-order reduction; logsumexp sums left to right
    post = np.exp(logw - logsumexp(logw))
    post /= post.sum()
    return OrderDistribution(post)


@dataclass(frozen=True, eq=False)
class PosteriorState:
    """Mixture posterior: order weights plus one updated Dirichlet law per order."""

    order_posterior: OrderDistribution
    tensor_posteriors: tuple[DirichletTensorPrior, ...]
    data_summary: tuple[GramTable | None, ...] = field(repr=False)
    defects: tuple[SymmetryDefect, ...] = field(repr=False)
    n: int = 0

    @property
    def alphabet_size(self) -> int:
        return self.tensor_posteriors[0].alphabet_size

    @property
    def max_order(self) -> int:
        return self.order_posterior.max_order

    def modal_order(self) -> int:
        return self.order_posterior.mode()

    def mean_tensor(self, order: int) -> StochasticTensor:
        return self.tensor_posteriors[order].mean()


def full_posterior(
    order_prior: OrderDistribution,
    tensor_priors: Union[Sequence[DirichletTensorPrior], Mapping[int, DirichletTensorPrior]],
    X: TrajectoryLike,
) -> PosteriorState:
    x, s = _unpack(X)
    priors = [tensor_priors[N] for N in range(order_prior.max_order + 1)] if isinstance(
        tensor_priors, Mapping
    ) else list(tensor_priors)
    if len(priors) != order_prior.max_order + 1:
        raise ValidationError(
            f"need tensor priors for orders 0..{order_prior.max_order}, got {len(priors)}"
        )
    for N, p in enumerate(priors):
        if p.order != N or p.alphabet_size != s:
            raise ValidationError(f"tensor prior {N} has order {p.order} over {p.alphabet_size} symbols")
    defects = order_defects(x, order_prior.max_order)
    nu = update_order(order_prior, x, defects)
    posts, grams = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for p in priors:
            posts.append(update_dirichlet(p, x))
            grams.append(transition_counts(x, p.order) if x.size > p.order else None)
    return PosteriorState(nu, tuple(posts), tuple(grams), tuple(defects), int(x.size))


def posterior_predictive(state: PosteriorState, context_window: Sequence[int], pad: int | None = None) -> np.ndarray:
    """Next-symbol law averaged over orders with the order posterior.

    Each order contributes the Dirichlet-mean row of its context, i.e. the
    last ``N`` symbols of ``context_window``.  Windows shorter than the
    largest order are left-padded with ``pad``; without ``pad`` they raise.
    """
    s = state.alphabet_size
    window = [int(v) for v in context_window]
    if len(window) < state.max_order:
        if pad is None:
            raise ValidationError(
                f"context window of length {len(window)} is shorter than max order {state.max_order}"
            )
        window = [int(pad)] * (state.max_order - len(window)) + window
    probs = state.order_posterior.probabilities
    out = np.zeros(s)
    for N, post in enumerate(state.tensor_posteriors):
        if probs[N] == 0:
            continue
        ctx = 0
        for v in window[len(window) - N :]:
            if not 0 <= v < s:
                raise ValidationError(f"symbol {v} out of range")
            ctx = ctx * s + v
        a = post.alphas[ctx]
        out += probs[N] * a / a.sum()
    return out / out.sum()


def _log_beta(a: np.ndarray) -> np.ndarray:
    return gammaln(a).sum(axis=-1) - gammaln(a.sum(axis=-1))


def conditional_log_marginal(order: int, prior: DirichletTensorPrior, X: TrajectoryLike) -> float:
    """Dirichlet-multinomial log-likelihood of ``X[N:]`` given ``X[:N]``.

    A benchmarking baseline only: it ignores how the stationary initial law
    couples to the tensor.
    """
    x, s = _unpack(X, prior.alphabet_size)
    if prior.order != order:
        raise ValidationError(f"prior has order {prior.order}, expected {order}")
    if x.size <= order:
        raise ValidationError(f"need n > N, got n={x.size}, N={order}")
    table = count_grams(x, order + 1, x.size - order, s)
    counts = np.zeros(prior.alphas.size)
    counts[table.codes] = table.counts
    counts = counts.reshape(prior.alphas.shape)
    seen = counts.sum(axis=1) > 0
    a = prior.alphas[seen]
    return float(np.sum(_log_beta(a + counts[seen]) - _log_beta(a)))


def select_order_baseline(order_prior: OrderDistribution, tensor_priors: Sequence[DirichletTensorPrior],
                          X: TrajectoryLike) -> np.ndarray:
    """Normalized ``prior * conditional marginal`` over orders ``N < n``."""
    x, _ = _unpack(X)
    logs = np.full(order_prior.max_order + 1, -np.inf)
    for N, p in enumerate(tensor_priors[: order_prior.max_order + 1]):
        w = order_prior.weights[N]
        if x.size > N and w > 0:
            logs[N] = math.log(w) + conditional_log_marginal(N, p, x)
    return np.exp(logs - logsumexp(logs))


# -- file format -------------------------------------------------------------


def posterior_to_dict(state: PosteriorState, **extra) -> dict:
    doc = {"format": POSTERIOR_FORMAT}
    doc.update(extra)
    doc.update(
        {
            "alphabet_size": state.alphabet_size,
            "n": state.n,
            "order_posterior": state.order_posterior.probabilities.tolist(),
            "defects": [
                {"order": d.order, "log_total": None if d.zero else d.log_total, "zero": d.zero}
                for d in state.defects
            ],
            "orders": [
                {
                    "order": p.order,
                    "alphas": p.alphas.tolist(),
                    "grams": None
                    if g is None
                    else {g.word_string(c): int(k) for c, k in zip(g.codes.tolist(), g.counts.tolist())},
                }
                for p, g in zip(state.tensor_posteriors, state.data_summary)
            ],
        }
    )
    return doc


def posterior_from_dict(doc: Mapping) -> PosteriorState:
    if doc.get("format") != POSTERIOR_FORMAT:
        raise ValidationError(f"unsupported posterior format {doc.get('format')!r}")
    s = int(doc["alphabet_size"])
    posts, grams = [], []
    for entry in doc["orders"]:
        N = int(entry["order"])
        posts.append(DirichletTensorPrior(s, N, np.asarray(entry["alphas"], dtype=float)))
        g = entry.get("grams")
        if g is None:
            grams.append(None)
            continue
        sep = "" if s <= 10 else "."
        codes, counts = [], []
        for word, k in g.items():
            syms = list(word) if not sep else word.split(sep)
            code = 0
            for v in syms:
                code = code * s + int(v)
            codes.append(code)
            counts.append(k)
        order = np.argsort(codes)
        total = int(np.sum(counts))
        grams.append(GramTable(s, N + 1, total, np.asarray(codes, dtype=np.int64)[order],
                               np.asarray(counts, dtype=np.int64)[order]))
    defects = tuple(
        SymmetryDefect(int(d["order"]), -math.inf if d["zero"] else float(d["log_total"]), bool(d["zero"]))
        for d in doc["defects"]
    )
    return PosteriorState(OrderDistribution(doc["order_posterior"]), tuple(posts), tuple(grams), defects,
                          int(doc["n"]))


def write_posterior(state: PosteriorState, path: Union[str, Path], **extra) -> None:
    Path(path).write_text(json.dumps(posterior_to_dict(state, **extra), indent=1) + "\n")


def read_posterior(path: Union[str, Path]) -> PosteriorState:
    try:
        return posterior_from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: malformed posterior document ({exc})") from None
