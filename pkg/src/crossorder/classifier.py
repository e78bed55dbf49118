"""Directed pairwise order classifier and the pairwise cross-entropy loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import is_permutation


@dataclass
class PairClassifierParams:
    # weight over the concatenation [e_first, e_second]; bias kept as a 0-d array
    # so optimizers can update it in place
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(())

    @property
    def width(self) -> int:
        return self.weight.shape[0] // 2

    def named_arrays(self, prefix: str = "classifier") -> dict[str, np.ndarray]:
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}

    def copy(self) -> "PairClassifierParams":
        return PairClassifierParams(self.weight.copy(), self.bias.copy())


def init_classifier(d: int, seed: int) -> PairClassifierParams:
    rng = np.random.default_rng(seed)
    return PairClassifierParams(rng.normal(0.0, 1.0 / np.sqrt(2 * d), 2 * d), np.zeros(()))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_width(n: int, params: PairClassifierParams):
    if 2 * n != params.weight.shape[0]:
        raise ValueError(f"width mismatch: embedding d={n}, classifier expects d={params.width}")


def pair_logit(e1, e2, params: PairClassifierParams) -> float:
    """Logit that element 1 precedes element 2."""
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    if e1.shape != e2.shape or e1.ndim != 1:
        raise ValueError(f"width mismatch: {e1.shape} vs {e2.shape}")
    _check_width(e1.shape[0], params)
    return float(params.weight @ np.concatenate([e1, e2]) + params.bias)


def order_logits(encoded, params: PairClassifierParams) -> np.ndarray:
    e = np.asarray(encoded, dtype=np.float64)
    if e.ndim != 2:
        raise ValueError(f"expected (n, d) array, got shape {e.shape}")
    d = e.shape[1]
    _check_width(d, params)
    first = e @ params.weight[:d]
    second = e @ params.weight[d:]
    return first[:, None] + second[None, :] + params.bias


def order_matrix(encoded, params: PairClassifierParams) -> np.ndarray:
    """Order-score matrix: entry (k, l) is the probability that k precedes l."""
    e = np.asarray(encoded)
    if e.ndim != 2 or e.shape[0] < 2:
        raise ValueError(f"order matrix needs at least 2 elements, got shape {e.shape}")
    m = sigmoid(order_logits(e, params))
    np.fill_diagonal(m, 0.0)
    return m


def order_matrix_backward(encoded, params: PairClassifierParams, scores: np.ndarray, dscores: np.ndarray):
    """Backprop ``dscores`` (gradient w.r.t. the order matrix) to classifier params and inputs."""
    e = np.asarray(encoded, dtype=np.float64)
    d = e.shape[1]
    dl = np.array(dscores, dtype=np.float64) * scores * (1.0 - scores)
    np.fill_diagonal(dl, 0.0)
    dfirst = dl.sum(axis=1)
    dsecond = dl.sum(axis=0)
    grads = {
        "weight": np.concatenate([e.T @ dfirst, e.T @ dsecond]),
        "bias": np.asarray(dl.sum()),
    }
    de = np.outer(dfirst, params.weight[:d]) + np.outer(dsecond, params.weight[d:])
    return grads, de


def precedence_labels(order: Sequence[int]) -> np.ndarray:
    """``y[k, l] = 1`` iff element k comes before element l in ``order``."""
    n = len(order)
    pos = np.empty(n, dtype=np.int64)
    pos[np.asarray(order, dtype=np.int64)] = np.arange(n)
    return (pos[:, None] < pos[None, :]).astype(np.float64)


def pairwise_loss(matrix, order: Sequence[int]) -> tuple[float, np.ndarray]:
    """Two-way softmax cross-entropy over every element pair.

    For each unordered pair the scores ``(m_kl, m_lk)`` are softmax-normalised
    and the gold direction is scored with negative log-likelihood. The result is
    the mean over the ``n(n-1)/2`` pairs, i.e. the binary CE summed over both
    ordered directions and divided by ``n(n-1)``. Returns the loss and its
    gradient with respect to every matrix entry (zero on the diagonal).
    """
    m = np.asarray(matrix, dtype=np.float64)
    n = m.shape[0]
    if m.ndim != 2 or m.shape[1] != n:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not is_permutation(order, n):
        raise ValueError(f"size mismatch: order {list(order)} is not a permutation of 0..{n - 1}")
    if n < 2:
        raise ValueError("pairwise loss needs at least 2 elements")
    y = precedence_labels(order)
    # margin of the gold direction over the reverse, one entry per ordered gold pair
    margin = m - m.T
    nll = np.logaddexp(0.0, -margin)
    pairs = n * (n - 1) / 2
    loss = float((y * nll).sum() / pairs)
    # d nll / d margin = -(1 - softmax) = -sigmoid(-margin)
    dmargin = -y * sigmoid(-margin) / pairs
    grad = dmargin - dmargin.T
    np.fill_diagonal(grad, 0.0)
    return loss, grad
