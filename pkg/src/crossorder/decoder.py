"""Turning an order-score matrix into a full permutation."""

from __future__ import annotations

import itertools

import numpy as np

from .core import Permutation

BRUTE_FORCE_LIMIT = 8


def node_scores(matrix) -> np.ndarray:
    """Out-weight minus in-weight of every node in the order graph."""
    m = np.asarray(matrix, dtype=np.float64)
    off = m * (1.0 - np.eye(m.shape[0]))
    return off.sum(axis=1) - off.sum(axis=0)


def decode_order(matrix) -> Permutation:
    """Sort nodes by descending score; equal scores keep the smaller index first."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    scores = node_scores(m)
    return [int(i) for i in np.lexsort((np.arange(len(scores)), -scores))]


def order_objective(matrix, perm) -> float:
    """Total score of all pairs placed in the direction ``perm`` puts them."""
    m = np.asarray(matrix, dtype=np.float64)
    return float(sum(m[perm[a], perm[b]] for a in range(len(perm)) for b in range(a + 1, len(perm))))


def brute_force_decode(matrix) -> Permutation:
    """Exhaustive maximiser of :func:`order_objective` (lexicographically first on ties)."""
    m = np.asarray(matrix, dtype=np.float64)
    n = m.shape[0]
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"set too large for oracle (n={n} > {BRUTE_FORCE_LIMIT})")
    best, best_val = None, -np.inf
    for perm in itertools.permutations(range(n)):
        val = order_objective(m, perm)
        if val > best_val:
            best, best_val = perm, val
    return list(best)
