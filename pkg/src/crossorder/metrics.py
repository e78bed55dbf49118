"""Ordering metrics: accuracy, perfect match ratio, Kendall's tau."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence


def accuracy(pred: Sequence[int], gold: Sequence[int]) -> float:
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(gold)}")
    if not gold:
        raise ValueError("empty permutation")
    return sum(p == g for p, g in zip(pred, gold)) / len(gold)


def pmr(preds: Sequence[Sequence[int]], golds: Sequence[Sequence[int]]) -> float:
    if len(preds) != len(golds):
        raise ValueError(f"misaligned lists: {len(preds)} predictions vs {len(golds)} golds")
    if not golds:
        raise ValueError("empty corpus")
    return sum(list(p) == list(g) for p, g in zip(preds, golds)) / len(golds)


def count_inversions(pred: Sequence[int], gold: Sequence[int]) -> int:
    """Pairs of elements whose relative order differs between the two orders."""
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(gold)}")
    rank = {e: i for i, e in enumerate(gold)}
    seq = [rank[e] for e in pred]
    return _merge_count(seq)[1]


def _merge_count(seq):
    if len(seq) < 2:
        return list(seq), 0
    mid = len(seq) // 2
    left, a = _merge_count(seq[:mid])
    right, b = _merge_count(seq[mid:])
    merged, inv, i, j = [], a + b, 0, 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            inv += len(left) - i
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inv


def kendall_tau(pred: Sequence[int], gold: Sequence[int]) -> float:
    n = len(gold)
    if len(pred) != n:
        raise ValueError(f"length mismatch: {len(pred)} vs {n}")
    if n < 2:
        raise ValueError("kendall tau needs at least 2 elements")
    return 1.0 - 2.0 * count_inversions(pred, gold) / (n * (n - 1) / 2)


@dataclass(frozen=True)
class Report:
    acc: float
    pmr: float
    tau: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def line(self, **prefix) -> str:
        fields = {**prefix, **self.as_dict()}
        return " ".join(f"{k}={v:.6f}" if isinstance(v, float) else f"{k}={v}" for k, v in fields.items())


def corpus_report(preds, golds) -> Report:
    """Per-set metrics averaged without weighting by set size."""
    if len(preds) != len(golds):
        raise ValueError(f"misaligned lists: {len(preds)} predictions vs {len(golds)} golds")
    if not golds:
        raise ValueError("empty corpus")
    acc = sum(accuracy(p, g) for p, g in zip(preds, golds)) / len(golds)
    tau = sum(kendall_tau(p, g) for p, g in zip(preds, golds)) / len(golds)
    return Report(acc=acc, pmr=pmr(preds, golds), tau=tau)
