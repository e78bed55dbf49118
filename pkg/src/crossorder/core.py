"""Value types shared across the package.

Element embeddings live in ``float32`` arrays of shape ``(n, d)``; order-score
matrices and similarity matrices are ``float64``. A *permutation* is always an
order list: ``perm[i]`` is the element placed at position ``i``. The
``gold_order`` stored on an :class:`ElementSet` is the inverse view: the gold
position of every element.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

Permutation = list[int]


class Modality(str, enum.Enum):
    TEXT = "text"
    IMAGE = "image"


def is_permutation(values: Sequence[int], n: Optional[int] = None) -> bool:
    n = len(values) if n is None else n
    if len(values) != n:
        return False
    try:
        return sorted(int(v) for v in values) == list(range(n))
    except (TypeError, ValueError):
        return False


def positions_to_order(positions: Sequence[int]) -> Permutation:
    """Turn "position of each element" into "element at each position"."""
    order = [0] * len(positions)
    for element, pos in enumerate(positions):
        order[pos] = element
    return order


def order_to_positions(order: Sequence[int]) -> list[int]:
    # the map is an involution on permutations
    return positions_to_order(order)


@dataclass(frozen=True, eq=False)
class ElementSet:
    elements: np.ndarray
    gold_order: tuple[int, ...]
    modality: Modality

    def __post_init__(self):
        object.__setattr__(self, "elements", np.asarray(self.elements, dtype=np.float32))
        object.__setattr__(self, "gold_order", tuple(int(v) for v in self.gold_order))
        object.__setattr__(self, "modality", Modality(self.modality))

    @property
    def size(self) -> int:
        return int(self.elements.shape[0]) if self.elements.ndim else 0

    @property
    def dim(self) -> int:
        return int(self.elements.shape[1]) if self.elements.ndim == 2 else 0

    @property
    def order(self) -> Permutation:
        """Gold order as an order list."""
        return positions_to_order(self.gold_order)

    def equals(self, other: "ElementSet") -> bool:
        return (
            self.modality == other.modality
            and self.gold_order == other.gold_order
            and self.elements.shape == other.elements.shape
            and np.array_equal(self.elements, other.elements)
        )


@dataclass(frozen=True, eq=False)
class StoryPair:
    id: str
    text: ElementSet
    image: ElementSet
    cross_sim: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.cross_sim is not None:
            object.__setattr__(self, "cross_sim", np.asarray(self.cross_sim, dtype=np.float64))

    def side(self, modality: Modality) -> ElementSet:
        return self.text if Modality(modality) is Modality.TEXT else self.image

    def equals(self, other: "StoryPair") -> bool:
        if self.id != other.id or not self.text.equals(other.text) or not self.image.equals(other.image):
            return False
        if self.cross_sim is None or other.cross_sim is None:
            return self.cross_sim is None and other.cross_sim is None
        return self.cross_sim.shape == other.cross_sim.shape and np.array_equal(self.cross_sim, other.cross_sim)


def _validate_set(label: str, es: ElementSet) -> list[str]:
    out = []
    if es.elements.ndim != 2:
        return [f"{label}: elements must be a 2-D array, got ndim={es.elements.ndim}"]
    n = es.size
    if n < 2:
        out.append(f"{label}: set size {n} < 2")
    if not np.all(np.isfinite(es.elements)):
        out.append(f"{label}: non-finite embedding entries")
    if len(es.gold_order) != n:
        out.append(f"{label}: gold_order length {len(es.gold_order)} != set size {n}")
    elif not is_permutation(es.gold_order, n):
        out.append(f"{label}: gold_order not a permutation")
    return out


def validate_story(pair: StoryPair) -> list[str]:
    """Return human-readable invariant violations; empty means the story is well formed."""
    out = _validate_set("text", pair.text) + _validate_set("image", pair.image)
    if pair.text.modality is not Modality.TEXT:
        out.append("text: modality field is not text")
    if pair.image.modality is not Modality.IMAGE:
        out.append("image: modality field is not image")
    if pair.cross_sim is not None:
        sim = pair.cross_sim
        expected = (pair.text.size, pair.image.size)
        if sim.ndim != 2 or sim.shape != expected:
            out.append(f"similarity shape mismatch: got {sim.shape}, expected {expected}")
        elif not np.all(np.isfinite(sim)):
            out.append("similarity has non-finite entries")
    return out


def check_order_matrix(m: np.ndarray, *, unrefined: bool = False) -> list[str]:
    """Invariant check for an order-score matrix (used by tests and debug paths)."""
    out = []
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return [f"order matrix must be square, got shape {m.shape}"]
    if not np.all(np.isfinite(m)):
        out.append("non-finite entries")
    if np.any(np.diag(m) != 0.0):
        out.append("non-zero diagonal")
    if np.any(m < 0):
        out.append("negative entries")
    if unrefined:
        off = m[~np.eye(m.shape[0], dtype=bool)]
        if np.any(off <= 0) or np.any(off >= 1):
            out.append("off-diagonal entry outside (0, 1)")
    return out
