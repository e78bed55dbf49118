"""One modality's ordering model: set encoder followed by the pair classifier."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classifier import PairClassifierParams, init_classifier, order_matrix, order_matrix_backward, pairwise_loss
from .encoder import EncoderParams, encode_set, encode_set_backward, init_params


@dataclass
class OrderModel:
    encoder: EncoderParams
    classifier: PairClassifierParams

    @property
    def width(self) -> int:
        return self.encoder.width

    def named_arrays(self) -> dict[str, np.ndarray]:
        """Views onto every trainable array, keyed by a stable dotted name."""
        return {**self.encoder.named_arrays(), **self.classifier.named_arrays()}

    def copy(self) -> "OrderModel":
        return OrderModel(self.encoder.copy(), self.classifier.copy())

    def scores(self, elements) -> np.ndarray:
        return order_matrix(encode_set(elements, self.encoder), self.classifier)

    def loss_and_grads(self, elements, order: Sequence[int], offset: Optional[np.ndarray] = None):
        """Pairwise CE of ``scores + offset`` and gradients for every trainable array.

        ``offset`` holds guidance additions from the other modality; it is a
        constant here, so no gradient flows into it.
        """
        x = np.asarray(elements, dtype=np.float64)
        encoded = encode_set(x, self.encoder)
        s = order_matrix(encoded, self.classifier)
        refined = s if offset is None else s + offset
        loss, dscores = pairwise_loss(refined, order)
        cls_grads, dencoded = order_matrix_backward(encoded, self.classifier, s, dscores)
        enc_grads, _ = encode_set_backward(x, self.encoder, dencoded)
        grads = {f"encoder.{i}.{k}": v for i, blk in enumerate(enc_grads) for k, v in blk.items()}
        grads["classifier.weight"] = cls_grads["weight"]
        grads["classifier.bias"] = cls_grads["bias"]
        return loss, grads

    def loss(self, elements, order: Sequence[int], offset: Optional[np.ndarray] = None) -> float:
        s = self.scores(elements)
        return pairwise_loss(s if offset is None else s + offset, order)[0]


def init_model(d: int, heads: int, seed, n_blocks: int = 1, ff_mult: int = 2) -> OrderModel:
    rng = np.random.default_rng(seed)
    enc_seed, cls_seed = (int(v) for v in rng.integers(0, 2**31 - 1, size=2))
    return OrderModel(init_params(d, heads, enc_seed, n_blocks=n_blocks, ff_mult=ff_mult),
                      init_classifier(d, cls_seed))
