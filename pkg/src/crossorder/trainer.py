"""Alternating two-modality training with cross-modal guidance."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Modality, StoryPair, validate_story
from .guidance import Axis, GuidanceConfig, guidance_additions
from .model import OrderModel, init_model

log = logging.getLogger(__name__)

SIND_BATCH_SIZE = 64
TACOS_BATCH_SIZE = 32
DESK_BATCH_SIZE = 16


class Alternation(str, enum.Enum):
    PER_BATCH = "per-batch"
    PER_EPOCH = "per-epoch"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2e-4
    batch_size: int = SIND_BATCH_SIZE
    epochs: int = 20
    seed: int = 0
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    ib_in_training: bool = True
    alternation: Alternation = Alternation.PER_BATCH
    heads: int = 8
    n_blocks: int = 1
    ff_mult: int = 2

    def __post_init__(self):
        object.__setattr__(self, "alternation", Alternation(self.alternation))
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")

    @property
    def uses_guidance(self) -> bool:
        return self.ib_in_training and self.guidance.enabled


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    skipped: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState, lr: float):
    """Bias-corrected Adam update, applied in place to ``params``.

    A non-finite gradient skips the whole step and bumps ``state.skipped``.
    Returns ``(params, state)``.
    """
    if set(grads) != set(params):
        raise ValueError(f"shape mismatch: gradient keys {sorted(set(grads) ^ set(params))} differ from params")
    for k, g in grads.items():
        if np.shape(g) != params[k].shape:
            raise ValueError(f"shape mismatch for {k}: grad {np.shape(g)} vs param {params[k].shape}")
    if not all(np.all(np.isfinite(g)) for g in grads.values()):
        state.skipped += 1
        log.error("non-finite gradient at step %d; update skipped", state.step + 1)
        return params, state

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for k, p in params.items():
        g = np.asarray(grads[k], dtype=np.float64)
        if k not in state.m:
            state.m[k] = np.zeros_like(p)
            state.v[k] = np.zeros_like(p)
        m, v = state.m[k], state.v[k]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


@dataclass
class EpochStats:
    epoch: int
    text_loss: float
    image_loss: float
    skipped_steps: int = 0

    def line(self) -> str:
        return f"epoch={self.epoch} text_loss={self.text_loss:.6f} image_loss={self.image_loss:.6f}"


@dataclass
class TrainState:
    text_model: OrderModel
    image_model: OrderModel
    text_opt: AdamState = field(default_factory=AdamState)
    image_opt: AdamState = field(default_factory=AdamState)
    history: list[EpochStats] = field(default_factory=list)


def init_state(text_width: int, image_width: int, cfg: TrainConfig) -> TrainState:
    return TrainState(
        init_model(text_width, cfg.heads, [cfg.seed, 0], cfg.n_blocks, cfg.ff_mult),
        init_model(image_width, cfg.heads, [cfg.seed, 1], cfg.n_blocks, cfg.ff_mult),
    )


def check_corpus(corpus: Sequence[StoryPair], cfg: Optional[TrainConfig] = None):
    if not corpus:
        raise ValueError("empty corpus")
    for story in corpus:
        bad = validate_story(story)
        if bad:
            raise ValueError(f"story {story.id!r}: " + "; ".join(bad))
        if cfg is not None and cfg.uses_guidance and story.cross_sim is None:
            raise ValueError(f"story {story.id!r}: missing similarity (needed for guidance in training)")


def _batch_grads(model: OrderModel, counterpart: OrderModel, batch: Sequence[StoryPair],
                 modality: Modality, cfg: TrainConfig):
    """Mean loss and mean gradients of ``model`` over one batch, counterpart frozen."""
    total_loss = 0.0
    total: dict[str, np.ndarray] = {}
    for story in batch:
        own, other = story.side(modality), story.side(_other(modality))
        offset = None
        if cfg.uses_guidance:
            source = counterpart.scores(other.elements)
            if modality is Modality.IMAGE:
                offset = guidance_additions(own.size, source, story.cross_sim,
                                            cfg.guidance.theta_text_source, Axis.ROW)
            else:
                offset = guidance_additions(own.size, source, story.cross_sim,
                                            cfg.guidance.theta_image_source, Axis.COLUMN)
        loss, grads = model.loss_and_grads(own.elements, own.order, offset)
        total_loss += loss
        for k, g in grads.items():
            if k in total:
                total[k] += g
            else:
                total[k] = np.array(g, dtype=np.float64)
    n = len(batch)
    return total_loss / n, {k: g / n for k, g in total.items()}


def _other(modality: Modality) -> Modality:
    return Modality.IMAGE if modality is Modality.TEXT else Modality.TEXT


def _update(state: TrainState, batch, modality: Modality, cfg: TrainConfig) -> float:
    if modality is Modality.IMAGE:
        model, other, opt = state.image_model, state.text_model, state.image_opt
    else:
        model, other, opt = state.text_model, state.image_model, state.text_opt
    loss, grads = _batch_grads(model, other, batch, modality, cfg)
    adam_step(model.named_arrays(), grads, opt, cfg.learning_rate)
    return loss


def _batches(n: int, cfg: TrainConfig, epoch: int) -> list[np.ndarray]:
    order = np.random.default_rng([cfg.seed, 7, epoch]).permutation(n)
    return [order[i:i + cfg.batch_size] for i in range(0, n, cfg.batch_size)]


def train_epoch(corpus: Sequence[StoryPair], state: TrainState, cfg: TrainConfig, epoch: int = 0) -> EpochStats:
    """One pass over the corpus, updating image then text model on every batch.

    With ``alternation=per-epoch`` all image updates of the epoch run first and
    the text updates follow.
    """
    check_corpus(corpus, cfg)
    skipped_before = state.text_opt.skipped + state.image_opt.skipped
    batches = [[corpus[i] for i in idx] for idx in _batches(len(corpus), cfg, epoch)]
    img_losses, txt_losses = [], []
    if cfg.alternation is Alternation.PER_BATCH:
        for batch in batches:
            img_losses.append(_update(state, batch, Modality.IMAGE, cfg))
            txt_losses.append(_update(state, batch, Modality.TEXT, cfg))
    else:
        for batch in batches:
            img_losses.append(_update(state, batch, Modality.IMAGE, cfg))
        for batch in batches:
            txt_losses.append(_update(state, batch, Modality.TEXT, cfg))
    stats = EpochStats(
        epoch=epoch + 1,
        text_loss=float(np.mean(txt_losses)),
        image_loss=float(np.mean(img_losses)),
        skipped_steps=state.text_opt.skipped + state.image_opt.skipped - skipped_before,
    )
    state.history.append(stats)
    return stats


def train(corpus: Sequence[StoryPair], cfg: TrainConfig, state: Optional[TrainState] = None,
          on_epoch: Optional[Callable[[EpochStats], None]] = None) -> TrainState:
    check_corpus(corpus, cfg)
    if state is None:
        state = init_state(corpus[0].text.dim, corpus[0].image.dim, cfg)
    start = len(state.history)
    for epoch in range(start, start + cfg.epochs):
        stats = train_epoch(corpus, state, cfg, epoch)
        if not (np.isfinite(stats.text_loss) and np.isfinite(stats.image_loss)):
            raise FloatingPointError(f"non-finite loss at epoch {stats.epoch}")
        log.info(stats.line())
        if on_epoch is not None:
            on_epoch(stats)
    return state


def corpus_loss(corpus: Sequence[StoryPair], model: OrderModel, modality: Modality) -> float:
    """Mean uni-modal pairwise CE of ``model`` over the corpus (no guidance)."""
    return float(np.mean([model.loss(s.side(modality).elements, s.side(modality).order) for s in corpus]))
