"""Multi-step cross-modal boosting at inference time."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import Permutation, StoryPair
from .decoder import decode_order
from .guidance import GuidanceConfig, refine_image, refine_text
from .metrics import Report, corpus_report
from .model import OrderModel


@dataclass(frozen=True)
class InferenceConfig:
    steps: int = 10
    early_stop: bool = True
    renormalize: bool = True
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"step count must be >= 0, got {self.steps}")

    @property
    def step_guidance(self) -> GuidanceConfig:
        return replace(self.guidance, renormalize=self.renormalize)


@dataclass
class StepRecord:
    step: int
    text_matrix: np.ndarray
    image_matrix: np.ndarray
    text_perm: Permutation
    image_perm: Permutation

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "text": {"matrix": self.text_matrix.tolist(), "permutation": self.text_perm},
            "image": {"matrix": self.image_matrix.tolist(), "permutation": self.image_perm},
        }


@dataclass
class InferenceResult:
    text_perm: Permutation
    image_perm: Permutation
    trace: list[StepRecord]

    @property
    def steps_run(self) -> int:
        return len(self.trace) - 1


def iterate_matrices(text_m, image_m, sim: Optional[np.ndarray], cfg: InferenceConfig) -> list[StepRecord]:
    """Jacobi-style refinement: step t uses only the step t-1 matrices of both sides."""
    a = np.asarray(text_m, dtype=np.float64)
    b = np.asarray(image_m, dtype=np.float64)
    trace = [StepRecord(0, a, b, decode_order(a), decode_order(b))]
    if cfg.steps > 0 and cfg.guidance.enabled and sim is None:
        raise ValueError("missing similarity: guidance needs a cross-modal similarity matrix")
    gcfg = cfg.step_guidance
    for t in range(1, cfg.steps + 1):
        a_next = refine_text(a, b, sim, gcfg)
        b_next = refine_image(b, a, sim, gcfg)
        a, b = a_next, b_next
        rec = StepRecord(t, a, b, decode_order(a), decode_order(b))
        prev = trace[-1]
        trace.append(rec)
        if cfg.early_stop and rec.text_perm == prev.text_perm and rec.image_perm == prev.image_perm:
            break
    return trace


def iterative_infer(story: StoryPair, text_model: OrderModel, image_model: OrderModel,
                    cfg: Optional[InferenceConfig] = None) -> InferenceResult:
    cfg = cfg or InferenceConfig()
    for model, es, label in ((text_model, story.text, "text"), (image_model, story.image, "image")):
        if model.width != es.dim:
            raise ValueError(f"width mismatch: {label} model d={model.width}, story {story.id!r} has d={es.dim}")
    a0 = text_model.scores(story.text.elements)
    b0 = image_model.scores(story.image.elements)
    trace = iterate_matrices(a0, b0, story.cross_sim, cfg)
    return InferenceResult(trace[-1].text_perm, trace[-1].image_perm, trace)


def evaluate_corpus(corpus: Sequence[StoryPair], text_model: OrderModel, image_model: OrderModel,
                    cfg: Optional[InferenceConfig] = None) -> dict[int, dict[str, Report]]:
    """Corpus metrics after every boost step ``0..steps``.

    Stories that stopped early keep their last permutations for later steps.
    """
    cfg = cfg or InferenceConfig()
    if not corpus:
        raise ValueError("empty corpus")
    per_step: dict[int, tuple[list, list]] = {t: ([], []) for t in range(cfg.steps + 1)}
    golds_t = [s.text.order for s in corpus]
    golds_i = [s.image.order for s in corpus]
    for story in corpus:
        trace = iterative_infer(story, text_model, image_model, cfg).trace
        for t in range(cfg.steps + 1):
            rec = trace[min(t, len(trace) - 1)]
            per_step[t][0].append(rec.text_perm)
            per_step[t][1].append(rec.image_perm)
    return {
        t: {"text": corpus_report(pt, golds_t), "image": corpus_report(pi, golds_i)}
        for t, (pt, pi) in per_step.items()
    }
