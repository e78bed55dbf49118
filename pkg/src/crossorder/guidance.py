"""Cross-modal guided order-matrix updating.

Confident pairwise predictions from a source modality are routed through
the similarity matrix (row = sentence, column = image) and added onto the
target modality's order matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class GuidanceMode(str, enum.Enum):
    OFF = "off"
    RELATIVE_ORDER = "relative-order"


class Axis(str, enum.Enum):
    # ROW: source is text, read a row of C to find the image index
    ROW = "row"
    # COLUMN: source is image, read a column of C to find the sentence index
    COLUMN = "column"


@dataclass(frozen=True)
class GuidanceConfig:
    theta_text_source: float = 0.9
    theta_image_source: float = 0.8
    renormalize: bool = False
    mode: GuidanceMode = GuidanceMode.RELATIVE_ORDER

    def __post_init__(self):
        object.__setattr__(self, "mode", GuidanceMode(self.mode))
        for name in ("theta_text_source", "theta_image_source"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def enabled(self) -> bool:
        return self.mode is not GuidanceMode.OFF


def mask_matrix(source: np.ndarray, theta: float) -> np.ndarray:
    """Keep entries strictly above ``theta``; zero everything else and the diagonal."""
    src = np.asarray(source, dtype=np.float64)
    out = np.where(src > theta, src, 0.0)
    np.fill_diagonal(out, 0.0)
    return out


def align_argmax(sim: np.ndarray, source_index: int, axis: Axis | str = Axis.ROW) -> int:
    """Most similar counterpart of one source element; ties go to the smallest index."""
    sim = np.asarray(sim)
    axis = Axis(axis)
    limit = sim.shape[0] if axis is Axis.ROW else sim.shape[1]
    if not 0 <= source_index < limit:
        raise IndexError(f"index {source_index} out of range for {axis.value} axis of size {limit}")
    vec = sim[source_index] if axis is Axis.ROW else sim[:, source_index]
    # np.argmax returns the first maximal position
    return int(np.argmax(vec))


def alignment_map(sim: np.ndarray, axis: Axis | str = Axis.ROW) -> np.ndarray:
    sim = np.asarray(sim)
    axis = Axis(axis)
    return np.argmax(sim, axis=1) if axis is Axis.ROW else np.argmax(sim, axis=0)


def renormalize_pairs(m: np.ndarray) -> np.ndarray:
    """Rescale each unordered pair so ``m[i, j] + m[j, i] == 1``, keeping their ratio."""
    m = np.asarray(m, dtype=np.float64)
    total = m + m.T
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(total > 0, m / np.where(total > 0, total, 1.0), 0.5)
    np.fill_diagonal(out, 0.0)
    return out


def _accumulate(out: np.ndarray, source: np.ndarray, sim: np.ndarray, theta: float, axis: Axis) -> np.ndarray:
    src = np.asarray(source, dtype=np.float64)
    sim = np.asarray(sim)
    src_size = sim.shape[0] if axis is Axis.ROW else sim.shape[1]
    tgt_size = sim.shape[1] if axis is Axis.ROW else sim.shape[0]
    if src.shape != (src_size, src_size):
        raise ValueError(f"shape mismatch: source {src.shape} vs similarity {sim.shape} ({axis.value})")
    if tgt_size != out.shape[0]:
        raise ValueError(f"shape mismatch: target size {out.shape[0]} vs similarity {sim.shape} ({axis.value})")
    masked = mask_matrix(src, theta)
    idx = alignment_map(sim, axis)
    # nonzero() is row-major, so additions happen in the same order as a p/q double loop
    p, q = np.nonzero(masked)
    i, j = idx[p], idx[q]
    keep = i != j  # collisions would land on the diagonal
    np.add.at(out, (i[keep], j[keep]), src[p[keep], q[keep]])
    return out


def guidance_additions(target_size: int, source: np.ndarray, sim: np.ndarray, theta: float,
                       axis: Axis | str = Axis.ROW) -> np.ndarray:
    """Matrix of amounts one guidance pass would add onto the target."""
    return _accumulate(np.zeros((target_size, target_size)), source, sim, theta, Axis(axis))


def cgo_mu(target: np.ndarray, source: np.ndarray, sim: np.ndarray, theta: float,
           cfg: GuidanceConfig | None = None, axis: Axis | str = Axis.ROW) -> np.ndarray:
    """Refine ``target`` with confident pairs from ``source``.

    ``axis=ROW`` is the text-guides-image direction (source is M x M, target
    N x N, ``sim`` M x N); ``axis=COLUMN`` is image-guides-text.
    """
    cfg = cfg or GuidanceConfig()
    tgt = np.array(target, dtype=np.float64)
    if tgt.ndim != 2 or tgt.shape[0] != tgt.shape[1]:
        raise ValueError(f"shape mismatch: target must be square, got {tgt.shape}")
    if not cfg.enabled:
        return tgt
    out = _accumulate(tgt, source, sim, theta, Axis(axis))
    if cfg.renormalize:
        return renormalize_pairs(out)
    np.fill_diagonal(out, 0.0)
    return out


def refine_image(image_m, text_m, sim, cfg: GuidanceConfig) -> np.ndarray:
    """B' = CGO-MU(B | A, C) with the text-source threshold."""
    return cgo_mu(image_m, text_m, sim, cfg.theta_text_source, cfg, Axis.ROW)


def refine_text(text_m, image_m, sim, cfg: GuidanceConfig) -> np.ndarray:
    """A' = CGO-MU(A | B, C) with the image-source threshold."""
    return cgo_mu(text_m, image_m, sim, cfg.theta_image_source, cfg, Axis.COLUMN)
