"""Cross-modal guided pairwise ordering with iterative boosting.

Two paired modalities (sentences and images) are each ordered by a set
encoder plus a pairwise order classifier; confident pairwise predictions of
one modality refine the other's order-score matrix through a cross-modal
similarity matrix, during training and over several inference steps.
"""

__version__ = "0.1.0"

from .core import ElementSet, Modality, StoryPair, validate_story
from .decoder import brute_force_decode, decode_order
from .guidance import GuidanceConfig, GuidanceMode, cgo_mu, mask_matrix
from .inference import InferenceConfig, evaluate_corpus, iterative_infer
from .metrics import accuracy, corpus_report, kendall_tau, pmr
from .model import OrderModel, init_model
from .synthetic import SynthConfig, generate_corpus, regime
from .trainer import TrainConfig, train

__all__ = [
    "ElementSet", "Modality", "StoryPair", "validate_story",
    "brute_force_decode", "decode_order",
    "GuidanceConfig", "GuidanceMode", "cgo_mu", "mask_matrix",
    "InferenceConfig", "evaluate_corpus", "iterative_infer",
    "accuracy", "corpus_report", "kendall_tau", "pmr",
    "OrderModel", "init_model",
    "SynthConfig", "generate_corpus", "regime",
    "TrainConfig", "train",
]
