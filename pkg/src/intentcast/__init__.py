"""Intention-aware forecasting of situated human behavior.

Given a short history of gaze, head pose, hand trajectories, and scene
objects, the library predicts future gaze, head, hand, and object-center
trajectories plus per-object interaction probabilities, using a two-stage
pipeline: a coarse interaction-intention ranking over all objects followed
by detailed decoding over the top candidates.
"""

from .data import (
    FutureStates,
    ObservationWindow,
    Prediction,
    SessionFile,
    WindowSample,
    WindowSpec,
    make_hard_split,
    pad_objects,
    slice_windows,
)
from .embeddings import LabelEmbeddingTable
from .estimator import SituatedBehaviorForecaster
from .losses import LossWeights
from .metrics import MetricsReport, average_precision, evaluate_pairs
from .model import BehaviorModel, ModelConfig
from .scenegen import SceneConfig, generate_corpus, generate_session
from .sessionio import read_session, write_session
from .training import TrainConfig, run_ablation_suite, train

__version__ = "0.1.0"

__all__ = [
    "BehaviorModel",
    "FutureStates",
    "LabelEmbeddingTable",
    "LossWeights",
    "MetricsReport",
    "ModelConfig",
    "ObservationWindow",
    "Prediction",
    "SceneConfig",
    "SessionFile",
    "SituatedBehaviorForecaster",
    "TrainConfig",
    "WindowSample",
    "WindowSpec",
    "average_precision",
    "evaluate_pairs",
    "generate_corpus",
    "generate_session",
    "make_hard_split",
    "pad_objects",
    "read_session",
    "run_ablation_suite",
    "slice_windows",
    "train",
    "write_session",
]
