"""The complete forecasting network plus batching containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import ObservationWindow, Prediction, WindowSample
from ..exceptions import ConfigError
from .config import ModelConfig
from .decoder import HierarchicalDecoder, IntentionOutput, PredictionBatch
from .dyngcn import DynamicGCN
from .encoder import ObservationEncoder
from .layers import ParamSpec


@dataclass(eq=False)
class WindowBatch:
    """Stacked observation arrays for B windows."""

    gaze: np.ndarray       # (B, T, 3)
    head_rot: np.ndarray   # (B, T, 3, 3)
    head_pos: np.ndarray   # (B, T, 3)
    hand_pos: np.ndarray   # (B, T, 2, 3)
    centers: np.ndarray    # (B, T, N, 3)
    bbox: np.ndarray       # (B, T, N, 8, 3)
    semantic: np.ndarray   # (B, N, D_clip)

    @classmethod
    def from_observations(cls, observations: list[ObservationWindow]) -> "WindowBatch":
        return cls(
            gaze=np.stack([o.gaze for o in observations]),
            head_rot=np.stack([o.head_rot for o in observations]),
            head_pos=np.stack([o.head_pos for o in observations]),
            hand_pos=np.stack([o.hand_pos for o in observations]),
            centers=np.stack([o.centers for o in observations]),
            bbox=np.stack([o.bbox for o in observations]),
            semantic=np.stack([o.semantic for o in observations]),
        )

    @property
    def size(self) -> int:
        return self.gaze.shape[0]


@dataclass(eq=False)
class TargetBatch:
    """Stacked ground-truth future arrays for B windows."""

    gaze: np.ndarray            # (B, T_f, 3)
    head_rot: np.ndarray        # (B, T_f, 3, 3)
    head_pos: np.ndarray        # (B, T_f, 3)
    hand_pos: np.ndarray        # (B, T_f, 2, 3)
    object_centers: np.ndarray  # (B, T_f, N, 3)
    interaction: np.ndarray     # (B, N) in {0, 1}

    @classmethod
    def from_samples(cls, samples: list[WindowSample]) -> "TargetBatch":
        return cls(
            gaze=np.stack([s.future.gaze for s in samples]),
            head_rot=np.stack([s.future.head_rot for s in samples]),
            head_pos=np.stack([s.future.head_pos for s in samples]),
            hand_pos=np.stack([s.future.hand_pos for s in samples]),
            object_centers=np.stack([s.future.object_centers for s in samples]),
            interaction=np.stack([s.future.interaction for s in samples]),
        )


class BehaviorModel:
    """Encoder, intention stage, and decoder wired per one model config."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.encoder = ObservationEncoder(config)
        self.dyngcn = DynamicGCN(config)
        self.decoder = HierarchicalDecoder(config)

    def specs(self) -> list[ParamSpec]:
        out = list(self.encoder.specs())
        if not self.config.no_hierarchy:
            out.extend(self.dyngcn.specs())
        out.extend(self.decoder.specs())
        return out

    def check_batch(self, batch: WindowBatch) -> None:
        cfg = self.config
        b = batch.size
        expect = {
            "gaze": (b, cfg.t_history, 3),
            "head_rot": (b, cfg.t_history, 3, 3),
            "head_pos": (b, cfg.t_history, 3),
            "hand_pos": (b, cfg.t_history, 2, 3),
            "centers": (b, cfg.t_history, cfg.n_objects, 3),
            "bbox": (b, cfg.t_history, cfg.n_objects, 8, 3),
            "semantic": (b, cfg.n_objects, cfg.d_clip),
        }
        for name, shape in expect.items():
            actual = getattr(batch, name).shape
            if actual != shape:
                raise ConfigError(f"batch field {name}: shape {actual} does not match "
                                  f"model config expectation {shape}")

    def forward(self, params, batch: WindowBatch) -> tuple[IntentionOutput, PredictionBatch]:
        """Encode, select candidates, decode next states. Deterministic for
        fixed (params, batch); pure, so concurrent calls may share params."""
        self.check_batch(batch)
        encoded = self.encoder.encode(params, batch)
        intent = self.decoder.predict_intention(params, encoded, batch, self.dyngcn)
        pred = self.decoder.decode_next_states(params, intent, encoded, batch)
        return intent, pred

    def predict_window(self, params, observation: ObservationWindow) -> Prediction:
        """Single-window convenience wrapper returning plain arrays."""
        batch = WindowBatch.from_observations([observation])
        _, pred = self.forward(params, batch)
        return batch_to_predictions(pred)[0]


def batch_to_predictions(pred: PredictionBatch) -> list[Prediction]:
    out = []
    for i in range(pred.gaze.data.shape[0]):
        out.append(Prediction(
            gaze=pred.gaze.data[i].copy(),
            head_rot=pred.head_rot.data[i].copy(),
            head_pos=pred.head_pos.data[i].copy(),
            hand_pos=pred.hand_pos.data[i].copy(),
            object_centers=pred.object_centers.data[i].copy(),
            interaction=pred.interaction.data[i].copy(),
            selected_indices=pred.selected_indices[i].copy(),
        ))
    return out
