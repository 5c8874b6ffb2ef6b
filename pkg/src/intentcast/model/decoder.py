"""Hierarchical decoding: interaction-probability head, top-K candidate
selection, and next-state decoding through a deep spatio-temporal GCN with
frequency-domain residual prediction heads.

Trajectory heads emit coefficient residuals on top of the transformed
replicate-last-frame extension of the observed history, so a zero-weight
head predicts exact continuation of the final observed frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor
from ..dct import idct_tensor
from .config import ModelConfig
from .dyngcn import DynamicGCN
from .encoder import EncodedObservation, dct_batch
from .layers import MLP, Params, ResidualHead, STGCNLayer, node_concat, tile_time


@dataclass(eq=False)
class IntentionOutput:
    """Stage-one output: per-object probabilities and the selected candidates.

    ``top_k_indices`` holds the K highest-probability objects per window,
    ties broken toward the lower index. Under the no-hierarchy ablation
    ``p_int`` is None and all N objects pass through.
    """

    p_int: Tensor | None          # (B, N) in (0, 1)
    top_k_indices: np.ndarray     # (B, K) distinct indices
    f_k: Tensor                   # (B, T_h, K, D)
    h_global: Tensor              # (B, D)
    h_gaze: Tensor                # (B, T_h, D)
    h_obj: Tensor                 # (B, T_h, N, D)


@dataclass(eq=False)
class PredictionBatch:
    """Taped prediction tensors for a batch of windows."""

    gaze: Tensor            # (B, T_f, 3), rows unit norm
    head_rot: Tensor        # (B, T_f, 3, 3) raw matrices
    head_pos: Tensor        # (B, T_f, 3)
    hand_pos: Tensor        # (B, T_f, 2, 3)
    object_centers: Tensor  # (B, T_f, K, 3)
    interaction: Tensor     # (B, K) refined probabilities
    selected_indices: np.ndarray  # (B, K)
    p_int: Tensor | None    # (B, N) stage-one probabilities


def top_k_select(probs: np.ndarray, k: int) -> np.ndarray:
    """Indices of the K largest entries per row, ties toward lower index."""
    if k > probs.shape[-1]:
        raise ValueError(f"cannot select top {k} of {probs.shape[-1]} objects")
    order = np.argsort(-probs, axis=-1, kind="stable")
    return order[..., :k]


def pad_last_frame(history: np.ndarray, t_future: int) -> np.ndarray:
    """Extend (B, T, ...) history by repeating the final frame t_future times."""
    tail = np.repeat(history[:, -1:], t_future, axis=1)
    return np.concatenate([history, tail], axis=1)


class HierarchicalDecoder:
    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        t, tf, d, hidden = cfg.t_history, cfg.t_future, cfg.feature_dim, cfg.mlp_hidden
        self.k = cfg.n_objects if cfg.no_hierarchy else cfg.top_k
        self.n_nodes = 6 + self.k
        self.intent_mlp = MLP("intent.prob", (d, hidden, 1))
        self.layers = [STGCNLayer(f"dec.layer{i}", t, self.n_nodes, d)
                       for i in range(cfg.decoder_layers)]
        t_out = t + tf
        self.gaze_head = ResidualHead("head.gaze", d, hidden, 3, t, t_out)
        self.rot_head = ResidualHead("head.rot", d, hidden, 9, t, t_out)
        self.head_pos_head = ResidualHead("head.head_pos", d, hidden, 3, t, t_out)
        self.hand_head = ResidualHead("head.hand", d, hidden, 3, t, t_out)
        self.center_head = ResidualHead("head.center", d, hidden, 3, t, t_out)
        self.state_mlp = MLP("dec.state_prob", (d, hidden, 1))

    def specs(self):
        out = []
        if not self.cfg.no_hierarchy:
            out.extend(self.intent_mlp.specs())
        for block in (*self.layers, self.gaze_head, self.rot_head, self.head_pos_head,
                      self.hand_head, self.center_head, self.state_mlp):
            out.extend(block.specs())
        return out

    def predict_intention(self, params: Params, encoded: EncodedObservation,
                          batch, dyn: DynamicGCN) -> IntentionOutput:
        b, t, n, d = encoded.f_obj.shape
        if self.cfg.no_hierarchy:
            idx = np.broadcast_to(np.arange(n, dtype=np.int64), (b, n)).copy()
            return IntentionOutput(
                p_int=None, top_k_indices=idx, f_k=encoded.f_obj,
                h_global=encoded.f_global, h_gaze=encoded.f_gaze, h_obj=encoded.f_obj,
            )
        h_global, h_gaze, h_obj = dyn.forward(
            params, encoded.f_global, encoded.f_gaze, encoded.f_obj, batch
        )
        pooled = h_obj.mean(axis=1)                        # (B, N, D)
        p_int = self.intent_mlp.apply(params, pooled).reshape(b, n).sigmoid()
        idx = top_k_select(p_int.data, self.cfg.top_k)
        f_k = h_obj.take_along(idx[:, None, :, None], axis=2)
        return IntentionOutput(p_int=p_int, top_k_indices=idx, f_k=f_k,
                               h_global=h_global, h_gaze=h_gaze, h_obj=h_obj)

    def _head_series(self, params: Params, head: ResidualHead,
                     feats: Tensor, history: np.ndarray) -> Tensor:
        """Residual frequency prediction: transform the replicated-history
        extension, add the head's coefficient residuals, invert, and keep
        the future frames."""
        t, tf = self.cfg.t_history, self.cfg.t_future
        base = dct_batch(pad_last_frame(history, tf))
        coeffs = Tensor(base) + head.apply(params, feats)
        series = idct_tensor(coeffs, axis=1)
        return series[:, t:]

    def decode_next_states(self, params: Params, intent: IntentionOutput,
                           encoded: EncodedObservation, batch) -> PredictionBatch:
        cfg = self.cfg
        b, t, k, d = intent.f_k.shape
        nodes = node_concat([
            intent.h_gaze.reshape(b, t, 1, d),
            tile_time(intent.h_global, t),
            encoded.f_head_pos.reshape(b, t, 1, d),
            encoded.f_hand_pos,
            encoded.f_head_rot.reshape(b, t, 1, d),
            intent.f_k,
        ])
        x = nodes
        for layer in self.layers:
            x = layer.apply(params, x)

        gaze = self._head_series(params, self.gaze_head, x[:, :, 0:1, :],
                                 batch.gaze[:, :, None, :]).reshape(b, cfg.t_future, 3)
        norms = (gaze * gaze).sum(axis=-1, keepdims=True).sqrt().clip(1e-9, 1e9)
        gaze = gaze / norms

        rot = self._head_series(params, self.rot_head, x[:, :, 5:6, :],
                                batch.head_rot.reshape(b, t, 1, 9))
        rot = rot.reshape(b, cfg.t_future, 3, 3)

        head_pos = self._head_series(params, self.head_pos_head, x[:, :, 2:3, :],
                                     batch.head_pos[:, :, None, :]).reshape(b, cfg.t_future, 3)

        hands = self._head_series(params, self.hand_head, x[:, :, 3:5, :], batch.hand_pos)

        sel_centers = np.take_along_axis(
            batch.centers, intent.top_k_indices[:, None, :, None], axis=2
        )
        centers = self._head_series(params, self.center_head, x[:, :, 6:, :], sel_centers)

        probs = self.state_mlp.apply(params, x[:, :, 6:, :].mean(axis=1)).reshape(b, k).sigmoid()
        return PredictionBatch(
            gaze=gaze, head_rot=rot, head_pos=head_pos, hand_pos=hands,
            object_centers=centers, interaction=probs,
            selected_indices=intent.top_k_indices, p_int=intent.p_int,
        )
