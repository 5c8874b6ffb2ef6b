"""Observation encoding: frequency transform, modality MLPs, and the
head/hands spatio-temporal GCN with a global aggregation node.

All input time series are converted to the frequency domain first; the
"time" axis of every encoded feature therefore indexes frequency
components of the observed history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, concat
from ..dct import basis
from .layers import MLP, Params, STGCNLayer, node_concat


@dataclass(eq=False)
class EncodedObservation:
    """Encoded history features; extents follow the model config."""

    f_gaze: Tensor       # (B, T_h, D)
    f_head_rot: Tensor   # (B, T_h, D)
    f_head_pos: Tensor   # (B, T_h, D)
    f_hand_pos: Tensor   # (B, T_h, 2, D)
    f_global: Tensor     # (B, D)
    f_obj: Tensor        # (B, T_h, N, D)


# positions are encoded relative to the final observed head position; this
# keeps the frequency coefficients in the tanh-friendly range and makes the
# features translation invariant
POSITION_SCALE = 0.5


def dct_batch(arr: np.ndarray) -> np.ndarray:
    """Plain-numpy DCT along axis 1 of a constant (B, T, ...) array."""
    t = arr.shape[1]
    return np.moveaxis(np.tensordot(basis(t), arr, axes=(1, 1)), 0, 1)


class ObservationEncoder:
    def __init__(self, cfg):
        d, hidden, t = cfg.feature_dim, cfg.mlp_hidden, cfg.t_history
        self.cfg = cfg
        self.gaze_mlp = MLP("enc.gaze", (3, hidden, d))
        self.rot_mlp = MLP("enc.rot", (9, hidden, d))
        self.traj_proj = MLP("enc.traj_in", (3, d))
        self.traj_layers = [STGCNLayer(f"enc.traj{i}", t, 4, d)
                            for i in range(cfg.encoder_layers)]
        self.bbox_mlp = MLP("enc.bbox", (24, hidden, d))
        self.center_mlp = MLP("enc.center", (3, hidden, d))
        self.sem_proj = MLP("enc.sem", (cfg.d_clip, d))

    def specs(self):
        out = []
        for block in (self.gaze_mlp, self.rot_mlp, self.traj_proj,
                      *self.traj_layers, self.bbox_mlp, self.center_mlp, self.sem_proj):
            out.extend(block.specs())
        return out

    def encode_objects(self, params: Params, bbox: np.ndarray, centers: np.ndarray,
                       semantic: np.ndarray, origin: np.ndarray | None = None) -> Tensor:
        """Fuse geometric and semantic object features by elementwise
        addition: MLP(bbox) + MLP(centers) + projected label embedding."""
        b, t, n = bbox.shape[:3]
        if origin is None:
            origin = np.zeros((b, 3))
        shift = origin[:, None, None, :]
        bbox_rel = (bbox - shift[:, :, :, None, :]) * POSITION_SCALE
        centers_rel = (centers - shift) * POSITION_SCALE
        bbox_f = Tensor(dct_batch(bbox_rel.reshape(b, t, n, 24)))
        centers_f = Tensor(dct_batch(centers_rel))
        geo = self.bbox_mlp.apply(params, bbox_f) + self.center_mlp.apply(params, centers_f)
        sem = self.sem_proj.apply(params, Tensor(semantic))  # (B, N, D)
        return geo + sem.reshape(b, 1, n, self.cfg.feature_dim)

    def encode(self, params: Params, batch) -> EncodedObservation:
        b, t = batch.gaze.shape[:2]
        d = self.cfg.feature_dim
        origin = batch.head_pos[:, -1]

        f_gaze = self.gaze_mlp.apply(params, Tensor(dct_batch(batch.gaze)))
        rot_flat = batch.head_rot.reshape(b, t, 9)
        f_rot = self.rot_mlp.apply(params, Tensor(dct_batch(rot_flat)))

        head_rel = (batch.head_pos - origin[:, None, :]) * POSITION_SCALE
        hand_rel = (batch.hand_pos - origin[:, None, None, :]) * POSITION_SCALE
        traj = np.concatenate([head_rel[:, :, None, :], hand_rel], axis=2)
        nodes = self.traj_proj.apply(params, Tensor(dct_batch(traj)))   # (B, T, 3, D)
        global_node = nodes.mean(axis=2, keepdims=True)                 # (B, T, 1, D)
        x = node_concat([nodes, global_node])                           # (B, T, 4, D)
        for layer in self.traj_layers:
            x = layer.apply(params, x)

        f_head_pos = x[:, :, 0, :]
        f_hand_pos = concat([x[:, :, 1:2, :], x[:, :, 2:3, :]], axis=2)
        f_global = x[:, :, 3, :].mean(axis=1)

        f_obj = self.encode_objects(params, batch.bbox, batch.centers, batch.semantic,
                                    origin=origin)
        return EncodedObservation(
            f_gaze=f_gaze, f_head_rot=f_rot, f_head_pos=f_head_pos,
            f_hand_pos=f_hand_pos, f_global=f_global, f_obj=f_obj,
        )
