"""Adaptive graph construction over [pose, gaze, objects] and the dynamic
GCN that propagates features through it.

The (N+2) x (N+2) weight matrix combines three geometry-derived blocks —
gaze-object weights from viewing angles, position-object weights from
proximity, object-object weights from pairwise distance — plus a fixed
pose-gaze weight of 1. It is computed once per window from the raw
observation; only the gaze-weight MLP contributes learnable parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, concat, matmul
from ..exceptions import NonFiniteError
from .layers import MLP, DynamicGCNLayer, Params, node_concat, tile_time

ACOS_CLAMP = 1.0 - 1e-12


@dataclass(eq=False)
class GazeGeometry:
    """Viewing angle and head-object displacement per frame per object."""

    theta: np.ndarray      # (B, T, N) radians in [0, pi]
    offsets: np.ndarray    # (B, T, N, 3) center minus head
    distances: np.ndarray  # (B, T, N) meters


@dataclass(eq=False)
class ProximityGeometry:
    d_position: np.ndarray   # (B, N) min keypoint distance, frame-averaged
    d_object: np.ndarray     # (B, N, N) pairwise distance, frame-averaged


@dataclass(eq=False)
class DynamicAdjacency:
    gaze_weights: Tensor        # (B, N), positive
    position_weights: np.ndarray  # (B, N) in (0, 1]
    object_weights: np.ndarray    # (B, N, N) symmetric, unit diagonal
    matrix: Tensor              # (B, N+2, N+2) node order [pose, gaze, objects]


def gaze_geometry(gaze: np.ndarray, head_pos: np.ndarray, centers: np.ndarray) -> GazeGeometry:
    """Angle between the gaze ray and each head-to-object direction.

    A center coinciding with the head has no direction; its angle is defined
    as pi/2 with distance 0 rather than raising.
    """
    offsets = centers - head_pos[:, :, None, :]
    dist = np.linalg.norm(offsets, axis=-1)
    dots = np.sum(gaze[:, :, None, :] * offsets, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(dist > 1e-12, dots / np.where(dist > 1e-12, dist, 1.0), 0.0)
    theta = np.arccos(np.clip(cos, -ACOS_CLAMP, ACOS_CLAMP))
    return GazeGeometry(theta=theta, offsets=offsets, distances=dist)


def position_object_weights(head_pos: np.ndarray, hand_pos: np.ndarray,
                            centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Frame-averaged minimum distance to {head, left hand, right hand},
    mapped through exp(-d). Returns (d_position, weights)."""
    t = head_pos.shape[1]
    keypoints = np.stack([head_pos, hand_pos[:, :, 0], hand_pos[:, :, 1]], axis=2)  # (B,T,3,3)
    dists = np.linalg.norm(centers[:, :, None, :, :] - keypoints[:, :, :, None, :], axis=-1)
    summed = dists.sum(axis=1)            # (B, 3, N)
    d_position = summed.min(axis=1) / t   # (B, N)
    return d_position, np.exp(-d_position)


def object_object_weights(centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Frame-averaged pairwise center distance mapped through exp(-d)."""
    diff = centers[:, :, :, None, :] - centers[:, :, None, :, :]
    d_object = np.linalg.norm(diff, axis=-1).mean(axis=1)  # (B, N, N)
    return d_object, np.exp(-d_object)


def proximity_geometry(head_pos, hand_pos, centers) -> ProximityGeometry:
    d_p, _ = position_object_weights(head_pos, hand_pos, centers)
    d_o, _ = object_object_weights(centers)
    return ProximityGeometry(d_position=d_p, d_object=d_o)


def assemble(gaze_weights: Tensor, position_weights: np.ndarray,
             object_weights: np.ndarray) -> Tensor:
    """Assemble the full symmetric weight matrix.

    Layout with node order [pose, gaze, object_0 .. object_{N-1}]:
    pose-gaze entries are fixed at 1, pose-object rows carry the proximity
    weights, gaze-object rows the gaze weights, and the object block the
    pairwise weights (unit diagonal). Pose and gaze get unit self loops so
    every degree is strictly positive.
    """
    if not (np.isfinite(position_weights).all() and np.isfinite(object_weights).all()):
        raise NonFiniteError("non-finite adjacency components")
    b, n = position_weights.shape
    ones = Tensor(np.ones((b, 1)))
    a_p = Tensor(position_weights)
    row_pose = concat([ones, ones, a_p], axis=1).reshape(b, 1, n + 2)
    row_gaze = concat([ones, ones, gaze_weights], axis=1).reshape(b, 1, n + 2)
    obj_rows = concat(
        [a_p.reshape(b, n, 1), gaze_weights.reshape(b, n, 1), Tensor(object_weights)], axis=2
    )
    return concat([row_pose, row_gaze, obj_rows], axis=1)


def normalize_adjacency(a: Tensor) -> Tensor:
    """Symmetric degree normalization D^(-1/2) A D^(-1/2)."""
    degrees = a.sum(axis=-1)
    if np.any(degrees.data <= 0):
        raise ValueError("adjacency has a non-positive degree; normalization undefined")
    dinv = degrees ** -0.5
    shape = a.shape
    return a * dinv.reshape(shape[:-1] + (1,)) * dinv.reshape(shape[:-2] + (1, shape[-1]))


def sgcn_update(x: Tensor, a: Tensor, w: Tensor) -> Tensor:
    """One normalized spatial GCN update: D^(-1/2) A D^(-1/2) X W."""
    return matmul(matmul(normalize_adjacency(a), x), w)


class DynamicGCN:
    """The intention-stage graph network over pose, gaze, and object nodes."""

    def __init__(self, cfg):
        self.cfg = cfg
        t, d = cfg.t_history, cfg.feature_dim
        self.gaze_weight_mlp = MLP("intent.gaze_weight", (2 * t, cfg.mlp_hidden, 1))
        self.layers = [DynamicGCNLayer(f"intent.layer{i}", t, d)
                       for i in range(cfg.intention_layers)]

    def specs(self):
        out = []
        if not self.cfg.vanilla_gcn:
            out.extend(self.gaze_weight_mlp.specs())
        for layer in self.layers:
            out.extend(layer.specs())
        if self.cfg.vanilla_gcn:
            n = self.cfg.n_objects + 2
            from .layers import ParamSpec
            out.append(ParamSpec("intent.adj", (n, n), "ones"))
        return out

    def gaze_object_weights(self, params: Params, geom: GazeGeometry) -> Tensor:
        """Per-object positive weight from the full angle/distance history.

        The T angle values and T distances concatenate into one 2T feature
        vector per object; a shared MLP plus softplus keeps outputs > 0 so
        the degree normalization stays well defined.
        """
        b, t, n = geom.theta.shape
        feats = np.concatenate(
            [np.swapaxes(geom.theta, 1, 2), np.swapaxes(geom.distances, 1, 2)], axis=2
        )  # (B, N, 2T)
        raw = self.gaze_weight_mlp.apply(params, Tensor(feats))
        return raw.reshape(b, n).softplus()

    def adjacency(self, params: Params, batch) -> DynamicAdjacency:
        geom = gaze_geometry(batch.gaze, batch.head_pos, batch.centers)
        a_g = self.gaze_object_weights(params, geom)
        _, a_p = position_object_weights(batch.head_pos, batch.hand_pos, batch.centers)
        _, a_o = object_object_weights(batch.centers)
        return DynamicAdjacency(
            gaze_weights=a_g, position_weights=a_p, object_weights=a_o,
            matrix=assemble(a_g, a_p, a_o),
        )

    def forward(self, params: Params, f_global: Tensor, f_gaze: Tensor,
                f_obj: Tensor, batch) -> tuple[Tensor, Tensor, Tensor]:
        """Run the layer stack; returns (h_global, h_gaze, h_obj) with the
        same shapes as the inputs. The adjacency is built once per window."""
        b, t, n, d = f_obj.shape
        if self.cfg.vanilla_gcn:
            a = params["intent.adj"].reshape(1, n + 2, n + 2).broadcast_to((b, n + 2, n + 2))
        else:
            a = self.adjacency(params, batch).matrix
        a_norm = normalize_adjacency(a)
        x = node_concat([tile_time(f_global, t), f_gaze.reshape(b, t, 1, d), f_obj])
        for layer in self.layers:
            x = layer.apply(params, x, a_norm)
        h_global = x[:, :, 0, :].mean(axis=1)
        h_gaze = x[:, :, 1, :]
        h_obj = x[:, :, 2:, :]
        return h_global, h_gaze, h_obj
