"""Finite-difference verification suite over every differentiable component.

Each entry builds a tiny random instance of one component, forms a scalar
function of its parameters (or inputs), and compares reverse-mode gradients
against central differences. Run via the ``gradcheck`` CLI command or call
:func:`run_suite` directly.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import Tensor
from .dct import dct_tensor, idct_tensor
from .losses import loss_bce, loss_center, loss_gaze, loss_pos, loss_rot
from .model import BehaviorModel, ModelConfig, TargetBatch, WindowBatch
from .model.dyngcn import DynamicGCN
from .model.layers import MLP, STGCNLayer
from .model.params import init_params
from .losses import LossWeights, compute_losses
from .optim import grad_check, grad_check_params

TOLERANCE = 1e-4


def _tiny_config(**overrides) -> ModelConfig:
    base = dict(t_history=4, t_future=4, n_objects=4, top_k=2, feature_dim=4,
                encoder_layers=2, intention_layers=2, decoder_layers=2,
                d_clip=6, mlp_hidden=4)
    base.update(overrides)
    return ModelConfig(**base)


def _tiny_batch(cfg: ModelConfig, rng: np.random.Generator, b: int = 1):
    t, tf, n = cfg.t_history, cfg.t_future, cfg.n_objects
    gaze = rng.normal(size=(b, t, 3))
    gaze /= np.linalg.norm(gaze, axis=-1, keepdims=True)
    centers = rng.uniform(0.5, 2.5, size=(b, t, n, 3))
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    bbox = centers[:, :, :, None, :] + signs[None, None, None] * 0.04
    semantic = rng.normal(size=(b, n, cfg.d_clip))
    semantic /= np.linalg.norm(semantic, axis=-1, keepdims=True)
    batch = WindowBatch(
        gaze=gaze, head_rot=np.broadcast_to(np.eye(3), (b, t, 3, 3)).copy(),
        head_pos=rng.uniform(0.5, 2.5, size=(b, t, 3)),
        hand_pos=rng.uniform(0.5, 2.5, size=(b, t, 2, 3)),
        centers=centers, bbox=bbox, semantic=semantic,
    )
    fut_gaze = rng.normal(size=(b, tf, 3))
    fut_gaze /= np.linalg.norm(fut_gaze, axis=-1, keepdims=True)
    labels = (rng.uniform(size=(b, n)) < 0.4).astype(np.float64)
    labels[:, 0] = 1.0
    target = TargetBatch(
        gaze=fut_gaze, head_rot=np.broadcast_to(np.eye(3), (b, tf, 3, 3)).copy(),
        head_pos=rng.uniform(0.5, 2.5, size=(b, tf, 3)),
        hand_pos=rng.uniform(0.5, 2.5, size=(b, tf, 2, 3)),
        object_centers=rng.uniform(0.5, 2.5, size=(b, tf, n, 3)),
        interaction=labels,
    )
    return batch, target


def _unit(rng, shape):
    v = rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def component_checks(seed: int = 0) -> dict[str, Callable[[], float]]:
    rng = np.random.default_rng(seed)
    cfg = _tiny_config()
    checks: dict[str, Callable[[], float]] = {}

    def check_dct():
        x0 = rng.normal(size=(5, 2, 3))
        return grad_check(
            lambda x: (idct_tensor(dct_tensor(x.reshape(5, 2, 3), axis=0), axis=0) ** 2.0).sum(),
            x0.reshape(-1),
        )
    checks["dct_idct"] = check_dct

    def check_mlp():
        mlp = MLP("m", (3, 5, 2))
        params = init_params(mlp.specs(), seed)
        x = rng.normal(size=(4, 3))
        return grad_check_params(lambda: (mlp.apply(params, Tensor(x)) ** 2.0).sum(), params)
    checks["mlp"] = check_mlp

    def check_stgcn():
        layer = STGCNLayer("l", t=4, n_nodes=3, d=4)
        params = init_params(layer.specs(), seed + 1)
        x = rng.normal(size=(2, 4, 3, 4))
        return grad_check_params(lambda: (layer.apply(params, Tensor(x)) ** 2.0).sum(), params)
    checks["stgcn_layer"] = check_stgcn

    def check_dyngcn():
        dyn = DynamicGCN(cfg)
        params = init_params(dyn.specs(), seed + 2)
        batch, _ = _tiny_batch(cfg, rng)
        f_global = Tensor(rng.normal(size=(1, cfg.feature_dim)))
        f_gaze = Tensor(rng.normal(size=(1, cfg.t_history, cfg.feature_dim)))
        f_obj = Tensor(rng.normal(size=(1, cfg.t_history, cfg.n_objects, cfg.feature_dim)))

        def f():
            h_g, h_z, h_o = dyn.forward(params, f_global, f_gaze, f_obj, batch)
            return (h_o * h_o).sum() + (h_g * h_g).sum() + (h_z * h_z).sum()

        return grad_check_params(f, params)
    checks["dynamic_gcn"] = check_dyngcn

    def check_encoder():
        model = BehaviorModel(cfg)
        params = init_params(model.specs(), seed + 3)
        batch, _ = _tiny_batch(cfg, rng)
        enc_params = {k: v for k, v in params.items() if k.startswith("enc.")}

        def f():
            enc = model.encoder.encode(params, batch)
            return ((enc.f_gaze ** 2.0).sum() + (enc.f_obj ** 2.0).sum()
                    + (enc.f_global ** 2.0).sum() + (enc.f_hand_pos ** 2.0).sum()
                    + (enc.f_head_rot ** 2.0).sum())

        return grad_check_params(f, enc_params)
    checks["encoder"] = check_encoder

    def check_decoder():
        model = BehaviorModel(cfg)
        params = init_params(model.specs(), seed + 4)
        batch, target = _tiny_batch(cfg, rng)
        weights = LossWeights()
        dec_params = {k: v for k, v in params.items()
                      if k.startswith("dec.") or k.startswith("head.")}

        def f():
            _, pred = model.forward(params, batch)
            return compute_losses(pred, target, weights).total

        return grad_check_params(f, dec_params)
    checks["decoder"] = check_decoder

    def check_loss_gaze():
        gt = _unit(rng, (2, 3, 3))
        return grad_check(lambda x: loss_gaze(x.reshape(2, 3, 3), gt),
                          _unit(rng, (2, 3, 3)).reshape(-1))
    checks["loss_gaze"] = check_loss_gaze

    def check_loss_rot():
        gt = rng.normal(size=(2, 3, 3, 3))
        return grad_check(lambda x: loss_rot(x.reshape(2, 3, 3, 3), gt),
                          rng.normal(size=2 * 27))
    checks["loss_rot"] = check_loss_rot

    def check_loss_pos():
        gt_h = rng.normal(size=(1, 4, 3))
        gt_d = rng.normal(size=(1, 4, 2, 3))
        hand = Tensor(rng.normal(size=(1, 4, 2, 3)))
        return grad_check(lambda x: loss_pos(x.reshape(1, 4, 3), hand, gt_h, gt_d),
                          rng.normal(size=12))
    checks["loss_pos"] = check_loss_pos

    def check_loss_center():
        gt = rng.normal(size=(1, 4, 2, 3))
        return grad_check(lambda x: loss_center(x.reshape(1, 4, 2, 3), gt),
                          rng.normal(size=24))
    checks["loss_center"] = check_loss_center

    def check_loss_vel():
        gt = rng.normal(size=(1, 4, 3))

        def f(x):
            series = x.reshape(1, 4, 3)
            vel = series[:, 1:] - series[:, :-1]
            diff = vel - np.diff(gt, axis=1)
            return ((diff * diff).sum(axis=-1).sqrt()).mean()

        return grad_check(f, rng.normal(size=12))
    checks["loss_vel"] = check_loss_vel

    def check_loss_bce():
        y = (rng.uniform(size=8) < 0.5).astype(float)
        return grad_check(lambda x: loss_bce(x, y), rng.uniform(0.2, 0.8, size=8))
    checks["loss_bce"] = check_loss_bce

    def check_full_model():
        model = BehaviorModel(cfg)
        params = init_params(model.specs(), seed + 5)
        batch, target = _tiny_batch(cfg, rng)
        weights = LossWeights()

        def f():
            _, pred = model.forward(params, batch)
            return compute_losses(pred, target, weights).total

        return grad_check_params(f, params)
    checks["full_model"] = check_full_model

    return checks


def run_suite(seed: int = 0, tolerance: float = TOLERANCE) -> tuple[dict[str, float], bool]:
    """Run every component check; returns (per-component errors, all_passed)."""
    results = {}
    ok = True
    for name, check in component_checks(seed).items():
        err = check()
        results[name] = err
        ok = ok and err < tolerance
    return results, ok
