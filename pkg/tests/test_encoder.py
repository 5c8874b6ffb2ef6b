import numpy as np
import pytest

from intentcast.exceptions import ConfigError
from intentcast.model import BehaviorModel, ModelConfig
from intentcast.model.params import init_params
from intentcast.optim import grad_check_params

from conftest import random_batch, tiny_setup


def test_full_size_output_shapes():
    cfg = ModelConfig()  # T_h=15, N=48, D=16
    model = BehaviorModel(cfg)
    params = init_params(model.specs(), seed=0)
    batch, _ = random_batch(cfg, 1, seed=1)
    enc = model.encoder.encode(params, batch)
    assert enc.f_gaze.shape == (1, 15, 16)
    assert enc.f_head_rot.shape == (1, 15, 16)
    assert enc.f_head_pos.shape == (1, 15, 16)
    assert enc.f_hand_pos.shape == (1, 15, 2, 16)
    assert enc.f_global.shape == (1, 16)
    assert enc.f_obj.shape == (1, 15, 48, 16)


def test_zero_parameters_give_finite_outputs():
    model, params, batch, _ = tiny_setup(seed=2)
    for p in params.values():
        p.data = np.zeros_like(p.data)
    enc = model.encoder.encode(params, batch)
    for field in (enc.f_gaze, enc.f_head_rot, enc.f_head_pos, enc.f_hand_pos,
                  enc.f_global, enc.f_obj):
        assert np.isfinite(field.data).all()


def test_mismatched_batch_rejected():
    model, params, batch, _ = tiny_setup(seed=3)
    batch.gaze = batch.gaze[:, :3]  # wrong T
    with pytest.raises(ConfigError, match="gaze"):
        model.forward(params, batch)


def test_semantic_path_distinguishes_labels():
    model, params, batch, _ = tiny_setup(seed=4, b=1)
    # identical geometry for objects 0 and 1, different semantics
    batch.centers[:, :, 1] = batch.centers[:, :, 0]
    batch.bbox[:, :, 1] = batch.bbox[:, :, 0]
    assert not np.allclose(batch.semantic[:, 0], batch.semantic[:, 1])
    f_obj = model.encoder.encode_objects(params, batch.bbox, batch.centers, batch.semantic)
    assert not np.allclose(f_obj.data[:, :, 0], f_obj.data[:, :, 1])
    # identical semantics too -> identical rows
    batch.semantic[:, 1] = batch.semantic[:, 0]
    f_obj = model.encoder.encode_objects(params, batch.bbox, batch.centers, batch.semantic)
    assert np.allclose(f_obj.data[:, :, 0], f_obj.data[:, :, 1], atol=1e-15)


def test_object_permutation_equivariance():
    model, params, batch, _ = tiny_setup(seed=5, b=2)
    f_obj = model.encoder.encode_objects(params, batch.bbox, batch.centers, batch.semantic)
    perm = np.array([3, 1, 0, 2])
    f_perm = model.encoder.encode_objects(
        params, batch.bbox[:, :, perm], batch.centers[:, :, perm], batch.semantic[:, perm]
    )
    assert np.allclose(f_perm.data, f_obj.data[:, :, perm], atol=1e-12)


def test_encoder_gradients_match_finite_differences():
    model, params, batch, _ = tiny_setup(seed=6, b=1)

    def f():
        enc = model.encoder.encode(params, batch)
        out = (enc.f_gaze * enc.f_gaze).sum() + (enc.f_obj * enc.f_obj).sum() \
            + (enc.f_global * enc.f_global).sum() + (enc.f_hand_pos * enc.f_hand_pos).sum()
        return out

    enc_params = {k: v for k, v in params.items() if k.startswith("enc.")}
    assert grad_check_params(f, enc_params) < 1e-4
