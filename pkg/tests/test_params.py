import numpy as np
import pytest

from intentcast.exceptions import CheckpointError
from intentcast.model import BehaviorModel
from intentcast.model.layers import MLP, ParamSpec
from intentcast.model.params import (
    init_params,
    load_checkpoint,
    save_checkpoint,
    validate_params,
)

from conftest import random_batch, tiny_config


def test_same_seed_identical_params():
    specs = MLP("m", (16, 8, 2)).specs()
    a = init_params(specs, seed=5)
    b = init_params(specs, seed=5)
    for name in a:
        assert np.array_equal(a[name].data, b[name].data)
    c = init_params(specs, seed=6)
    assert not np.array_equal(a["m.w0"].data, c["m.w0"].data)


def test_fan_in_bound():
    specs = [ParamSpec("w", (16, 40), "weight", fan_in=16)]
    params = init_params(specs, seed=0)
    assert np.abs(params["w"].data).max() <= 0.25
    assert np.abs(params["w"].data).max() > 0.2  # actually fills the range


def test_bias_zero_and_adjacency_near_identity():
    specs = [ParamSpec("b", (7,), "bias"), ParamSpec("a", (5, 5), "adjacency"),
             ParamSpec("o", (3, 3), "ones")]
    params = init_params(specs, seed=1)
    assert np.array_equal(params["b"].data, np.zeros(7))
    assert np.abs(params["a"].data - np.eye(5)).max() <= 0.01
    assert np.array_equal(params["o"].data, np.ones((3, 3)))


def test_forward_finite_at_init_over_100_seeds():
    cfg = tiny_config()
    model = BehaviorModel(cfg)
    batch, _ = random_batch(cfg, 1, seed=3)
    for seed in range(100):
        params = init_params(model.specs(), seed=seed)
        _, pred = model.forward(params, batch)
        for field in (pred.gaze, pred.head_rot, pred.head_pos, pred.hand_pos,
                      pred.object_centers, pred.interaction):
            assert np.isfinite(field.data).all(), f"seed {seed}"


def test_checkpoint_rejects_corruption(tmp_path):
    cfg = tiny_config()
    model = BehaviorModel(cfg)
    params = init_params(model.specs(), seed=0)
    path = tmp_path / "c.bin"
    save_checkpoint(path, cfg, params)
    config, loaded = load_checkpoint(path)
    assert config == cfg
    validate_params(model.specs(), loaded)

    blob = bytearray(path.read_bytes())
    blob[6] = 2
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)

    path.write_bytes(b"XXXXXXXXXXXX")
    with pytest.raises(CheckpointError, match="not a checkpoint"):
        load_checkpoint(path)

    save_checkpoint(path, cfg, params)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_validate_params_detects_mismatch():
    cfg = tiny_config()
    model = BehaviorModel(cfg)
    params = init_params(model.specs(), seed=0)
    extra = dict(params)
    extra["rogue"] = params[next(iter(params))]
    with pytest.raises(CheckpointError, match="rogue"):
        validate_params(model.specs(), extra)
