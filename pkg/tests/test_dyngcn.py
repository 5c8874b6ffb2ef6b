import math

import numpy as np
import pytest

from intentcast.autodiff import Tensor
from intentcast.model.dyngcn import (
    DynamicGCN,
    assemble,
    gaze_geometry,
    normalize_adjacency,
    object_object_weights,
    position_object_weights,
    sgcn_update,
)
from intentcast.model.params import init_params
from intentcast.optim import grad_check_params

from conftest import random_batch, tiny_config, tiny_setup


# -- scalar brute-force oracles ------------------------------------------------


def theta_oracle(gaze, head, centers):
    b, t, n = centers.shape[:3]
    out = np.zeros((b, t, n))
    for bi in range(b):
        for ti in range(t):
            for oi in range(n):
                d = centers[bi, ti, oi] - head[bi, ti]
                norm = math.sqrt(float(d @ d))
                if norm < 1e-12:
                    out[bi, ti, oi] = math.pi / 2
                    continue
                cos = float(gaze[bi, ti] @ d) / norm
                cos = max(-1.0 + 1e-12, min(1.0 - 1e-12, cos))
                out[bi, ti, oi] = math.acos(cos)
    return out


def d_p_oracle(head, hands, centers):
    b, t, n = centers.shape[:3]
    out = np.zeros((b, n))
    for bi in range(b):
        for oi in range(n):
            sums = [0.0, 0.0, 0.0]
            for ti in range(t):
                c = centers[bi, ti, oi]
                sums[0] += math.dist(c, head[bi, ti])
                sums[1] += math.dist(c, hands[bi, ti, 0])
                sums[2] += math.dist(c, hands[bi, ti, 1])
            out[bi, oi] = min(sums) / t
    return out


def d_o_oracle(centers):
    b, t, n = centers.shape[:3]
    out = np.zeros((b, n, n))
    for bi in range(b):
        for i in range(n):
            for j in range(n):
                out[bi, i, j] = sum(
                    math.dist(centers[bi, ti, i], centers[bi, ti, j]) for ti in range(t)
                ) / t
    return out


def random_geometry(seed, b=2, t=5, n=4):
    rng = np.random.default_rng(seed)
    gaze = rng.normal(size=(b, t, 3))
    gaze /= np.linalg.norm(gaze, axis=-1, keepdims=True)
    head = rng.uniform(0, 3, size=(b, t, 3))
    hands = rng.uniform(0, 3, size=(b, t, 2, 3))
    centers = rng.uniform(0, 3, size=(b, t, n, 3))
    return gaze, head, hands, centers


def test_gaze_angle_pointing_at_object():
    gaze = np.array([[[1.0, 0.0, 0.0]]])
    head = np.zeros((1, 1, 3))
    centers = np.array([[[[2.0, 0.0, 0.0], [-3.0, 0.0, 0.0]]]])
    geom = gaze_geometry(gaze, head, centers)
    assert geom.theta[0, 0, 0] == pytest.approx(0.0, abs=1e-5)
    assert geom.theta[0, 0, 1] == pytest.approx(math.pi, abs=1e-5)
    assert geom.distances[0, 0, 0] == pytest.approx(2.0)


def test_gaze_angle_degenerate_center_at_head():
    gaze = np.array([[[0.0, 0.0, 1.0]]])
    head = np.full((1, 1, 3), 1.5)
    centers = np.full((1, 1, 1, 3), 1.5)
    geom = gaze_geometry(gaze, head, centers)
    assert geom.theta[0, 0, 0] == pytest.approx(math.pi / 2)
    assert geom.distances[0, 0, 0] == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_geometry_matches_bruteforce(seed):
    gaze, head, hands, centers = random_geometry(seed)
    geom = gaze_geometry(gaze, head, centers)
    assert np.max(np.abs(geom.theta - theta_oracle(gaze, head, centers))) < 1e-12
    d_p, a_p = position_object_weights(head, hands, centers)
    assert np.max(np.abs(d_p - d_p_oracle(head, hands, centers))) < 1e-12
    assert np.max(np.abs(a_p - np.exp(-d_p_oracle(head, hands, centers)))) < 1e-12
    d_o, a_o = object_object_weights(centers)
    assert np.max(np.abs(d_o - d_o_oracle(centers))) < 1e-12
    assert np.max(np.abs(a_o - np.exp(-d_o_oracle(centers)))) < 1e-12


def test_position_weights_closed_forms():
    # object glued to the head: d = 0 -> weight 1
    head = np.zeros((1, 3, 3))
    hands = np.ones((1, 3, 2, 3))
    centers = np.zeros((1, 3, 1, 3))
    _, a_p = position_object_weights(head, hands, centers)
    assert a_p[0, 0] == pytest.approx(1.0)
    # nearest keypoint at constant distance ln 2 -> weight 0.5
    centers = np.zeros((1, 3, 1, 3))
    centers[..., 0] = math.log(2.0)
    _, a_p = position_object_weights(head, hands, centers)
    assert a_p[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_object_weights_closed_forms():
    centers = np.zeros((1, 4, 2, 3))
    centers[:, :, 1, 0] = 1.0  # two static objects 1 m apart
    _, a_o = object_object_weights(centers)
    assert np.allclose(np.diagonal(a_o, axis1=1, axis2=2), 1.0)
    assert a_o[0, 0, 1] == pytest.approx(0.36787944117144233, abs=1e-12)
    assert a_o[0, 0, 1] == a_o[0, 1, 0]


def test_assemble_layout_and_degrees():
    rng = np.random.default_rng(0)
    n = 4
    a_g = Tensor(rng.uniform(0.1, 2.0, size=(1, n)))
    a_p = rng.uniform(0.1, 1.0, size=(1, n))
    d_o, a_o = object_object_weights(rng.uniform(0, 2, size=(1, 3, n, 3)))
    mat = assemble(a_g, a_p, a_o).data[0]
    assert mat.shape == (n + 2, n + 2)
    assert mat[0, 1] == 1.0 and mat[1, 0] == 1.0
    assert mat[0, 0] == 1.0 and mat[1, 1] == 1.0
    assert np.array_equal(mat, mat.T)
    assert np.allclose(mat[1, 2:], a_g.data[0])
    assert np.allclose(mat[0, 2:], a_p[0])
    assert np.allclose(mat[2:, 2:], a_o[0])
    # degree vector equals brute-force row sums
    degrees = np.array([sum(mat[i, j] for j in range(n + 2)) for i in range(n + 2)])
    assert np.max(np.abs(mat.sum(axis=1) - degrees)) < 1e-12
    assert (degrees > 0).all()


def test_identical_histories_get_identical_gaze_weights():
    cfg = tiny_config()
    dyn = DynamicGCN(cfg)
    params = init_params(dyn.specs(), seed=3)
    batch, _ = random_batch(cfg, 1, seed=2)
    centers = batch.centers.copy()
    centers[:, :, 1] = centers[:, :, 0]  # object 1 mirrors object 0 exactly
    geom = gaze_geometry(batch.gaze, batch.head_pos, centers)
    weights = dyn.gaze_object_weights(params, geom)
    assert weights.data[0, 0] == pytest.approx(weights.data[0, 1], abs=1e-15)
    assert (weights.data > 0).all()


def test_sgcn_identity_propagation():
    x = Tensor(np.arange(6.0).reshape(3, 2))
    out = sgcn_update(x, Tensor(np.eye(3)), Tensor(np.eye(2)))
    assert np.allclose(out.data, x.data, atol=1e-12)


def test_sgcn_hand_computed_three_node_example():
    # A = [[1,1,0],[1,1,2],[0,2,1]], X = [[1,0],[0,1],[2,-1]], W = [[1,2],[0,1]]
    a = Tensor(np.array([[1.0, 1, 0], [1, 1, 2], [0, 2, 1]]))
    x = Tensor(np.array([[1.0, 0], [0, 1], [2, -1]]))
    w = Tensor(np.array([[1.0, 2], [0, 1]]))
    expected = np.array([
        [0.5000000000000001, 1.353553390593274],
        [1.5082539289725252, 2.6891575887554247],
        [0.6666666666666666, 1.5773502691896257],
    ])
    assert np.max(np.abs(sgcn_update(x, a, w).data - expected)) < 1e-12


def test_sgcn_scale_invariance():
    rng = np.random.default_rng(1)
    a = rng.uniform(0.1, 1.0, size=(4, 4))
    a = a + a.T + np.eye(4)
    x = rng.normal(size=(4, 3))
    base = sgcn_update(Tensor(x), Tensor(a), Tensor(np.eye(3))).data
    scaled = sgcn_update(Tensor(x), Tensor(7.0 * a), Tensor(np.eye(3))).data
    assert np.max(np.abs(base - scaled)) < 1e-12


def test_normalized_operator_spectrum_bounded():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.uniform(0.05, 1.0, size=(6, 6))
        a = (a + a.T) / 2 + np.eye(6)
        norm = normalize_adjacency(Tensor(a)).data
        eig = np.linalg.eigvalsh(norm)
        assert eig.min() >= -1.0 - 1e-10 and eig.max() <= 1.0 + 1e-10


def test_zero_degree_rejected():
    a = Tensor(np.zeros((2, 2)))
    with pytest.raises(ValueError, match="degree"):
        normalize_adjacency(a)


def test_dynamic_forward_shapes_and_layer_count():
    model, params, batch, _ = tiny_setup(seed=4)
    cfg = model.config
    assert len(model.dyngcn.layers) == cfg.intention_layers
    encoded = model.encoder.encode(params, batch)
    h_global, h_gaze, h_obj = model.dyngcn.forward(
        params, encoded.f_global, encoded.f_gaze, encoded.f_obj, batch
    )
    assert h_global.shape == encoded.f_global.shape
    assert h_gaze.shape == encoded.f_gaze.shape
    assert h_obj.shape == encoded.f_obj.shape


def test_object_permutation_equivariance():
    model, params, batch, _ = tiny_setup(seed=6, b=1)
    perm = np.array([2, 0, 3, 1])
    encoded = model.encoder.encode(params, batch)
    h_g, h_z, h_obj = model.dyngcn.forward(
        params, encoded.f_global, encoded.f_gaze, encoded.f_obj, batch
    )

    batch.centers = batch.centers[:, :, perm]
    batch.bbox = batch.bbox[:, :, perm]
    batch.semantic = batch.semantic[:, perm]
    encoded_p = model.encoder.encode(params, batch)
    h_g2, h_z2, h_obj2 = model.dyngcn.forward(
        params, encoded_p.f_global, encoded_p.f_gaze, encoded_p.f_obj, batch
    )
    assert np.allclose(h_obj2.data, h_obj.data[:, :, perm], atol=1e-10)
    assert np.allclose(h_g2.data, h_g.data, atol=1e-10)
    assert np.allclose(h_z2.data, h_z.data, atol=1e-10)


def test_gaze_weight_gradients_match_finite_differences():
    cfg = tiny_config()
    dyn = DynamicGCN(cfg)
    params = init_params(dyn.specs(), seed=7)
    batch, _ = random_batch(cfg, 1, seed=8)
    geom = gaze_geometry(batch.gaze, batch.head_pos, batch.centers)
    fg_params = {k: v for k, v in params.items() if k.startswith("intent.gaze_weight")}

    def f():
        w = dyn.gaze_object_weights(params, geom)
        return (w * w).sum()

    assert grad_check_params(f, fg_params) < 1e-4


def test_full_dyngcn_gradients():
    model, params, batch, _ = tiny_setup(seed=9, b=1)

    def f():
        encoded = model.encoder.encode(params, batch)
        h_g, h_z, h_obj = model.dyngcn.forward(
            params, encoded.f_global, encoded.f_gaze, encoded.f_obj, batch
        )
        return (h_obj * h_obj).sum() + (h_g * h_g).sum()

    dyn_params = {k: v for k, v in params.items() if k.startswith("intent.")}
    assert grad_check_params(f, dyn_params) < 1e-4
