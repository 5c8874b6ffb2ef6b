import numpy as np
import pytest

from intentcast.data import SessionFile
from intentcast.model import BehaviorModel, ModelConfig, TargetBatch, WindowBatch
from intentcast.model.params import init_params
from intentcast.scenegen import SceneConfig, generate_session


def random_rotations(rng, shape):
    """Random proper rotations via QR with determinant fix."""
    flat = int(np.prod(shape))
    out = np.zeros((flat, 3, 3))
    for i in range(flat):
        q, r = np.linalg.qr(rng.normal(size=(3, 3)))
        q *= np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 2] *= -1
        out[i] = q
    return out.reshape(shape + (3, 3))


def random_batch(cfg: ModelConfig, b: int, seed: int = 0):
    """Random valid-shape (WindowBatch, TargetBatch) pair for model tests."""
    rng = np.random.default_rng(seed)
    t, tf, n = cfg.t_history, cfg.t_future, cfg.n_objects
    gaze = rng.normal(size=(b, t, 3))
    gaze /= np.linalg.norm(gaze, axis=-1, keepdims=True)
    centers = rng.uniform(0.5, 3.0, size=(b, t, n, 3))
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    bbox = centers[:, :, :, None, :] + signs[None, None, None] * 0.04
    semantic = rng.normal(size=(b, n, cfg.d_clip))
    semantic /= np.linalg.norm(semantic, axis=-1, keepdims=True)
    batch = WindowBatch(
        gaze=gaze,
        head_rot=random_rotations(rng, (b, t)),
        head_pos=rng.uniform(0.5, 3.0, size=(b, t, 3)),
        hand_pos=rng.uniform(0.5, 3.0, size=(b, t, 2, 3)),
        centers=centers,
        bbox=bbox,
        semantic=semantic,
    )
    fut_gaze = rng.normal(size=(b, tf, 3))
    fut_gaze /= np.linalg.norm(fut_gaze, axis=-1, keepdims=True)
    labels = (rng.uniform(size=(b, n)) < 0.3).astype(np.float64)
    labels[:, 0] = 1.0  # at least one positive per window
    target = TargetBatch(
        gaze=fut_gaze,
        head_rot=random_rotations(rng, (b, tf)),
        head_pos=rng.uniform(0.5, 3.0, size=(b, tf, 3)),
        hand_pos=rng.uniform(0.5, 3.0, size=(b, tf, 2, 3)),
        object_centers=rng.uniform(0.5, 3.0, size=(b, tf, n, 3)),
        interaction=labels,
    )
    return batch, target


def tiny_config(**overrides) -> ModelConfig:
    base = dict(t_history=4, t_future=4, n_objects=4, top_k=2, feature_dim=4,
                encoder_layers=2, intention_layers=2, decoder_layers=2,
                d_clip=6, mlp_hidden=4)
    base.update(overrides)
    return ModelConfig(**base)


def tiny_setup(seed: int = 0, b: int = 2, **overrides):
    cfg = tiny_config(**overrides)
    model = BehaviorModel(cfg)
    params = init_params(model.specs(), seed=seed)
    batch, target = random_batch(cfg, b, seed=seed + 1)
    return model, params, batch, target


def make_tiny_session(n_frames=70, n_objects=4, seed=0, rate_hz=30.0) -> SessionFile:
    """Hand-built valid session with scripted interactions for data-layer tests."""
    rng = np.random.default_rng(seed)
    gaze = rng.normal(size=(n_frames, 3))
    gaze /= np.linalg.norm(gaze, axis=1, keepdims=True)
    head_rot = np.broadcast_to(np.eye(3), (n_frames, 3, 3)).copy()
    head_pos = np.cumsum(rng.normal(scale=0.01, size=(n_frames, 3)), axis=0) + [2.0, 2.0, 1.6]
    hand_pos = head_pos[:, None, :] + np.array([[-0.2, 0.1, -0.5], [0.2, 0.1, -0.5]])
    centers = np.broadcast_to(
        rng.uniform(0.5, 3.5, size=(n_objects, 3)), (n_frames, n_objects, 3)
    ).copy()
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    bbox = centers[:, :, None, :] + signs[None, None] * 0.03
    interaction = np.zeros((n_frames, n_objects), dtype=np.uint8)
    interaction[40:55, 1] = 1  # one mid-session episode on object 1
    labels = ["mug", "dish", "can", "book"][:n_objects]
    return SessionFile(
        rate_hz=rate_hz, labels=labels, d_clip=8,
        gaze=gaze, head_rot=head_rot, head_pos=head_pos, hand_pos=hand_pos,
        centers=centers, bbox=bbox, interaction=interaction,
    )


@pytest.fixture
def tiny_session():
    return make_tiny_session()


@pytest.fixture(scope="session")
def small_scene_session():
    """One generated session with few objects, reused across test modules."""
    cfg = SceneConfig(seed=11, n_objects=6, episodes=2, d_clip=8)
    return generate_session(cfg)
