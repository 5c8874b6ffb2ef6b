import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intentcast.data import FutureStates, Prediction
from intentcast.metrics import (
    MetricsReport,
    angular_metrics,
    average_precision,
    evaluate_pairs,
    geodesic_angle_deg,
    l2_metrics,
    polar_rotation,
    scatter_scores,
    vector_angle_deg,
)

from conftest import random_rotations


def ap_bruteforce(scores, labels):
    """Independent oracle: enumerate every rank cutoff in the stable
    descending-score order and recount precision from scratch."""
    order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
    ranked = np.asarray(labels)[order] > 0
    n_pos = int(ranked.sum())
    total = 0.0
    for cutoff in range(1, len(ranked) + 1):
        if ranked[cutoff - 1]:
            tp = int(ranked[:cutoff].sum())
            total += tp / cutoff
    return total / n_pos * 100.0


def quaternion_angle_deg(r_a, r_b):
    """Independent oracle: rotation angle via quaternion dot product."""
    def to_quat(m):
        t = np.trace(m)
        if t > 0:
            s = np.sqrt(t + 1.0) * 2
            return np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s,
                             (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k]) * 2
        q = np.zeros(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[i + 1] = 0.25 * s
        q[j + 1] = (m[j, i] + m[i, j]) / s
        q[k + 1] = (m[k, i] + m[i, k]) / s
        return q

    qa, qb = to_quat(r_a), to_quat(r_b)
    dot = abs(float(qa @ qb)) / (np.linalg.norm(qa) * np.linalg.norm(qb))
    return np.degrees(2.0 * np.arccos(min(1.0, dot)))


def make_pair(seed=0, t=6, n=5, k=3):
    rng = np.random.default_rng(seed)
    gaze = rng.normal(size=(t, 3))
    gaze /= np.linalg.norm(gaze, axis=-1, keepdims=True)
    rots = random_rotations(rng, (t,))
    gt = FutureStates(
        gaze=gaze, head_rot=rots,
        head_pos=rng.normal(size=(t, 3)), hand_pos=rng.normal(size=(t, 2, 3)),
        object_centers=rng.normal(size=(t, n, 3)),
        interaction=(rng.uniform(size=n) < 0.4).astype(float),
    )
    idx = rng.permutation(n)[:k]
    pred = Prediction(
        gaze=gt.gaze.copy(), head_rot=gt.head_rot.copy(),
        head_pos=gt.head_pos.copy(), hand_pos=gt.hand_pos.copy(),
        object_centers=gt.object_centers[:, idx].copy(),
        interaction=rng.uniform(size=k), selected_indices=idx,
    )
    return pred, gt


def test_exact_prediction_gives_zero_errors():
    pred, gt = make_pair()
    hand, head, center = l2_metrics(pred, gt)
    assert hand == head == center == 0.0
    direction, gaze = angular_metrics(pred, gt)
    assert direction == pytest.approx(0.0, abs=1e-6)
    assert gaze == pytest.approx(0.0, abs=1e-6)


def test_hand_offset_unit_conversion():
    pred, gt = make_pair(seed=1)
    pred.hand_pos = gt.hand_pos + np.array([0.1, 0.0, 0.0])
    hand, _, _ = l2_metrics(pred, gt)
    assert hand == pytest.approx(100.0, abs=1e-9)


def test_l2_matches_scalar_oracle():
    pred, gt = make_pair(seed=2)
    rng = np.random.default_rng(3)
    pred.hand_pos = pred.hand_pos + rng.normal(scale=0.05, size=pred.hand_pos.shape)
    pred.head_pos = pred.head_pos + rng.normal(scale=0.05, size=pred.head_pos.shape)
    pred.object_centers = pred.object_centers + rng.normal(scale=0.05,
                                                           size=pred.object_centers.shape)
    hand, head, center = l2_metrics(pred, gt)
    t = gt.gaze.shape[0]
    hand_oracle = np.mean([
        np.linalg.norm(pred.hand_pos[i, j] - gt.hand_pos[i, j])
        for i in range(t) for j in range(2)
    ]) * 1000
    center_oracle = np.mean([
        np.linalg.norm(pred.object_centers[i, j] - gt.object_centers[i, pred.selected_indices[j]])
        for i in range(t) for j in range(len(pred.selected_indices))
    ]) * 1000
    assert hand == pytest.approx(hand_oracle, rel=1e-12)
    assert center == pytest.approx(center_oracle, rel=1e-12)


def test_angular_90_degrees_about_z():
    rz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert geodesic_angle_deg(rz, np.eye(3)) == pytest.approx(90.0, abs=1e-9)


def test_angular_matches_quaternion_oracle():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = random_rotations(rng, (1,))[0]
        b = random_rotations(rng, (1,))[0]
        assert geodesic_angle_deg(a, b) == pytest.approx(quaternion_angle_deg(a, b), abs=1e-9)
        assert geodesic_angle_deg(a, b) == pytest.approx(geodesic_angle_deg(b, a), abs=1e-12)


def test_vector_angle_symmetry():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=3), rng.normal(size=3)
    assert vector_angle_deg(a, b) == pytest.approx(vector_angle_deg(b, a), abs=1e-12)


def test_polar_projection_restores_rotation():
    rng = np.random.default_rng(6)
    rots = random_rotations(rng, (20,))
    noisy = rots + rng.normal(scale=0.05, size=rots.shape)
    proj = polar_rotation(noisy)
    gram = np.matmul(np.swapaxes(proj, -1, -2), proj)
    assert np.max(np.abs(gram - np.eye(3))) < 1e-9
    assert np.allclose(np.linalg.det(proj), 1.0, atol=1e-9)


def test_angular_metrics_projects_before_comparison():
    pred, gt = make_pair(seed=7)
    pred.head_rot = gt.head_rot * 2.5  # scaled matrices are not rotations
    direction, _ = angular_metrics(pred, gt)
    assert direction == pytest.approx(0.0, abs=1e-6)


def test_average_precision_perfect_and_worked_example():
    assert average_precision(np.array([0.9, 0.5, 0.3]), np.array([1, 1, 0])) == 100.0
    ap = average_precision(np.array([0.9, 0.8, 0.3]), np.array([1, 0, 1]))
    assert ap == pytest.approx(83.33, abs=0.01)
    assert ap == pytest.approx((1.0 + 2.0 / 3.0) / 2.0 * 100.0, abs=1e-9)


def test_average_precision_requires_positive():
    with pytest.raises(ValueError):
        average_precision(np.array([0.5, 0.4]), np.array([0, 0]))


def test_all_equal_scores_alternating_labels_match_oracle():
    scores = np.full(8, 0.5)
    labels = np.array([1, 0, 1, 0, 1, 0, 1, 0])
    assert average_precision(scores, labels) == pytest.approx(
        ap_bruteforce(scores, labels), abs=1e-12
    )


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=64), st.integers(min_value=0, max_value=2**31 - 1))
def test_average_precision_matches_bruteforce(n, seed):
    rng = np.random.default_rng(seed)
    scores = rng.uniform(size=n)
    if rng.uniform() < 0.3:
        scores = np.round(scores, 1)  # force ties
    labels = (rng.uniform(size=n) < 0.5).astype(int)
    if labels.sum() == 0:
        labels[rng.integers(n)] = 1
    assert average_precision(scores, labels) == pytest.approx(
        ap_bruteforce(scores, labels), abs=1e-12
    )


def test_scatter_scores_zero_for_unselected():
    pred, _ = make_pair(seed=8, n=6, k=2)
    scattered = scatter_scores(pred, 6)
    assert scattered.shape == (6,)
    chosen = set(pred.selected_indices.tolist())
    for i in range(6):
        if i in chosen:
            assert scattered[i] > 0
        else:
            assert scattered[i] == 0.0


def test_evaluate_pairs_order_invariant():
    # ties are broken by pooled input order, so give each object a distinct
    # score; with tie-free scores every metric is order invariant
    pairs = [make_pair(seed=s) for s in range(6)]
    rng = np.random.default_rng(9)
    pool = rng.permutation(len(pairs) * 5) / 100.0
    scores = [pool[5 * s:5 * (s + 1)] for s in range(len(pairs))]
    forward = evaluate_pairs(pairs, scores=scores)
    backward = evaluate_pairs(pairs[::-1], scores=scores[::-1])
    for name in MetricsReport.COLUMNS:
        assert getattr(forward, name) == pytest.approx(getattr(backward, name), abs=1e-9)
    assert forward.windows == 6


def test_evaluate_pairs_deterministic():
    pairs = [make_pair(seed=s) for s in range(4)]
    a = evaluate_pairs(pairs)
    b = evaluate_pairs(pairs)
    assert a == b
