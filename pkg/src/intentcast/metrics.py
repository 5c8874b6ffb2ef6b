"""Evaluation metrics: millimeter L2 errors, angular errors in degrees, and
average precision of per-object interaction scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FutureStates, Prediction


@dataclass
class MetricsReport:
    hand_mm: float
    head_dist_mm: float
    head_dir_deg: float
    gaze_deg: float
    object_center_mm: float
    object_ap: float        # percentage in [0, 100]
    windows: int

    COLUMNS = ("hand_mm", "head_dist_mm", "head_dir_deg", "gaze_deg",
               "object_center_mm", "object_ap")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self.COLUMNS} | {"windows": self.windows}


def polar_rotation(mat: np.ndarray) -> np.ndarray:
    """Nearest proper rotation (orthogonal polar factor) of trailing 3x3s."""
    u, _, vt = np.linalg.svd(mat)
    det = np.linalg.det(u @ vt)
    fix = np.zeros(mat.shape[:-2] + (3, 3))
    fix[...] = np.eye(3)
    fix[..., 2, 2] = np.sign(det)
    return u @ fix @ vt


def geodesic_angle_deg(r_a: np.ndarray, r_b: np.ndarray) -> np.ndarray:
    """Rotation angle between proper rotations, acos((trace(RaT Rb) - 1)/2)."""
    trace = np.einsum("...ij,...ij->...", r_a, r_b)
    cos = np.clip((trace - 1.0) / 2.0, -1.0, 1.0)
    return np.degrees(np.arccos(cos))


def vector_angle_deg(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    cos = np.clip(np.sum(a * b, axis=-1) / (na * nb), -1.0, 1.0)
    return np.degrees(np.arccos(cos))


def l2_metrics(pred: Prediction, gt: FutureStates) -> tuple[float, float, float]:
    """Mean L2 errors in millimeters: (hands, head, selected object centers).

    The object metric compares the predicted trajectories of whichever
    objects were selected against the ground truth of the same indices; it
    measures trajectory accuracy regardless of which objects carry labels.
    """
    hand = np.linalg.norm(pred.hand_pos - gt.hand_pos, axis=-1).mean()
    head = np.linalg.norm(pred.head_pos - gt.head_pos, axis=-1).mean()
    gt_sel = gt.object_centers[:, pred.selected_indices, :]
    center = np.linalg.norm(pred.object_centers - gt_sel, axis=-1).mean()
    return hand * 1000.0, head * 1000.0, center * 1000.0


def angular_metrics(pred: Prediction, gt: FutureStates) -> tuple[float, float]:
    """(head direction error, gaze error) in degrees, frame-averaged.

    Predicted head matrices are projected to their nearest rotation before
    the geodesic comparison; gaze uses the plain vector angle.
    """
    if not (np.isfinite(pred.head_rot).all() and np.isfinite(pred.gaze).all()):
        raise ValueError("non-finite prediction passed to angular metrics")
    head = geodesic_angle_deg(polar_rotation(pred.head_rot), gt.head_rot).mean()
    gaze = vector_angle_deg(pred.gaze, gt.gaze).mean()
    return float(head), float(gaze)


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the precision-recall curve, as a percentage.

    All (score, label) pairs rank by descending score with ties kept in
    stable input order; AP sums precision at each positive's rank divided by
    the number of positives.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must align")
    n_pos = int(np.sum(labels > 0))
    if n_pos == 0:
        raise ValueError("average precision is undefined without positive labels")
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order] > 0
    hits = np.cumsum(ranked)
    ranks = np.arange(1, len(ranked) + 1)
    return float(np.sum(hits[ranked] / ranks[ranked]) / n_pos * 100.0)


def scatter_scores(pred: Prediction, n_objects: int) -> np.ndarray:
    """Refined probabilities scattered to all N objects; objects the
    selection stage dropped score 0, so missed selections hurt AP."""
    out = np.zeros(n_objects)
    out[pred.selected_indices] = pred.interaction
    return out


def evaluate_pairs(pairs: list[tuple[Prediction, FutureStates]],
                   scores: list[np.ndarray] | None = None) -> MetricsReport:
    """Aggregate metrics over evaluation windows.

    ``scores`` optionally overrides the per-window length-N interaction
    scores pooled into the AP (defaults to the scattered refined
    probabilities of each prediction). AP pools all (score, label) pairs
    globally across windows.
    """
    if not pairs:
        raise ValueError("no evaluation windows")
    n_objects = pairs[0][1].object_centers.shape[1]
    hands, heads, centers, dirs, gazes = [], [], [], [], []
    all_scores, all_labels = [], []
    for i, (pred, gt) in enumerate(pairs):
        hand, head, center = l2_metrics(pred, gt)
        direction, gaze = angular_metrics(pred, gt)
        hands.append(hand)
        heads.append(head)
        centers.append(center)
        dirs.append(direction)
        gazes.append(gaze)
        all_scores.append(scores[i] if scores is not None else scatter_scores(pred, n_objects))
        all_labels.append(gt.interaction)
    ap = average_precision(np.concatenate(all_scores), np.concatenate(all_labels))
    return MetricsReport(
        hand_mm=float(np.mean(hands)),
        head_dist_mm=float(np.mean(heads)),
        head_dir_deg=float(np.mean(dirs)),
        gaze_deg=float(np.mean(gazes)),
        object_center_mm=float(np.mean(centers)),
        object_ap=ap,
        windows=len(pairs),
    )
