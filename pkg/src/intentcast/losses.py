"""Training objective: seven supervised terms and their weighted sum.

All trajectory terms reduce by per-frame means so magnitudes stay comparable
across horizons. The binary cross-entropy terms carry the conventional
leading minus so the total is minimized; probabilities are clamped away from
{0, 1} before the logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .autodiff import Tensor
from .exceptions import NonFiniteError
from .model.decoder import PredictionBatch
from .model.network import TargetBatch

PROB_CLAMP = 1e-7


@dataclass
class LossWeights:
    gaze: float = 5.0
    rot: float = 5.0
    pos: float = 1.0
    center: float = 10.0
    vel: float = 1.0
    int_: float = 1.0
    state: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"loss weight {f.name} must be >= 0")

    def as_dict(self) -> dict[str, float]:
        return {"gaze": self.gaze, "rot": self.rot, "pos": self.pos, "center": self.center,
                "vel": self.vel, "int": self.int_, "state": self.state}


@dataclass(eq=False)
class LossTerms:
    gaze: Tensor
    rot: Tensor
    pos: Tensor
    center: Tensor
    vel: Tensor
    int_: Tensor
    state: Tensor
    total: Tensor = field(init=False, default=None)

    def values(self) -> dict[str, float]:
        out = {name: float(getattr(self, name).item())
               for name in ("gaze", "rot", "pos", "center", "vel", "int_", "state")}
        out["total"] = float(self.total.item())
        return out


def _l2(t: Tensor, axis: int = -1) -> Tensor:
    return (t * t).sum(axis=axis).sqrt()


def loss_gaze(pred: Tensor, gt: np.ndarray) -> Tensor:
    """Mean over frames of 1 - cos(predicted, ground truth)."""
    gt = np.asarray(gt)
    gt_norms = np.linalg.norm(gt, axis=-1)
    if np.any(gt_norms < 1e-12):
        raise ValueError("ground-truth gaze contains a zero-norm vector")
    pred_norm = _l2(pred)
    if np.any(pred_norm.data < 1e-12):
        raise ValueError("predicted gaze contains a zero-norm vector")
    cos = (pred * Tensor(gt)).sum(axis=-1) / (pred_norm * Tensor(gt_norms))
    return (1.0 - cos).mean()


def loss_rot(pred: Tensor, gt: np.ndarray) -> Tensor:
    """Mean over frames of the squared Frobenius rotation error."""
    diff = pred - Tensor(np.asarray(gt))
    return (diff * diff).sum(axis=(-1, -2)).mean()


def loss_pos(pred_head: Tensor, pred_hand: Tensor,
             gt_head: np.ndarray, gt_hand: np.ndarray) -> Tensor:
    """Per-frame mean L2 distance of the head plus that of the hands."""
    head = _l2(pred_head - Tensor(gt_head)).mean()
    hand = _l2(pred_hand - Tensor(gt_hand)).mean()
    return head + hand


def loss_center(pred: Tensor, gt_selected: np.ndarray) -> Tensor:
    """Per-frame mean L2 distance over the selected objects.

    ``gt_selected`` must already be gathered to the same object order as the
    prediction; a shape mismatch therefore signals index misalignment.
    """
    gt_selected = np.asarray(gt_selected)
    if pred.shape != gt_selected.shape:
        raise ValueError(
            f"selected-object misalignment: prediction {pred.shape} vs targets {gt_selected.shape}"
        )
    return _l2(pred - Tensor(gt_selected)).mean()


def velocities(series: Tensor) -> Tensor:
    """Consecutive-frame differences along axis 1 (length T-1)."""
    t = series.shape[1]
    if t < 2:
        raise ValueError("velocity needs at least two frames")
    return series[:, 1:] - series[:, :-1]


def loss_vel(pred: PredictionBatch, gt_head: np.ndarray, gt_hand: np.ndarray,
             gt_centers_selected: np.ndarray) -> Tensor:
    """Velocity alignment: summed mean L2 errors for head, hands, centers."""
    out = None
    for p, g in ((pred.head_pos, gt_head), (pred.hand_pos, gt_hand),
                 (pred.object_centers, gt_centers_selected)):
        term = _l2(velocities(p) - (np.diff(g, axis=1))).mean()
        out = term if out is None else out + term
    return out


def loss_bce(pred_probs: Tensor, gt_labels: np.ndarray) -> Tensor:
    """Mean negative log likelihood of binary labels under clamped probs."""
    labels = np.asarray(gt_labels, dtype=np.float64)
    if not np.isin(labels, (0.0, 1.0)).all():
        raise ValueError("binary cross-entropy labels must be 0 or 1")
    p = pred_probs.clip(PROB_CLAMP, 1.0 - PROB_CLAMP)
    ll = Tensor(labels) * p.log() + Tensor(1.0 - labels) * (1.0 - p).log()
    return -ll.mean()


def total_loss(terms: LossTerms, weights: LossWeights) -> LossTerms:
    """Weighted sum of the term tensors; fails naming any non-finite term."""
    total = None
    for name, weight in (("gaze", weights.gaze), ("rot", weights.rot), ("pos", weights.pos),
                         ("center", weights.center), ("vel", weights.vel),
                         ("int_", weights.int_), ("state", weights.state)):
        term = getattr(terms, name)
        if not np.isfinite(term.data).all():
            raise NonFiniteError(f"loss term '{name.rstrip('_')}' is not finite")
        weighted = term * weight
        total = weighted if total is None else total + weighted
    terms.total = total
    return terms


def compute_losses(pred: PredictionBatch, target: TargetBatch,
                   weights: LossWeights) -> LossTerms:
    """All seven terms for one batch.

    The refined-state and center terms supervise only the K selected
    objects, with ground truth gathered by the selection indices; the
    stage-one probabilities are supervised against all N labels.
    """
    idx = pred.selected_indices
    gt_centers_sel = np.take_along_axis(target.object_centers, idx[:, None, :, None], axis=2)
    gt_labels_sel = np.take_along_axis(target.interaction, idx, axis=1)

    terms = LossTerms(
        gaze=loss_gaze(pred.gaze, target.gaze),
        rot=loss_rot(pred.head_rot, target.head_rot),
        pos=loss_pos(pred.head_pos, pred.hand_pos, target.head_pos, target.hand_pos),
        center=loss_center(pred.object_centers, gt_centers_sel),
        vel=loss_vel(pred, target.head_pos, target.hand_pos, gt_centers_sel),
        int_=(loss_bce(pred.p_int, target.interaction) if pred.p_int is not None
              else Tensor(0.0)),
        state=loss_bce(pred.interaction, gt_labels_sel),
    )
    return total_loss(terms, weights)
