"""Heuristic baselines for acceptance comparisons.

Neither baseline has learnable parameters; both read one observation window
and produce either a full trajectory prediction (constant velocity) or bare
interaction scores (gaze ranking).
"""

from __future__ import annotations

import numpy as np

from .data import ObservationWindow, Prediction
from .model.dyngcn import gaze_geometry, position_object_weights


def baseline_constant_velocity(obs: ObservationWindow, t_future: int) -> Prediction:
    """Extrapolate the last-frame velocity linearly for every trajectory.

    Gaze and head rotation hold their final observed values. Interaction
    scores are the proximity weights exp(-d) over all objects, so the
    "selection" is the identity over all N.
    """
    if obs.t_history < 2:
        raise ValueError("constant-velocity baseline needs at least 2 frames")
    steps = np.arange(1, t_future + 1)[:, None]

    def extrapolate(series: np.ndarray) -> np.ndarray:
        vel = series[-1] - series[-2]
        flat_steps = steps.reshape((t_future,) + (1,) * (series.ndim - 1))
        return series[-1][None] + flat_steps * vel[None]

    head_pos = extrapolate(obs.head_pos)
    hand_pos = extrapolate(obs.hand_pos)
    centers = extrapolate(obs.centers)
    _, proximity = position_object_weights(
        obs.head_pos[None], obs.hand_pos[None], obs.centers[None]
    )
    n = obs.n_objects
    return Prediction(
        gaze=np.repeat(obs.gaze[-1:], t_future, axis=0),
        head_rot=np.repeat(obs.head_rot[-1:], t_future, axis=0),
        head_pos=head_pos,
        hand_pos=hand_pos,
        object_centers=centers,
        interaction=proximity[0],
        selected_indices=np.arange(n, dtype=np.int64),
    )


def baseline_gaze_ranking(obs: ObservationWindow) -> np.ndarray:
    """Score objects by exp(-mean viewing angle) over the window.

    A pure attention heuristic: the object stared at throughout the history
    ranks highest; objects behind the viewer rank lowest. No trajectories."""
    geom = gaze_geometry(obs.gaze[None], obs.head_pos[None], obs.centers[None])
    return np.exp(-geom.theta[0].mean(axis=0))
