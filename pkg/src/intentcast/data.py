"""Typed containers for recorded sessions, sliding windows, and predictions.

A session is a multi-frame recording of one person acting in a scene with N
objects. Windows pair an observed history with the future frames to predict.
All containers hold immutable float64 arrays; geometric invariants are
enforced by ``validate`` methods that fail loudly with the offending index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embeddings import LabelEmbeddingTable
from .validation import check_finite, check_rotations, check_shape, check_unit_rows

GAZE_NORM_TOL = 1e-6
ROTATION_TOL = 1e-6
BBOX_CENTER_TOL = 1e-4


@dataclass
class WindowSpec:
    """History/future horizon in sampled frames plus the sampling stride."""

    t_history: int = 15
    t_future: int = 15
    stride: int = 2
    rate_hz: float = 30.0

    def __post_init__(self):
        if self.t_history < 1 or self.t_future < 1:
            raise ValueError("t_history and t_future must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def span(self) -> int:
        return self.t_history + self.t_future


@dataclass(eq=False)
class SessionFile:
    """One contiguous recording: per-frame human state, scene objects, flags."""

    rate_hz: float
    labels: list[str]
    d_clip: int
    gaze: np.ndarray          # (F, 3) unit vectors
    head_rot: np.ndarray      # (F, 3, 3) rotation matrices
    head_pos: np.ndarray      # (F, 3) meters
    hand_pos: np.ndarray      # (F, 2, 3) meters, [left, right]
    centers: np.ndarray       # (F, N, 3) meters
    bbox: np.ndarray          # (F, N, 8, 3) meters
    interaction: np.ndarray   # (F, N) uint8 flags

    @property
    def n_frames(self) -> int:
        return self.gaze.shape[0]

    @property
    def n_objects(self) -> int:
        return len(self.labels)

    def validate(self) -> None:
        f, n = self.n_frames, self.n_objects
        check_shape("gaze", self.gaze, (f, 3))
        check_shape("head_rot", self.head_rot, (f, 3, 3))
        check_shape("head_pos", self.head_pos, (f, 3))
        check_shape("hand_pos", self.hand_pos, (f, 2, 3))
        check_shape("centers", self.centers, (f, n, 3))
        check_shape("bbox", self.bbox, (f, n, 8, 3))
        check_shape("interaction", self.interaction, (f, n))
        for name in ("gaze", "head_rot", "head_pos", "hand_pos", "centers", "bbox"):
            check_finite(name, getattr(self, name))
        norms = np.linalg.norm(self.gaze, axis=-1)
        bad = np.nonzero(np.abs(norms - 1.0) > GAZE_NORM_TOL)[0]
        if bad.size:
            raise ValueError(f"gaze norm {norms[bad[0]]:.6f} out of tolerance at frame {bad[0]}")
        gram = np.matmul(np.swapaxes(self.head_rot, -1, -2), self.head_rot)
        ortho = np.max(np.abs(gram - np.eye(3)), axis=(-1, -2))
        det = np.linalg.det(self.head_rot)
        bad = np.nonzero((ortho > ROTATION_TOL) | (np.abs(det - 1.0) > ROTATION_TOL))[0]
        if bad.size:
            raise ValueError(f"head rotation is not a proper rotation at frame {bad[0]}")
        if n:
            gap = np.max(np.abs(self.bbox.mean(axis=2) - self.centers), axis=(-1, -2))
            bad = np.nonzero(gap > BBOX_CENTER_TOL)[0]
            if bad.size:
                raise ValueError(
                    f"bbox vertex mean deviates from center by {gap[bad[0]]:.2e} m at frame {bad[0]}"
                )

    def freeze(self) -> "SessionFile":
        """Mark every array read-only; sessions are immutable after load."""
        for name in ("gaze", "head_rot", "head_pos", "hand_pos", "centers", "bbox", "interaction"):
            getattr(self, name).flags.writeable = False
        return self


@dataclass(eq=False)
class ObservationWindow:
    """All historical state the model sees for one prediction."""

    gaze: np.ndarray        # (T_h, 3)
    head_rot: np.ndarray    # (T_h, 3, 3)
    head_pos: np.ndarray    # (T_h, 3)
    hand_pos: np.ndarray    # (T_h, 2, 3)
    bbox: np.ndarray        # (T_h, N, 8, 3)
    centers: np.ndarray     # (T_h, N, 3)
    semantic: np.ndarray    # (N, D_clip) unit rows
    labels: list[str] = field(default_factory=list)

    @property
    def t_history(self) -> int:
        return self.gaze.shape[0]

    @property
    def n_objects(self) -> int:
        return self.centers.shape[1]

    @property
    def d_clip(self) -> int:
        return self.semantic.shape[1]

    def validate(self) -> None:
        t, n = self.t_history, self.n_objects
        check_shape("gaze", self.gaze, (t, 3))
        check_shape("head_rot", self.head_rot, (t, 3, 3))
        check_shape("head_pos", self.head_pos, (t, 3))
        check_shape("hand_pos", self.hand_pos, (t, 2, 3))
        check_shape("bbox", self.bbox, (t, n, 8, 3))
        check_shape("centers", self.centers, (t, n, 3))
        check_shape("semantic", self.semantic, (n, self.semantic.shape[1]))
        check_unit_rows("gaze", self.gaze, GAZE_NORM_TOL)
        check_rotations("head_rot", self.head_rot, ROTATION_TOL)
        if np.max(np.abs(self.bbox.mean(axis=2) - self.centers), initial=0.0) > BBOX_CENTER_TOL:
            raise ValueError("bbox vertex means deviate from object centers")


@dataclass(eq=False)
class FutureStates:
    """Ground-truth future: human state plus object centers and labels."""

    gaze: np.ndarray            # (T_f, 3)
    head_rot: np.ndarray        # (T_f, 3, 3)
    head_pos: np.ndarray        # (T_f, 3)
    hand_pos: np.ndarray        # (T_f, 2, 3)
    object_centers: np.ndarray  # (T_f, N, 3)
    interaction: np.ndarray     # (N,) values in {0, 1}

    @property
    def t_future(self) -> int:
        return self.gaze.shape[0]

    def validate(self) -> None:
        t = self.t_future
        check_shape("gaze", self.gaze, (t, 3))
        check_unit_rows("gaze", self.gaze, GAZE_NORM_TOL)
        check_rotations("head_rot", self.head_rot, ROTATION_TOL)
        n = self.object_centers.shape[1]
        check_shape("object_centers", self.object_centers, (t, n, 3))
        check_shape("interaction", self.interaction, (n,))
        if not np.isin(self.interaction, (0.0, 1.0)).all():
            raise ValueError("ground-truth interaction labels must be 0 or 1")


@dataclass(eq=False)
class Prediction:
    """Model output over the K selected candidate objects."""

    gaze: np.ndarray            # (T_f, 3) unit rows
    head_rot: np.ndarray        # (T_f, 3, 3) raw matrices (not projected)
    head_pos: np.ndarray        # (T_f, 3)
    hand_pos: np.ndarray        # (T_f, 2, 3)
    object_centers: np.ndarray  # (T_f, K, 3)
    interaction: np.ndarray     # (K,) probabilities in [0, 1]
    selected_indices: np.ndarray  # (K,) object indices aligned with the window

    @property
    def k(self) -> int:
        return self.selected_indices.shape[0]


@dataclass(eq=False)
class WindowSample:
    """An (observation, future) pair plus the per-frame interaction flags
    needed for hard-split selection."""

    observation: ObservationWindow
    future: FutureStates
    history_flags: np.ndarray  # (T_h, N) uint8
    future_flags: np.ndarray   # (T_f, N) uint8


def slice_windows(
    session: SessionFile,
    spec: WindowSpec,
    table: LabelEmbeddingTable | None = None,
) -> list[WindowSample]:
    """Cut a session into sliding windows.

    Frames are first subsampled at ``spec.stride``; windows of
    ``t_history + t_future`` sampled frames then slide with stride 1. The
    ground-truth interaction label of an object is 1 iff it is interacted
    with in any future frame of the window. Returns an empty list when the
    session is too short.
    """
    session.validate()
    if table is None:
        table = LabelEmbeddingTable(d_clip=session.d_clip)
    semantic = table.embed_labels(session.labels)
    s = slice(None, None, spec.stride)
    gaze, head_rot = session.gaze[s], session.head_rot[s]
    head_pos, hand_pos = session.head_pos[s], session.hand_pos[s]
    centers, bbox = session.centers[s], session.bbox[s]
    flags = session.interaction[s]
    sampled = gaze.shape[0]
    if sampled < spec.span:
        return []
    th, tf = spec.t_history, spec.t_future
    out = []
    for start in range(sampled - spec.span + 1):
        mid, end = start + th, start + spec.span
        obs = ObservationWindow(
            gaze=gaze[start:mid], head_rot=head_rot[start:mid],
            head_pos=head_pos[start:mid], hand_pos=hand_pos[start:mid],
            bbox=bbox[start:mid], centers=centers[start:mid],
            semantic=semantic, labels=session.labels,
        )
        fut_flags = flags[mid:end]
        fut = FutureStates(
            gaze=gaze[mid:end], head_rot=head_rot[mid:end],
            head_pos=head_pos[mid:end], hand_pos=hand_pos[mid:end],
            object_centers=centers[mid:end],
            interaction=fut_flags.any(axis=0).astype(np.float64),
        )
        out.append(WindowSample(obs, fut, flags[start:mid], fut_flags))
    return out


def make_hard_split(samples: list[WindowSample]) -> list[WindowSample]:
    """Keep windows where some object's interaction state changes between
    the history segment and the future segment."""
    kept = []
    for s in samples:
        hist = s.history_flags.any(axis=0)
        fut = s.future_flags.any(axis=0)
        if np.any(hist != fut):
            kept.append(s)
    return kept


INERT_LABEL = "inert"
INERT_POSITION = np.array([100.0, 100.0, 0.0])


def pad_objects(session: SessionFile, n_objects: int) -> SessionFile:
    """Pad a session with inert far-away objects up to a fixed object count."""
    have = session.n_objects
    if have > n_objects:
        raise ValueError(f"session has {have} objects, more than the requested {n_objects}")
    if have == n_objects:
        return session
    extra = n_objects - have
    f = session.n_frames
    centers = np.broadcast_to(INERT_POSITION, (f, extra, 3)).copy()
    offsets = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]) * 0.01
    bbox = centers[:, :, None, :] + offsets[None, None, :, :]
    return SessionFile(
        rate_hz=session.rate_hz,
        labels=list(session.labels) + [INERT_LABEL] * extra,
        d_clip=session.d_clip,
        gaze=session.gaze,
        head_rot=session.head_rot,
        head_pos=session.head_pos,
        hand_pos=session.hand_pos,
        centers=np.concatenate([session.centers, centers], axis=1),
        bbox=np.concatenate([session.bbox, bbox], axis=1),
        interaction=np.concatenate(
            [session.interaction, np.zeros((f, extra), dtype=np.uint8)], axis=1
        ),
    ).freeze()
