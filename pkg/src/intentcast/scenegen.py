"""Deterministic synthesis of situated pick-and-place sessions.

Each session simulates a person in a room of static tabletop objects who
repeatedly walks to a target, looks at it, reaches, carries it a short
distance, and sets it down. Gaze locks onto each target a configurable
number of frames before the hand arrives, reproducing the gaze-leads-hand
coordination the model exploits. All randomness comes from one xorshift
stream seeded by the config, so session bytes are a pure function of the
config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import SessionFile
from .rng import XorShift64Star, derive_seed
from .sessionio import write_session

VOCABULARY = [
    "kettle", "dish", "can", "mug", "plate", "bowl", "spoon", "fork",
    "knife", "cup", "jar", "pot", "pan", "bottle", "box", "book",
    "lamp", "phone", "remote", "towel", "sponge", "brush", "soap", "vase",
    "clock", "radio", "basket", "tray", "glass", "pitcher", "opener", "scissors",
]


@dataclass
class SceneConfig:
    seed: int = 0
    n_objects: int = 48
    room: tuple[float, float, float] = (4.0, 4.0, 2.4)  # meters
    episodes: int = 3
    gaze_lead_lag: int = 5          # frames of gaze lead before hand arrival
    gaze_noise_deg: float = 2.0
    pos_noise_m: float = 0.002
    grasp_radius: float = 0.08
    max_hand_speed: float = 2.0     # m/s
    rate_hz: float = 30.0
    d_clip: int = 32

    def __post_init__(self):
        if self.n_objects < 1:
            raise ValueError("n_objects must be >= 1")
        if self.gaze_lead_lag < 0:
            raise ValueError("gaze_lead_lag must be >= 0")
        if self.gaze_noise_deg < 0 or self.pos_noise_m < 0:
            raise ValueError("noise levels must be >= 0")
        if min(self.room) < 1.5:
            raise ValueError(f"degenerate room extents {self.room}; each side must be >= 1.5 m")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")


@dataclass
class EpisodeTrace:
    """Per-episode frame indices, used by tests and diagnostics."""

    target: int
    walk_start: int
    reach_start: int
    reach_end: int       # hand arrives at the object this frame
    gaze_lock: int       # gaze fully fixated from this frame on
    carry_end: int


@dataclass
class _Timeline:
    head: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    gaze_at: list = field(default_factory=list)   # world point the gaze tracks
    carried: list = field(default_factory=list)   # (object, position) or None

    def append(self, head, left, right, gaze_at, carried=None):
        self.head.append(np.array(head))
        self.left.append(np.array(left))
        self.right.append(np.array(right))
        self.gaze_at.append(np.array(gaze_at))
        self.carried.append(carried)

    def __len__(self):
        return len(self.head)


def min_jerk(start: np.ndarray, goal: np.ndarray, n_frames: int) -> np.ndarray:
    """Minimum-jerk point-to-point profile over n_frames (excludes start pose)."""
    s = (np.arange(1, n_frames + 1) / n_frames)[:, None]
    blend = 10 * s**3 - 15 * s**4 + 6 * s**5
    return start[None, :] + (goal - start)[None, :] * blend


def _frames_for_reach(dist: float, rate: float, max_speed: float, minimum: int) -> int:
    # minimum-jerk peak speed is 1.875 * dist / duration; keep 10% headroom
    needed = 1.1 * 1.875 * dist / max_speed
    return max(minimum, int(math.ceil(needed * rate)))


def generate_session(config: SceneConfig) -> SessionFile:
    return generate_session_with_trace(config)[0]


def generate_session_with_trace(config: SceneConfig) -> tuple[SessionFile, list[EpisodeTrace]]:
    """Build one session plus its episode trace (deterministic in the seed)."""
    rng = XorShift64Star(config.seed)
    rate = config.rate_hz
    n = config.n_objects
    w, d, _h = config.room

    labels = [VOCABULARY[rng.randint(len(VOCABULARY))] for _ in range(n)]
    sizes = np.array([0.05 + 0.07 * rng.uniform() for _ in range(n)])
    placed: list[np.ndarray] = []
    for _ in range(n):
        for _attempt in range(64):
            pos = np.array([
                rng.uniform(0.6, w - 0.6),
                rng.uniform(0.6, d - 0.6),
                0.72 + 0.16 * rng.uniform(),
            ])
            if all(np.linalg.norm(pos[:2] - q[:2]) > 0.12 for q in placed):
                break
        placed.append(pos)
    object_home = np.stack(placed)

    head_z = 1.56 + 0.06 * rng.uniform()
    rest_left = np.array([-0.18, 0.08, -0.52])
    rest_right = np.array([0.18, 0.08, -0.52])

    head = np.array([rng.uniform(0.8, w - 0.8), rng.uniform(0.8, d - 0.8), head_z])
    current_centers = object_home.copy()
    timeline = _Timeline()
    traces: list[EpisodeTrace] = []

    def rest(which: np.ndarray) -> np.ndarray:
        return head + which

    def random_fixation() -> np.ndarray:
        return current_centers[rng.randint(n)].copy()

    def idle(frames: int, gaze_at: np.ndarray):
        for _ in range(frames):
            timeline.append(head, rest(rest_left), rest(rest_right), gaze_at)

    gaze_at = random_fixation()
    idle(int(0.5 * rate), gaze_at)

    prev_target = -1
    for _episode in range(config.episodes):
        target = rng.randint(n)
        if n > 1:
            while target == prev_target:
                target = rng.randint(n)
        prev_target = target
        target_pos = current_centers[target].copy()
        walk_start = len(timeline)

        # walk until the target is a comfortable reach away
        to_target = target_pos[:2] - head[:2]
        dist_xy = float(np.linalg.norm(to_target))
        stand_xy = head[:2] if dist_xy <= 0.42 else target_pos[:2] - to_target / dist_xy * 0.42
        stand = np.array([stand_xy[0], stand_xy[1], head_z])
        walk_dist = float(np.linalg.norm(stand - head))
        walk_frames = max(int(0.55 * rate), int(math.ceil(walk_dist / 0.8 * rate)))
        gaze_at = random_fixation()
        for pos in min_jerk(head, stand, walk_frames):
            timeline.append(pos, pos + rest_left, pos + rest_right, gaze_at)
        head = stand

        # reach with whichever hand rests nearer the target
        d_left = float(np.linalg.norm(target_pos - rest(rest_left)))
        d_right = float(np.linalg.norm(target_pos - rest(rest_right)))
        use_right = d_right < d_left if abs(d_right - d_left) > 1e-9 else rng.uniform() < 0.5
        hand_rest = rest(rest_right) if use_right else rest(rest_left)
        reach_dist = float(np.linalg.norm(target_pos - hand_rest))
        reach_frames = _frames_for_reach(
            reach_dist, rate, config.max_hand_speed,
            minimum=max(int(0.45 * rate), config.gaze_lead_lag + 8),
        )
        reach_start = len(timeline)
        reach_end = reach_start + reach_frames - 1
        lock = reach_end - config.gaze_lead_lag
        slew = 4
        reach_path = min_jerk(hand_rest, target_pos, reach_frames)
        for i, hp in enumerate(reach_path):
            frame = reach_start + i
            if frame >= lock:
                look = target_pos
            elif frame >= lock - slew:
                a = (frame - (lock - slew)) / slew
                look = gaze_at * (1 - a) + target_pos * a
            else:
                look = gaze_at
            left = hp if not use_right else rest(rest_left)
            right = hp if use_right else rest(rest_right)
            timeline.append(head, left, right, look)
        gaze_at = target_pos

        # carry to a put-down point within easy reach, then retract
        for _attempt in range(64):
            ang = rng.uniform(0.0, 2 * math.pi)
            rad = rng.uniform(0.15, 0.45)
            place_xy = head[:2] + rad * np.array([math.cos(ang), math.sin(ang)])
            if 0.55 < place_xy[0] < w - 0.55 and 0.55 < place_xy[1] < d - 0.55:
                break
        place = np.array([place_xy[0], place_xy[1], 0.72 + 0.16 * rng.uniform()])
        carry_dist = float(np.linalg.norm(place - target_pos))
        carry_frames = _frames_for_reach(carry_dist, rate, config.max_hand_speed,
                                         minimum=int(0.55 * rate))
        for hp in min_jerk(target_pos, place, carry_frames):
            left = hp if not use_right else rest(rest_left)
            right = hp if use_right else rest(rest_right)
            timeline.append(head, left, right, hp, carried=(target, hp))
        current_centers[target] = place
        gaze_at = place
        carry_end = len(timeline) - 1

        retract_dist = float(np.linalg.norm(hand_rest - place))
        retract_frames = _frames_for_reach(retract_dist, rate, config.max_hand_speed,
                                           minimum=int(0.4 * rate))
        for hp in min_jerk(place, hand_rest, retract_frames):
            left = hp if not use_right else rest(rest_left)
            right = hp if use_right else rest(rest_right)
            timeline.append(head, left, right, gaze_at)

        idle(int((0.3 + 0.5 * rng.uniform()) * rate), gaze_at)
        traces.append(EpisodeTrace(
            target=target, walk_start=walk_start, reach_start=reach_start,
            reach_end=reach_end, gaze_lock=lock, carry_end=carry_end,
        ))
        gaze_at = random_fixation()

    idle(int(0.4 * rate), gaze_at)

    session = _assemble_session(config, labels, sizes, object_home, timeline, rng)
    return session, traces


def _assemble_session(config, labels, sizes, object_home, timeline, rng) -> SessionFile:
    f = len(timeline)
    n = config.n_objects
    head_pos = np.stack(timeline.head)
    hand_pos = np.stack([np.stack(timeline.left), np.stack(timeline.right)], axis=1)
    centers = np.zeros((f, n, 3))
    live = object_home.copy()
    for t in range(f):
        carried = timeline.carried[t]
        if carried is not None:
            obj, pos = carried
            live[obj] = pos
        centers[t] = live

    # measurement noise on the human channels only
    if config.pos_noise_m > 0:
        head_pos = head_pos + np.array(
            [rng.normal(0.0, config.pos_noise_m) for _ in range(f * 3)]).reshape(f, 3)
        hand_pos = hand_pos + np.array(
            [rng.normal(0.0, config.pos_noise_m) for _ in range(f * 6)]).reshape(f, 2, 3)

    gaze = np.zeros((f, 3))
    for t in range(f):
        direction = timeline.gaze_at[t] - head_pos[t]
        norm = np.linalg.norm(direction)
        direction = direction / norm if norm > 1e-9 else np.array([1.0, 0.0, 0.0])
        if config.gaze_noise_deg > 0:
            direction = _perturb_direction(direction, config.gaze_noise_deg, rng)
        gaze[t] = direction

    head_rot = _rotations_from_gaze(gaze)

    corner_signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
                            dtype=np.float64)
    bbox = centers[:, :, None, :] + corner_signs[None, None, :, :] * (sizes[None, :, None, None] / 2.0)

    dist_l = np.linalg.norm(centers - hand_pos[:, 0][:, None, :], axis=-1)
    dist_r = np.linalg.norm(centers - hand_pos[:, 1][:, None, :], axis=-1)
    interaction = (np.minimum(dist_l, dist_r) < config.grasp_radius).astype(np.uint8)

    session = SessionFile(
        rate_hz=config.rate_hz, labels=labels, d_clip=config.d_clip,
        gaze=gaze, head_rot=head_rot, head_pos=head_pos, hand_pos=hand_pos,
        centers=centers, bbox=bbox, interaction=interaction,
    )
    session.validate()
    return session.freeze()


def _perturb_direction(direction: np.ndarray, noise_deg: float, rng: XorShift64Star) -> np.ndarray:
    axis = np.array([rng.normal(), rng.normal(), rng.normal()])
    axis = axis - direction * float(axis @ direction)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        return direction
    axis /= norm
    angle = math.radians(rng.normal(0.0, noise_deg))
    out = direction * math.cos(angle) + np.cross(axis, direction) * math.sin(angle)
    return out / np.linalg.norm(out)


def _rotations_from_gaze(gaze: np.ndarray, smoothing: float = 0.6) -> np.ndarray:
    """Head orientation as a smoothed look-at of the gaze direction.

    The head lags the eyes slightly (exponential smoothing), mirroring
    natural eye-head coordination. Columns are [right, up, forward]."""
    f = gaze.shape[0]
    out = np.zeros((f, 3, 3))
    forward = gaze[0].copy()
    up_world = np.array([0.0, 0.0, 1.0])
    for t in range(f):
        forward = smoothing * forward + (1.0 - smoothing) * gaze[t]
        forward = forward / np.linalg.norm(forward)
        right = np.cross(up_world, forward)
        if np.linalg.norm(right) < 1e-6:
            right = np.cross(np.array([1.0, 0.0, 0.0]), forward)
        right /= np.linalg.norm(right)
        up = np.cross(forward, right)
        out[t] = np.stack([right, up, forward], axis=1)
    return out


def generate_corpus(
    config: SceneConfig,
    n_train: int,
    n_test: int,
    out_dir: str | Path,
) -> dict:
    """Generate train/test splits with disjoint per-session seeds.

    Writes one session file per entry plus a ``manifest.json`` describing
    seeds and paths; returns the manifest dict.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be >= 1")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"master_seed": config.seed, "splits": {}}
    seeds_seen = set()
    for split, count, offset in (("train", n_train, 0), ("test", n_test, n_train)):
        entries = []
        for i in range(count):
            seed = derive_seed(config.seed, offset + i)
            if seed in seeds_seen:
                raise RuntimeError("derived session seeds collided")
            seeds_seen.add(seed)
            session = generate_session(replace(config, seed=seed))
            path = out / f"{split}_{i:03d}.icss"
            write_session(session, path)
            entries.append({"seed": seed, "path": path.name, "frames": session.n_frames})
        manifest["splits"][split] = entries
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest
