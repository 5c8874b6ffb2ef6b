"""Binary serialization for sessions plus line-oriented streaming records.

Session file layout (all multi-byte values little-endian):

    offset  size  field
    0       6     magic ``b"ICSESS"``
    6       1     format version byte (currently 1)
    7       1     reserved, zero
    8       4     uint32 header length H
    12      H     JSON header: rate_hz, n_frames, d_clip, labels
    12+H    F*S   F frame blocks of S bytes each (see FRAME LAYOUT below)

Frame block layout, float64 fields first, then one interaction byte per
object (S = (24 + 27*N) * 8 + N bytes for N objects):

    gaze[3] | head_rot[3*3] | head_pos[3] | hand_pos[2*3]
    | centers[N*3] | bbox[N*8*3] | interaction[N] (uint8)

Reals round-trip bit-exactly. Streaming records used by the predict command
wrap the same numeric layout in standalone base64-encoded blobs, one per
line.
"""

from __future__ import annotations

import base64
import binascii
import json
from pathlib import Path

import numpy as np

from .data import ObservationWindow, Prediction, SessionFile
from .embeddings import LabelEmbeddingTable
from .exceptions import SessionFormatError

SESSION_MAGIC = b"ICSESS"
WINDOW_MAGIC = b"ICWIN_"
PREDICTION_MAGIC = b"ICPRD_"
FORMAT_VERSION = 1


def _frame_dtype(n: int) -> np.dtype:
    return np.dtype([
        ("gaze", "<f8", (3,)),
        ("head_rot", "<f8", (3, 3)),
        ("head_pos", "<f8", (3,)),
        ("hand_pos", "<f8", (2, 3)),
        ("centers", "<f8", (n, 3)),
        ("bbox", "<f8", (n, 8, 3)),
        ("interaction", "u1", (n,)),
    ])


def _pack(magic: bytes, header: dict, payload: bytes) -> bytes:
    head = json.dumps(header, separators=(",", ":")).encode("utf-8")
    return magic + bytes([FORMAT_VERSION, 0]) + len(head).to_bytes(4, "little") + head + payload


def _unpack(blob: bytes, magic: bytes, what: str) -> tuple[dict, bytes]:
    if len(blob) < 12 or blob[:6] != magic:
        raise SessionFormatError(f"not a {what} record (bad magic)")
    version = blob[6]
    if version != FORMAT_VERSION:
        raise SessionFormatError(f"unsupported {what} format version {version}")
    head_len = int.from_bytes(blob[8:12], "little")
    if len(blob) < 12 + head_len:
        raise SessionFormatError(f"truncated {what} header")
    try:
        header = json.loads(blob[12:12 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SessionFormatError(f"corrupt {what} header: {exc}") from exc
    return header, blob[12 + head_len:]


def write_session(session: SessionFile, path: str | Path) -> None:
    """Serialize a session; ``read_session`` restores it bit-exactly."""
    session.validate()
    f, n = session.n_frames, session.n_objects
    frames = np.zeros(f, dtype=_frame_dtype(n))
    frames["gaze"] = session.gaze
    frames["head_rot"] = session.head_rot
    frames["head_pos"] = session.head_pos
    frames["hand_pos"] = session.hand_pos
    frames["centers"] = session.centers
    frames["bbox"] = session.bbox
    frames["interaction"] = session.interaction
    header = {
        "rate_hz": session.rate_hz,
        "n_frames": f,
        "d_clip": session.d_clip,
        "labels": session.labels,
    }
    Path(path).write_bytes(_pack(SESSION_MAGIC, header, frames.tobytes()))


def read_session(path: str | Path) -> SessionFile:
    """Parse and validate a session file.

    Raises :class:`SessionFormatError` for a bad magic, an unknown version, a
    truncated payload, or an invariant violation (reported with its frame
    index).
    """
    blob = Path(path).read_bytes()
    header, payload = _unpack(blob, SESSION_MAGIC, "session")
    try:
        f = int(header["n_frames"])
        labels = list(header["labels"])
        d_clip = int(header["d_clip"])
        rate_hz = float(header["rate_hz"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SessionFormatError(f"incomplete session header: {exc}") from exc
    dtype = _frame_dtype(len(labels))
    expected = f * dtype.itemsize
    if len(payload) != expected:
        raise SessionFormatError(
            f"truncated session: expected {expected} payload bytes, found {len(payload)}"
        )
    frames = np.frombuffer(payload, dtype=dtype, count=f)
    session = SessionFile(
        rate_hz=rate_hz,
        labels=labels,
        d_clip=d_clip,
        gaze=np.array(frames["gaze"]),
        head_rot=np.array(frames["head_rot"]),
        head_pos=np.array(frames["head_pos"]),
        hand_pos=np.array(frames["hand_pos"]),
        centers=np.array(frames["centers"]),
        bbox=np.array(frames["bbox"]),
        interaction=np.array(frames["interaction"]),
    )
    try:
        session.validate()
    except ValueError as exc:
        raise SessionFormatError(f"invalid session content: {exc}") from exc
    return session.freeze()


def sessions_equal(a: SessionFile, b: SessionFile) -> bool:
    """Field-for-field equality, bit-exact on all reals."""
    if (a.rate_hz, a.labels, a.d_clip) != (b.rate_hz, b.labels, b.d_clip):
        return False
    return all(
        np.array_equal(getattr(a, name), getattr(b, name))
        for name in ("gaze", "head_rot", "head_pos", "hand_pos", "centers", "bbox", "interaction")
    )


# -- streaming window / prediction records (one base64 blob per line) ----------


def window_to_line(obs: ObservationWindow) -> str:
    header = {
        "t_history": obs.t_history,
        "d_clip": obs.d_clip,
        "labels": obs.labels,
    }
    payload = b"".join(
        np.ascontiguousarray(arr, dtype="<f8").tobytes()
        for arr in (obs.gaze, obs.head_rot, obs.head_pos, obs.hand_pos, obs.centers, obs.bbox)
    )
    return base64.b64encode(_pack(WINDOW_MAGIC, header, payload)).decode("ascii")


def window_from_line(line: str, table: LabelEmbeddingTable | None = None) -> ObservationWindow:
    try:
        blob = base64.b64decode(line.strip(), validate=True)
    except (binascii.Error, ValueError) as exc:
        raise SessionFormatError(f"window record is not valid base64: {exc}") from exc
    header, payload = _unpack(blob, WINDOW_MAGIC, "window")
    try:
        t = int(header["t_history"])
        labels = list(header["labels"])
        d_clip = int(header["d_clip"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SessionFormatError(f"incomplete window header: {exc}") from exc
    n = len(labels)
    shapes = [(t, 3), (t, 3, 3), (t, 3), (t, 2, 3), (t, n, 3), (t, n, 8, 3)]
    total = sum(int(np.prod(s)) for s in shapes) * 8
    if len(payload) != total:
        raise SessionFormatError(f"truncated window: expected {total} payload bytes, found {len(payload)}")
    values = np.frombuffer(payload, dtype="<f8")
    arrays, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        arrays.append(values[offset:offset + size].reshape(shape).copy())
        offset += size
    if table is None:
        table = LabelEmbeddingTable(d_clip=d_clip)
    obs = ObservationWindow(
        gaze=arrays[0], head_rot=arrays[1], head_pos=arrays[2], hand_pos=arrays[3],
        centers=arrays[4], bbox=arrays[5],
        semantic=table.embed_labels(labels), labels=labels,
    )
    try:
        obs.validate()
    except ValueError as exc:
        raise SessionFormatError(f"invalid window content: {exc}") from exc
    return obs


def prediction_to_line(pred: Prediction) -> str:
    header = {
        "t_future": int(pred.gaze.shape[0]),
        "k": int(pred.k),
        "indices": [int(i) for i in pred.selected_indices],
    }
    payload = b"".join(
        np.ascontiguousarray(arr, dtype="<f8").tobytes()
        for arr in (pred.gaze, pred.head_rot, pred.head_pos, pred.hand_pos,
                    pred.object_centers, pred.interaction)
    )
    return base64.b64encode(_pack(PREDICTION_MAGIC, header, payload)).decode("ascii")


def prediction_from_line(line: str) -> Prediction:
    try:
        blob = base64.b64decode(line.strip(), validate=True)
    except (binascii.Error, ValueError) as exc:
        raise SessionFormatError(f"prediction record is not valid base64: {exc}") from exc
    header, payload = _unpack(blob, PREDICTION_MAGIC, "prediction")
    t, k = int(header["t_future"]), int(header["k"])
    indices = np.array(header["indices"], dtype=np.int64)
    shapes = [(t, 3), (t, 3, 3), (t, 3), (t, 2, 3), (t, k, 3), (k,)]
    total = sum(int(np.prod(s)) for s in shapes) * 8
    if len(payload) != total:
        raise SessionFormatError("truncated prediction record")
    values = np.frombuffer(payload, dtype="<f8")
    arrays, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        arrays.append(values[offset:offset + size].reshape(shape).copy())
        offset += size
    return Prediction(
        gaze=arrays[0], head_rot=arrays[1], head_pos=arrays[2], hand_pos=arrays[3],
        object_centers=arrays[4], interaction=arrays[5], selected_indices=indices,
    )
