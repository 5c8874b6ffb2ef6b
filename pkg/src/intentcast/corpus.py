"""Loading generated corpora (manifest + session files) into window samples."""

from __future__ import annotations

import json
from pathlib import Path

from .data import WindowSample, WindowSpec, slice_windows
from .exceptions import SessionFormatError
from .sessionio import read_session


def load_split_sessions(data_dir: str | Path, split: str) -> list:
    """Sessions of one manifest split, in manifest order."""
    data_dir = Path(data_dir)
    manifest_path = data_dir / "manifest.json"
    if not manifest_path.exists():
        raise SessionFormatError(f"no manifest.json under {data_dir}")
    manifest = json.loads(manifest_path.read_text())
    try:
        entries = manifest["splits"][split]
    except KeyError as exc:
        raise SessionFormatError(f"manifest has no '{split}' split") from exc
    return [read_session(data_dir / entry["path"]) for entry in entries]


def windows_from_sessions(sessions, spec: WindowSpec) -> list[WindowSample]:
    out: list[WindowSample] = []
    for session in sessions:
        out.extend(slice_windows(session, spec))
    return out


def load_split_windows(data_dir: str | Path, split: str, spec: WindowSpec) -> list[WindowSample]:
    return windows_from_sessions(load_split_sessions(data_dir, split), spec)
