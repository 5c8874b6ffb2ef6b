"""Parameter initialization and the versioned binary checkpoint format.

Checkpoint layout (little-endian):

    offset  size  field
    0       6     magic ``b"ICCKPT"``
    6       1     format version byte (currently 1)
    7       1     reserved, zero
    8       4     uint32 header length H
    12      H     JSON header: model config dict + ordered [name, shape] list
    12+H    ...   concatenated float64 parameter payloads, header order

Loading validates the stored config and every tensor shape, so a checkpoint
cannot silently attach to an incompatible architecture.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..autodiff import Tensor
from ..exceptions import CheckpointError
from ..rng import XorShift64Star
from .config import ModelConfig
from .layers import ParamSpec

CHECKPOINT_MAGIC = b"ICCKPT"
CHECKPOINT_VERSION = 1


def init_params(specs: list[ParamSpec], seed: int) -> dict[str, Tensor]:
    """Deterministic initialization from a spec list.

    Weights draw uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)); biases
    start at zero; learnable adjacencies start at identity plus small noise;
    "ones" parameters start at exactly one.
    """
    rng = XorShift64Star(seed)
    out: dict[str, Tensor] = {}
    for spec in specs:
        if spec.name in out:
            raise ValueError(f"duplicate parameter name {spec.name}")
        size = int(np.prod(spec.shape))
        if spec.kind == "weight":
            bound = 1.0 / np.sqrt(spec.fan_in)
            data = np.array([rng.uniform(-bound, bound) for _ in range(size)]).reshape(spec.shape)
        elif spec.kind == "bias":
            data = np.zeros(spec.shape)
        elif spec.kind == "adjacency":
            noise = np.array([rng.uniform(-0.01, 0.01) for _ in range(size)]).reshape(spec.shape)
            data = np.eye(spec.shape[0]) + noise
        elif spec.kind == "ones":
            data = np.ones(spec.shape)
        else:
            raise ValueError(f"unknown init kind {spec.kind}")
        out[spec.name] = Tensor(data, requires_grad=True)
    return out


def save_checkpoint(path: str | Path, config: ModelConfig, params: dict[str, Tensor]) -> None:
    names = [[name, list(p.data.shape)] for name, p in params.items()]
    header = json.dumps({"config": config.to_dict(), "params": names},
                        separators=(",", ":")).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(p.data, dtype="<f8").tobytes()
                       for p in params.values())
    blob = (CHECKPOINT_MAGIC + bytes([CHECKPOINT_VERSION, 0])
            + len(header).to_bytes(4, "little") + header + payload)
    Path(path).write_bytes(blob)


def load_checkpoint(path: str | Path) -> tuple[ModelConfig, dict[str, Tensor]]:
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:6] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    if blob[6] != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {blob[6]}")
    head_len = int.from_bytes(blob[8:12], "little")
    try:
        header = json.loads(blob[12:12 + head_len].decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
        names = header["params"]
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint header: {exc}") from exc
    payload = blob[12 + head_len:]
    expected = sum(int(np.prod(shape)) for _, shape in names) * 8
    if len(payload) != expected:
        raise CheckpointError(f"{path}: truncated checkpoint payload")
    values = np.frombuffer(payload, dtype="<f8")
    params: dict[str, Tensor] = {}
    offset = 0
    for name, shape in names:
        size = int(np.prod(shape))
        params[name] = Tensor(values[offset:offset + size].reshape(shape).copy(),
                              requires_grad=True)
        offset += size
    return config, params


def validate_params(specs: list[ParamSpec], params: dict[str, Tensor]) -> None:
    """Check a loaded parameter dict against the architecture's spec list."""
    spec_shapes = {s.name: s.shape for s in specs}
    if set(spec_shapes) != set(params):
        missing = sorted(set(spec_shapes) - set(params))
        extra = sorted(set(params) - set(spec_shapes))
        raise CheckpointError(f"parameter names mismatch: missing={missing} extra={extra}")
    for name, shape in spec_shapes.items():
        if tuple(params[name].data.shape) != tuple(shape):
            raise CheckpointError(
                f"parameter {name}: shape {params[name].data.shape} != expected {shape}"
            )
