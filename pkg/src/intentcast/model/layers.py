"""Parameterized building blocks: MLPs and spatio-temporal GCN layers.

Each block declares its parameters as (name, shape, init-kind, fan-in)
specs; initialization and checkpointing walk the same declarations, so the
parameter set is a pure function of the model config.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..autodiff import Tensor, concat, matmul

Params = Mapping[str, Tensor]


@dataclass(frozen=True)
class ParamSpec:
    name: str
    shape: tuple[int, ...]
    kind: str       # "weight" | "bias" | "adjacency" | "ones"
    fan_in: int = 0


class MLP:
    """Per-element MLP applied along the trailing feature axis.

    ``dims`` of length 2 is a plain linear map; deeper stacks use tanh
    between layers and a linear output.
    """

    def __init__(self, prefix: str, dims: tuple[int, ...]):
        if len(dims) < 2:
            raise ValueError("MLP needs at least (d_in, d_out)")
        self.prefix = prefix
        self.dims = tuple(dims)

    def specs(self) -> list[ParamSpec]:
        out = []
        for i, (a, b) in enumerate(zip(self.dims[:-1], self.dims[1:])):
            out.append(ParamSpec(f"{self.prefix}.w{i}", (a, b), "weight", fan_in=a))
            out.append(ParamSpec(f"{self.prefix}.b{i}", (b,), "bias"))
        return out

    def apply(self, params: Params, x: Tensor) -> Tensor:
        lead = x.shape[:-1]
        h = x.reshape(-1, self.dims[0])
        last = len(self.dims) - 2
        for i in range(len(self.dims) - 1):
            h = matmul(h, params[f"{self.prefix}.w{i}"]) + params[f"{self.prefix}.b{i}"].reshape(1, -1)
            if i < last:
                h = h.tanh()
        return h.reshape(lead + (self.dims[-1],))


def temporal_mix(params: Params, prefix: str, x: Tensor) -> Tensor:
    """Learnable T x T adjacency applied along the time axis of (B,T,n,D)."""
    b, t, n, d = x.shape
    mixed = matmul(params[f"{prefix}.t_adj"], x.reshape(b, t, n * d)).reshape(b, t, n, d)
    return matmul(mixed, params[f"{prefix}.t_w"]) + params[f"{prefix}.t_b"]


def spatial_mix_fixed(params: Params, prefix: str, x: Tensor, a_norm: Tensor) -> Tensor:
    """Node mixing of (B,T,n,D) by a degree-normalized (B,n,n) adjacency."""
    b, t, n, d = x.shape
    mixed = matmul(a_norm.reshape(b, 1, n, n), x)
    return matmul(mixed, params[f"{prefix}.s_w"]) + params[f"{prefix}.s_b"]


class STGCNLayer:
    """Temporal GCN then spatial GCN, each residual with tanh activation.

    Both adjacencies are learnable; features keep dimension D throughout so
    the residual connections are plain sums.
    """

    def __init__(self, prefix: str, t: int, n_nodes: int, d: int):
        self.prefix = prefix
        self.t = t
        self.n_nodes = n_nodes
        self.d = d

    def specs(self) -> list[ParamSpec]:
        p = self.prefix
        return [
            ParamSpec(f"{p}.t_adj", (self.t, self.t), "adjacency"),
            ParamSpec(f"{p}.t_w", (self.d, self.d), "weight", fan_in=self.d),
            ParamSpec(f"{p}.t_b", (self.d,), "bias"),
            ParamSpec(f"{p}.s_adj", (self.n_nodes, self.n_nodes), "adjacency"),
            ParamSpec(f"{p}.s_w", (self.d, self.d), "weight", fan_in=self.d),
            ParamSpec(f"{p}.s_b", (self.d,), "bias"),
        ]

    def apply(self, params: Params, x: Tensor) -> Tensor:
        x = x + temporal_mix(params, self.prefix, x).tanh()
        mixed = matmul(params[f"{self.prefix}.s_adj"], x)
        spatial = matmul(mixed, params[f"{self.prefix}.s_w"]) + params[f"{self.prefix}.s_b"]
        return x + spatial.tanh()


class DynamicGCNLayer:
    """Spatial update with an externally supplied normalized adjacency,
    followed by temporal mixing; residual + tanh around each."""

    def __init__(self, prefix: str, t: int, d: int):
        self.prefix = prefix
        self.t = t
        self.d = d

    def specs(self) -> list[ParamSpec]:
        p = self.prefix
        return [
            ParamSpec(f"{p}.s_w", (self.d, self.d), "weight", fan_in=self.d),
            ParamSpec(f"{p}.s_b", (self.d,), "bias"),
            ParamSpec(f"{p}.t_adj", (self.t, self.t), "adjacency"),
            ParamSpec(f"{p}.t_w", (self.d, self.d), "weight", fan_in=self.d),
            ParamSpec(f"{p}.t_b", (self.d,), "bias"),
        ]

    def apply(self, params: Params, x: Tensor, a_norm: Tensor) -> Tensor:
        x = x + spatial_mix_fixed(params, self.prefix, x, a_norm).tanh()
        return x + temporal_mix(params, self.prefix, x).tanh()


class ResidualHead:
    """Prediction head emitting frequency-coefficient residuals.

    Node features (B, T_h, M, D) pass through a per-frame MLP to the output
    channel count, then a learnable linear time expansion maps the T_h axis
    to T_h + T_f coefficients.
    """

    def __init__(self, prefix: str, d: int, hidden: int, channels: int, t_in: int, t_out: int):
        self.prefix = prefix
        self.mlp = MLP(f"{prefix}.mlp", (d, hidden, channels))
        self.channels = channels
        self.t_in = t_in
        self.t_out = t_out

    def specs(self) -> list[ParamSpec]:
        return self.mlp.specs() + [
            ParamSpec(f"{self.prefix}.expand", (self.t_out, self.t_in), "weight", fan_in=self.t_in),
        ]

    def apply(self, params: Params, x: Tensor) -> Tensor:
        b, t, m, _ = x.shape
        per_frame = self.mlp.apply(params, x)                       # (B, T, M, C)
        flat = per_frame.reshape(b, t, m * self.channels)
        expanded = matmul(params[f"{self.prefix}.expand"], flat)    # (B, T_out, M*C)
        return expanded.reshape(b, self.t_out, m, self.channels)


def tile_time(x: Tensor, t: int) -> Tensor:
    """(B, D) -> (B, t, 1, D) by broadcasting along a new time axis."""
    b, d = x.shape
    return x.reshape(b, 1, 1, d).broadcast_to((b, t, 1, d))


def node_concat(parts: list[Tensor]) -> Tensor:
    """Concatenate (B, T, n_i, D) feature blocks along the node axis."""
    return concat(parts, axis=2)
