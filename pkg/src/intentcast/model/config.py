"""Model hyperparameters and ablation switches."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..exceptions import ConfigError


@dataclass
class ModelConfig:
    t_history: int = 15
    t_future: int = 15
    n_objects: int = 48
    top_k: int = 12
    feature_dim: int = 16
    encoder_layers: int = 4
    intention_layers: int = 4
    decoder_layers: int = 16
    d_clip: int = 32
    mlp_hidden: int = 32
    # ablations: drop the intention stage entirely, or swap the adaptive
    # adjacency for a learnable all-ones matrix of the same shape
    no_hierarchy: bool = False
    vanilla_gcn: bool = False

    def __post_init__(self):
        for name in ("t_history", "t_future", "n_objects", "top_k", "feature_dim",
                     "encoder_layers", "intention_layers", "decoder_layers",
                     "d_clip", "mlp_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.top_k > self.n_objects:
            raise ConfigError(f"top_k ({self.top_k}) cannot exceed n_objects ({self.n_objects})")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)
