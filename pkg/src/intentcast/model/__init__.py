from .config import ModelConfig
from .network import BehaviorModel, PredictionBatch, TargetBatch, WindowBatch

__all__ = ["BehaviorModel", "ModelConfig", "PredictionBatch", "TargetBatch", "WindowBatch"]
