"""Scikit-learn style estimator wrapping the full forecasting pipeline.

``SituatedBehaviorForecaster`` follows the standard estimator contract: all
constructor arguments are stored verbatim (so ``get_params``/``set_params``
and ``clone`` work), ``fit`` returns ``self``, and fitted state lives in
trailing-underscore attributes. X is a sequence of observation windows and y
the matching ground-truth futures.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import FutureStates, ObservationWindow, Prediction, WindowSample
from .losses import LossWeights
from .metrics import scatter_scores
from .model import ModelConfig
from .model.params import load_checkpoint, save_checkpoint
from .model.network import BehaviorModel
from .training import TrainConfig, evaluate_model, predict_samples, train


class SituatedBehaviorForecaster(BaseEstimator):
    """Forecasts gaze, head pose, hand and object trajectories, and
    per-object interaction probabilities from short observation histories."""

    def __init__(self, t_history=15, t_future=15, n_objects=48, top_k=12,
                 feature_dim=16, encoder_layers=4, intention_layers=4,
                 decoder_layers=16, d_clip=32, mlp_hidden=32,
                 no_hierarchy=False, vanilla_gcn=False,
                 epochs=50, batch_size=16, lr=0.01, lr_decay=0.95,
                 seed=0, window_stride=1, loss_weights=None):
        self.t_history = t_history
        self.t_future = t_future
        self.n_objects = n_objects
        self.top_k = top_k
        self.feature_dim = feature_dim
        self.encoder_layers = encoder_layers
        self.intention_layers = intention_layers
        self.decoder_layers = decoder_layers
        self.d_clip = d_clip
        self.mlp_hidden = mlp_hidden
        self.no_hierarchy = no_hierarchy
        self.vanilla_gcn = vanilla_gcn
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.lr_decay = lr_decay
        self.seed = seed
        self.window_stride = window_stride
        self.loss_weights = loss_weights

    # -- configuration ---------------------------------------------------------

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            t_history=self.t_history, t_future=self.t_future,
            n_objects=self.n_objects, top_k=self.top_k,
            feature_dim=self.feature_dim, encoder_layers=self.encoder_layers,
            intention_layers=self.intention_layers, decoder_layers=self.decoder_layers,
            d_clip=self.d_clip, mlp_hidden=self.mlp_hidden,
            no_hierarchy=self.no_hierarchy, vanilla_gcn=self.vanilla_gcn,
        )

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size, lr=self.lr,
            lr_decay=self.lr_decay, seed=self.seed, window_stride=self.window_stride,
            weights=self.loss_weights or LossWeights(), model=self._model_config(),
        )

    # -- validation --------------------------------------------------------------

    def _validate_observations(self, X) -> list[ObservationWindow]:
        cfg = self._model_config()
        windows = list(X)
        if not windows:
            raise ValueError("X must contain at least one observation window")
        for i, obs in enumerate(windows):
            if not isinstance(obs, ObservationWindow):
                raise TypeError(f"X[{i}] is {type(obs).__name__}, expected ObservationWindow")
            obs.validate()
            if obs.t_history != cfg.t_history or obs.n_objects != cfg.n_objects \
                    or obs.d_clip != cfg.d_clip:
                raise ValueError(
                    f"X[{i}] extents (T={obs.t_history}, N={obs.n_objects}, "
                    f"D_clip={obs.d_clip}) do not match the estimator configuration"
                )
        return windows

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("this forecaster is not fitted yet; call fit first")

    # -- estimator API -------------------------------------------------------------

    def fit(self, X, y):
        """Train on observation windows X and ground-truth futures y."""
        windows = self._validate_observations(X)
        futures = list(y)
        if len(futures) != len(windows):
            raise ValueError(f"X has {len(windows)} windows but y has {len(futures)} futures")
        samples = []
        for i, (obs, fut) in enumerate(zip(windows, futures)):
            if not isinstance(fut, FutureStates):
                raise TypeError(f"y[{i}] is {type(fut).__name__}, expected FutureStates")
            fut.validate()
            empty = np.zeros((0, obs.n_objects), dtype=np.uint8)
            samples.append(WindowSample(obs, fut, empty, empty))
        result = train(samples, self._train_config())
        self.model_ = result.model
        self.params_ = result.params
        self.history_ = result.history
        return self

    def predict(self, X) -> list[Prediction]:
        """Per-window predictions over the K selected candidate objects."""
        self._check_fitted()
        windows = self._validate_observations(X)
        empty = np.zeros((0, self.n_objects), dtype=np.uint8)
        dummy = [WindowSample(obs, None, empty, empty) for obs in windows]
        return predict_samples(self.model_, self.params_, dummy)

    def predict_proba(self, X) -> np.ndarray:
        """(n_windows, n_objects) interaction probabilities; objects not
        selected by the intention stage score 0."""
        preds = self.predict(X)
        return np.stack([scatter_scores(p, self.n_objects) for p in preds])

    def score(self, X, y) -> float:
        """Interaction average precision in [0, 1] over the given windows."""
        self._check_fitted()
        windows = self._validate_observations(X)
        futures = list(y)
        samples = []
        for obs, fut in zip(windows, futures):
            empty = np.zeros((0, obs.n_objects), dtype=np.uint8)
            samples.append(WindowSample(obs, fut, empty, empty))
        report = evaluate_model(self.model_, self.params_, samples)
        return report.object_ap / 100.0

    # -- persistence ----------------------------------------------------------------

    def save(self, path) -> None:
        self._check_fitted()
        save_checkpoint(path, self._model_config(), self.params_)

    @classmethod
    def from_checkpoint(cls, path) -> "SituatedBehaviorForecaster":
        config, params = load_checkpoint(path)
        est = cls(**config.to_dict())
        est.model_ = BehaviorModel(config)
        est.params_ = params
        est.history_ = []
        return est
