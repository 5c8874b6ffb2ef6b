"""Adam optimizer and central finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .autodiff import Tensor
from .exceptions import NonFiniteError


class AdamState:
    """First/second moment estimates and step counter for one parameter set."""

    def __init__(self, params: Mapping[str, Tensor], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}


class Adam:
    """Bias-corrected Adam over a named parameter mapping."""

    def __init__(self, params: Mapping[str, Tensor], lr: float = 0.01,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.state = AdamState(params, beta1, beta2, eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self, lr: float | None = None) -> None:
        """Apply one update using each parameter's accumulated gradient.

        Parameters whose gradient was never populated are treated as having a
        zero gradient.
        """
        lr = self.lr if lr is None else lr
        st = self.state
        st.step_count += 1
        t = st.step_count
        bc1 = 1.0 - st.beta1 ** t
        bc2 = 1.0 - st.beta2 ** t
        for name, p in self.params.items():
            g = p.grad_array()
            if g.shape != p.data.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter {name} {p.data.shape}")
            m = st.m[name] = st.beta1 * st.m[name] + (1.0 - st.beta1) * g
            v = st.v[name] = st.beta2 * st.v[name] + (1.0 - st.beta2) * (g * g)
            update = lr * (m / bc1) / (np.sqrt(v / bc2) + st.eps)
            p.data = p.data - update


def grad_check(f: Callable[[Tensor], Tensor], point: np.ndarray, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` must map a tensor to a scalar tensor. The error per coordinate is
    |analytic - numeric| / max(1, |analytic|); the max over coordinates is
    returned. Raises :class:`NonFiniteError` if f is non-finite at `point`.
    """
    x = Tensor(np.array(point, dtype=np.float64, copy=True), requires_grad=True)
    out = f(x)
    if out.data.size != 1:
        raise ValueError("grad_check target must return a scalar")
    if not np.isfinite(out.data).all():
        raise NonFiniteError("function value is not finite at the check point")
    out.backward()
    analytic = x.grad_array()

    flat = x.data.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = f(Tensor(x.data)).item()
        flat[i] = orig - h
        lo = f(Tensor(x.data)).item()
        flat[i] = orig
        numeric[i] = (hi - lo) / (2.0 * h)
    numeric = numeric.reshape(x.data.shape)

    denom = np.maximum(1.0, np.abs(analytic))
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check_params(f: Callable[[], Tensor], params: Mapping[str, Tensor], h: float = 1e-5) -> float:
    """Gradient check of a scalar closure against every named parameter.

    The closure reads the live parameter tensors, so perturbations are made
    in place and restored. Returns the max relative error across all
    coordinates of all parameters.
    """
    for p in params.values():
        p.zero_grad()
    out = f()
    if out.data.size != 1:
        raise ValueError("grad_check target must return a scalar")
    out.backward()
    analytic = {name: p.grad_array().copy() for name, p in params.items()}

    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = f().item()
            flat[i] = orig - h
            lo = f().item()
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * h)
            a = analytic[name].reshape(-1)[i]
            err = abs(a - numeric) / max(1.0, abs(a))
            if err > worst:
                worst = err
    return worst
