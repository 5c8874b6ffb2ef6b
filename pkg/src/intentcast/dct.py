"""Orthonormal type-II discrete cosine transform along the leading time axis.

The forward transform uses the orthonormal scaling (row 0 scaled by 1/sqrt(T),
the rest by sqrt(2/T)), which makes the basis matrix orthogonal and the
inverse transform its plain transpose. Transforms apply independently per
trailing channel.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .autodiff import Tensor, matmul


@lru_cache(maxsize=64)
def basis(t: int) -> np.ndarray:
    """T x T orthonormal DCT-II basis; row k holds the k-th cosine atom."""
    if t < 1:
        raise ValueError("transform length must be >= 1")
    n = np.arange(t)
    k = np.arange(t).reshape(-1, 1)
    mat = np.cos(np.pi * (2 * n + 1) * k / (2 * t))
    scale = np.full((t, 1), np.sqrt(2.0 / t))
    scale[0, 0] = np.sqrt(1.0 / t)
    out = scale * mat
    out.flags.writeable = False
    return out


def dct(series: np.ndarray) -> np.ndarray:
    """DCT-II coefficients of a T x ... array along axis 0."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim < 1 or arr.shape[0] < 1:
        raise ValueError("dct needs a non-empty time axis")
    return np.tensordot(basis(arr.shape[0]), arr, axes=(1, 0))


def idct(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct` (transpose of the orthonormal basis)."""
    arr = np.asarray(coeffs, dtype=np.float64)
    if arr.ndim < 1 or arr.shape[0] < 1:
        raise ValueError("idct needs a non-empty coefficient axis")
    return np.tensordot(basis(arr.shape[0]).T, arr, axes=(1, 0))


def dct_tensor(x: Tensor, axis: int) -> Tensor:
    """Differentiable DCT along `axis` of a taped tensor."""
    return _apply_basis(x, axis, transposed=False)


def idct_tensor(x: Tensor, axis: int) -> Tensor:
    """Differentiable inverse DCT along `axis` of a taped tensor."""
    return _apply_basis(x, axis, transposed=True)


def _apply_basis(x: Tensor, axis: int, transposed: bool) -> Tensor:
    ndim = x.ndim
    axis = axis % ndim
    t = x.shape[axis]
    mat = basis(t).T if transposed else basis(t)
    perm = [i for i in range(ndim) if i != axis] + [axis]
    moved = x.transpose(perm)
    out = matmul(moved.reshape(-1, t), Tensor(mat.T)).reshape(moved.shape)
    inverse = list(np.argsort(perm))
    return out.transpose(inverse)
