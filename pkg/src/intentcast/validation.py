"""Input validation helpers shared by the data model and the estimator API."""

from __future__ import annotations

import numpy as np


def check_shape(name: str, arr: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.shape != shape:
        raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
    return arr


def check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains NaN or Inf")
    return arr


def check_unit_rows(name: str, arr: np.ndarray, tol: float = 1e-6) -> None:
    """Every row of the trailing axis must have unit Euclidean norm."""
    norms = np.linalg.norm(arr, axis=-1)
    bad = np.abs(norms - 1.0) > tol
    if bad.any():
        idx = tuple(int(i[0]) for i in np.nonzero(bad))
        raise ValueError(f"{name}: row {idx} has norm {norms[bad][0]:.6f}, expected 1 within {tol}")


def check_rotations(name: str, arr: np.ndarray, tol: float = 1e-6) -> None:
    """Trailing 3x3 slices must be proper rotations (R^T R = I, det = +1)."""
    arr = np.asarray(arr)
    if arr.shape[-2:] != (3, 3):
        raise ValueError(f"{name}: expected trailing 3x3 matrices, got {arr.shape}")
    gram = np.matmul(np.swapaxes(arr, -1, -2), arr)
    eye = np.eye(3)
    ortho_err = np.max(np.abs(gram - eye), axis=(-1, -2))
    if (ortho_err > tol).any():
        idx = int(np.argmax(ortho_err))
        raise ValueError(f"{name}: slice {idx} is not orthonormal (error {ortho_err.flat[idx]:.2e})")
    det = np.linalg.det(arr)
    if (np.abs(det - 1.0) > tol).any():
        idx = int(np.argmax(np.abs(det - 1.0)))
        raise ValueError(f"{name}: slice {idx} has det {det.flat[idx]:.6f}, expected +1")
