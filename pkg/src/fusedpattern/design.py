"""Change of variables between a sequence and its successive differences.

``mu = A @ theta`` with ``A`` the lower-triangular all-ones matrix, so
``theta[0] = mu[0]`` and ``theta[i] = mu[i] - mu[i-1]``.  The regression
design ``X`` is ``A`` without its first column (``X[r, c] = 1`` iff
``r > c``, 0-based) and ``Xt`` is ``X`` with every column centred.

Indexing: entry ``i`` of a difference vector ``theta_tilde`` (length
``n - 1``) is the jump between positions ``i`` and ``i + 1`` of ``mu``.

All products here are matrix-free; only :func:`centered_design_dense`
materialises ``Xt``, for the SVD.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


def _vector(v, name) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    return arr


def theta_from_mu(mu) -> np.ndarray:
    mu = _vector(mu, "mu")
    if mu.size == 0:
        raise InvalidInputError("mu is empty")
    return np.diff(mu, prepend=0.0)


def mu_from_theta(theta) -> np.ndarray:
    theta = _vector(theta, "theta")
    if theta.size == 0:
        raise InvalidInputError("theta is empty")
    return np.cumsum(theta)


def column_means(n: int) -> np.ndarray:
    """Means of the columns of ``X``: ``(n - 1 - c) / n`` for 0-based ``c``."""
    return np.arange(n - 1, 0, -1) / n


def design_apply(v) -> np.ndarray:
    """``X @ v`` for ``v`` of length ``n - 1``."""
    v = _vector(v, "v")
    return np.concatenate(([0.0], np.cumsum(v)))


def centered_design_apply(n: int, v, transpose: bool = False) -> np.ndarray:
    """``Xt @ v`` (``v`` of length ``n - 1``) or ``Xt.T @ v`` (length ``n``) in O(n)."""
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    v = _vector(v, "v")
    if not transpose:
        if v.size != n - 1:
            raise InvalidInputError(f"expected length {n - 1}, got {v.size}")
        xv = design_apply(v)
        # column means weighted by v, computed as a suffix count to stay exact
        shift = np.dot(np.arange(n - 1, 0, -1), v) / n
        return xv - shift
    if v.size != n:
        raise InvalidInputError(f"expected length {n}, got {v.size}")
    # (X.T v)_c = sum of v over rows r > c
    suffix = np.cumsum(v[::-1])[::-1][1:]
    return suffix - np.arange(n - 1, 0, -1) * np.mean(v)


def centered_design_dense(n: int) -> np.ndarray:
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    rows = np.arange(n)[:, None]
    cols = np.arange(n - 1)[None, :]
    return (rows > cols).astype(float) - column_means(n)[None, :]


@dataclass(frozen=True)
class CenteredData:
    y_tilde: np.ndarray
    y_bar: float


def center_response(y) -> CenteredData:
    y = _vector(y, "y")
    if y.size == 0:
        raise InvalidInputError("y is empty")
    y_bar = float(np.mean(y))
    return CenteredData(y_tilde=y - y_bar, y_bar=y_bar)


def reconstruct_mu(theta_tilde, y) -> np.ndarray:
    """Fitted sequence from fitted differences, with the intercept ``mean(y) - Xbar @ theta_tilde``."""
    theta_tilde = _vector(theta_tilde, "theta_tilde")
    y = _vector(y, "y")
    n = y.size
    if n < 2 or theta_tilde.size != n - 1:
        raise InvalidInputError(
            f"theta_tilde must have length len(y) - 1 = {n - 1}, got {theta_tilde.size}")
    theta1 = np.mean(y) - np.dot(column_means(n), theta_tilde)
    return theta1 + design_apply(theta_tilde)
