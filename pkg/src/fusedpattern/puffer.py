"""Preconditioned fused Lasso via the Puffer transformation.

With ``Xt = U diag(D) V.T`` and ``F = U diag(1/D) U.T``, the preconditioned
design ``Z = F Xt = U V.T`` has orthonormal columns, so the Lasso on
``(Z, a = F Yt)`` is solved exactly by soft-thresholding the scores
``Z.T a``.  Those scores equal the successive differences of ``y``; the SVD
route is kept as the check on that shortcut.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .design import center_response, centered_design_dense, reconstruct_mu
from .errors import InvalidInputError, InvalidParameterError
from .signal_model import StepwiseSignal


@dataclass(frozen=True)
class PufferDecomposition:
    n: int
    U: np.ndarray  # n x (n-1), orthonormal columns
    D: np.ndarray  # n-1 singular values, descending
    V: np.ndarray  # (n-1) x (n-1), orthogonal

    @property
    def F(self) -> np.ndarray:
        return (self.U / self.D) @ self.U.T

    @property
    def Z(self) -> np.ndarray:
        return self.U @ self.V.T

    def scores(self, y) -> np.ndarray:
        """``Z.T @ F @ Yt`` evaluated as ``V diag(1/D) U.T Yt``."""
        y_tilde = center_response(y).y_tilde
        return self.V @ ((self.U.T @ y_tilde) / self.D)


_svd_cache: dict[int, PufferDecomposition] = {}
_svd_lock = threading.Lock()


def _decompose(n: int) -> PufferDecomposition:
    U, D, Vt = np.linalg.svd(centered_design_dense(n), full_matrices=False)
    V = Vt.T
    # make the largest-magnitude entry of every V column nonnegative
    pivot = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
    flip = np.where(pivot < 0, -1.0, 1.0)
    V = V * flip
    U = U * flip
    for arr in (U, D, V):
        arr.setflags(write=False)
    return PufferDecomposition(n=n, U=U, D=D, V=V)


def svd_centered_design(n: int) -> PufferDecomposition:
    """SVD of the centred design for length ``n``; cached per ``n``."""
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    n = int(n)
    with _svd_lock:
        dec = _svd_cache.get(n)
        if dec is None:
            dec = _svd_cache[n] = _decompose(n)
    return dec


def soft_threshold(x, lam: float):
    """Entrywise ``sign(x) * max(|x| - lam, 0)``; scalars in, scalars out."""
    if not lam >= 0:
        raise InvalidParameterError(f"threshold must be >= 0, got {lam}")
    out = np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def precondition_scores(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise InvalidInputError("y must be a vector of length >= 2")
    return np.diff(y)


def precondition_scores_svd(y) -> np.ndarray:
    """Same scores computed through the explicit decomposition."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise InvalidInputError("y must be a vector of length >= 2")
    return svd_centered_design(y.size).scores(y)


def breakpoints(scores) -> np.ndarray:
    """Kinks of the soft-threshold path: ``|scores|`` in descending order."""
    return np.sort(np.abs(np.asarray(scores, dtype=float)))[::-1]


@dataclass(frozen=True)
class ThresholdPath:
    scores: np.ndarray

    @property
    def breakpoints(self) -> np.ndarray:
        return breakpoints(self.scores)

    def theta(self, lam: float) -> np.ndarray:
        return soft_threshold(self.scores, lam)

    def candidate_lambdas(self) -> np.ndarray:
        """One λ inside every linear piece, from 0 up past the largest kink."""
        bp = np.unique(np.abs(self.scores))  # ascending
        edges = np.concatenate(([0.0], bp))
        mids = 0.5 * (edges[:-1] + edges[1:])
        top = bp[-1] + 1.0 if bp.size else 1.0
        return np.concatenate(([0.0], mids, [top]))


class PreconditionedFit(NamedTuple):
    theta_tilde: np.ndarray
    mu_hat: np.ndarray
    breakpoints: np.ndarray


def preconditioned_fit(y, lam: float) -> PreconditionedFit:
    if not lam >= 0:
        raise InvalidParameterError(f"lambda must be >= 0, got {lam}")
    y = np.asarray(y, dtype=float)
    w = precondition_scores(y)
    theta = soft_threshold(w, lam)
    return PreconditionedFit(theta, reconstruct_mu(theta, y), breakpoints(w))


class Theorem6Bound(NamedTuple):
    probability: float
    condition_ok: bool | None


def theorem6_bound(lam: float, sigma: float, n: int,
                   signal: StepwiseSignal | None = None) -> Theorem6Bound:
    """Lower bound ``1 - 2n exp(-lam^2 / (8 sigma^2))`` on exact sign recovery.

    The value is not clamped.  ``condition_ok`` reports whether the smallest
    jump of ``signal`` is at least ``2 * lam`` (``None`` without a signal).
    """
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    if not lam >= 0:
        raise InvalidParameterError(f"lambda must be >= 0, got {lam}")
    prob = 1.0 - 2.0 * n * math.exp(-lam * lam / (8.0 * sigma * sigma))
    ok = None if signal is None else bool(signal.min_jump >= 2.0 * lam)
    return Theorem6Bound(prob, ok)
