"""Irrepresentable-condition diagnostics for the difference-domain Lasso.

Two index conventions meet here.  A :class:`JumpSet` stores 1-based
sequence indices ``m`` with ``mu[m] != mu[m-1]`` (so ``m`` ranges over
``2..n``).  The matching design column is ``j = m - 1``: column ``j`` of
``X`` (1-based) has ones on rows ``j+1..n``, i.e. ``n - j`` of them.  The
closed forms below (``j / j_1``, ``(n - j) / (n - j_s)``, the Gram entries
``n - max(j_k, j_l)``) are all in column indices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .design import centered_design_dense
from .errors import (InvalidInputError, InvalidParameterError,
                     RankDeficiencyError, SingularityError)
from .signal_model import StepwiseSignal

#: "< 1" is decided as "< 1 - IC_MARGIN"; a magnitude of exactly 1 fails
IC_MARGIN = 1e-9


@dataclass(frozen=True)
class JumpSet:
    n: int
    indices: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        sg = tuple(int(s) for s in self.signs)
        if self.n < 2:
            raise InvalidInputError("n must be >= 2")
        if len(idx) != len(sg):
            raise InvalidInputError("indices and signs differ in length")
        if any(s not in (-1, 1) for s in sg):
            raise InvalidInputError("jump signs must be +1 or -1")
        if idx and (idx[0] < 2 or idx[-1] > self.n):
            raise InvalidInputError(f"jump indices must lie in 2..{self.n}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidInputError("jump indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "signs", sg)

    @classmethod
    def from_columns(cls, n, columns, signs=None) -> "JumpSet":
        columns = [int(c) for c in columns]
        if signs is None:
            signs = [1] * len(columns)
        return cls(n, tuple(c + 1 for c in columns), tuple(signs))

    @property
    def columns(self) -> np.ndarray:
        """1-based design columns of the jumps."""
        return np.array(self.indices, dtype=int) - 1

    @property
    def s(self) -> int:
        return len(self.indices)

    def theta_tilde(self, magnitudes=1.0) -> np.ndarray:
        """Difference vector (length n-1) with the given jump sizes and these signs."""
        theta = np.zeros(self.n - 1)
        theta[self.columns - 1] = np.asarray(self.signs) * np.asarray(magnitudes, dtype=float)
        return theta


def support_from_signal(signal: StepwiseSignal) -> JumpSet:
    return JumpSet(signal.n, tuple(signal.jump_indices), tuple(signal.jump_signs))


# --- closed-form inverse ----------------------------------------------------

@dataclass(frozen=True)
class TridiagonalInverse:
    """Inverse of ``M[i, j] = a[max(i, j)]``; symmetric, so one off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    @property
    def superdiag(self) -> np.ndarray:
        return self.offdiag

    @property
    def subdiag(self) -> np.ndarray:
        return self.offdiag

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matmul(self, rhs) -> np.ndarray:
        """Product with a vector or with the columns of a matrix."""
        rhs = np.asarray(rhs, dtype=float)
        d = self.diag.reshape((-1,) + (1,) * (rhs.ndim - 1))
        e = self.offdiag.reshape((-1,) + (1,) * (rhs.ndim - 1))
        out = d * rhs
        out[:-1] += e * rhs[1:]
        out[1:] += e * rhs[:-1]
        return out


def max_index_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    k = a.size
    idx = np.maximum.outer(np.arange(k), np.arange(k))
    return a[idx]


def tridiag_inverse(a) -> TridiagonalInverse:
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise InvalidInputError("a must be a non-empty vector")
    if a[-1] == 0:
        raise SingularityError("last entry is zero")
    gaps = a[:-1] - a[1:]
    if np.any(gaps == 0):
        raise SingularityError("adjacent entries coincide")
    k = a.size
    if k == 1:
        return TridiagonalInverse(np.array([1.0 / a[0]]), np.empty(0))
    diag = np.empty(k)
    diag[0] = 1.0 / gaps[0]
    diag[1:-1] = (a[:-2] - a[2:]) / (gaps[:-1] * gaps[1:])
    diag[-1] = a[-2] / (gaps[-1] * a[-1])
    return TridiagonalInverse(diag, -1.0 / gaps)


# --- irrepresentable condition ----------------------------------------------

@dataclass(frozen=True)
class ICReport:
    n: int
    jumps: JumpSet
    columns: np.ndarray   # 1-based non-jump columns
    signed: np.ndarray    # |b_j . sign| per column
    l1: np.ndarray        # ||b_j||_1 per column

    @property
    def max_signed(self) -> float:
        return float(self.signed.max()) if self.signed.size else 0.0

    @property
    def max_l1(self) -> float:
        return float(self.l1.max()) if self.l1.size else 0.0

    @property
    def eta(self) -> float:
        return 1.0 - self.max_signed

    @property
    def holds(self) -> bool:
        return self.max_signed < 1.0 - IC_MARGIN

    @property
    def strong_holds(self) -> bool:
        return self.max_l1 < 1.0 - IC_MARGIN

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "S": list(self.jumps.indices),
            "signs": list(self.jumps.signs),
            "max_signed": self.max_signed,
            "max_l1": self.max_l1,
            "eta": self.eta,
            "holds": self.holds,
            "strong_holds": self.strong_holds,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def regression_coefficients(jumps: JumpSet, columns=None) -> np.ndarray:
    """OLS coefficients (intercept first) of each column on the jump columns.

    Uses the closed-form tridiagonal inverse of the Gram matrix of
    ``[1, X_S]``, whose entries are ``n - max(j_k, j_l)`` with ``j_0 = 0``.
    Returns an ``(s + 1) x len(columns)`` array.
    """
    n = jumps.n
    js = np.concatenate(([0], jumps.columns))
    if columns is None:
        columns = np.setdiff1d(np.arange(1, n), jumps.columns)
    columns = np.asarray(columns, dtype=int)
    gram_inv = tridiag_inverse(n - js)
    rhs = n - np.maximum.outer(js, columns)
    return gram_inv.matmul(rhs.astype(float))


def ic_magnitudes(jumps: JumpSet) -> ICReport:
    if jumps.s == 0:
        raise InvalidInputError("jump set is empty")
    if jumps.n < 3:
        raise InvalidInputError("n must be >= 3")
    columns = np.setdiff1d(np.arange(1, jumps.n), jumps.columns)
    b = regression_coefficients(jumps, columns)[1:]
    signed = np.abs(np.asarray(jumps.signs, dtype=float) @ b)
    l1 = np.abs(b).sum(axis=0)
    return ICReport(jumps.n, jumps, columns, signed, l1)


class CaseValue(NamedTuple):
    case: str
    l1: float
    signed: float


def proof_case_value(jumps: JumpSet, column: int) -> CaseValue:
    """Closed-form ``||b_j||_1`` and ``|b_j . sign|`` for a non-jump column."""
    js = jumps.columns
    n = jumps.n
    signs = jumps.signs
    if column in set(js.tolist()) or not 1 <= column <= n - 1:
        raise InvalidInputError(f"column {column} is not a non-jump column")
    if column < js[0]:
        val = float(column / js[0])
        return CaseValue("ii", val, val)
    if column > js[-1]:
        val = float((n - column) / (n - js[-1]))
        return CaseValue("iii", val, val)
    k = int(np.searchsorted(js, column)) - 1
    c = (js[k + 1] - column) / (js[k + 1] - js[k])
    return CaseValue("i", 1.0, float(abs(c * signs[k] + (1 - c) * signs[k + 1])))


class StructuralVerdict(NamedTuple):
    strong_holds: bool
    ic_holds: bool


def structural_ic(jumps: JumpSet) -> StructuralVerdict:
    """Verdicts from jump geometry alone.

    The strong condition needs all jumps to be consecutive; the plain one
    additionally allows gaps as long as the two jumps around every gap of
    length >= 2 go in opposite directions.
    """
    if jumps.s == 0:
        raise InvalidInputError("jump set is empty")
    idx = jumps.indices
    gapped = [k for k in range(jumps.s - 1) if idx[k + 1] - idx[k] >= 2]
    strong = not gapped
    ic = strong or all(jumps.signs[k] != jumps.signs[k + 1] for k in gapped)
    return StructuralVerdict(strong, ic)


# --- sign recovery via the KKT conditions -----------------------------------

class SignRecoveryKKT:
    """Exact sign-recovery test for a fixed design and true coefficient vector.

    A Lasso solution with the signs of ``beta_star`` exists at ``lam`` iff

    * ``|X_Sc.T (X_S u - eps)| <= lam`` and
    * ``sign(beta_S + u) == sign(beta_S)``,

    where ``u = (X_S.T X_S)^-1 (X_S.T eps - lam sign(beta_S))``.  Both are
    affine in ``lam``, so a whole grid is checked at once.
    """

    def __init__(self, X, beta_star):
        X = np.asarray(X, dtype=float)
        beta_star = np.asarray(beta_star, dtype=float)
        if X.ndim != 2 or beta_star.shape != (X.shape[1],):
            raise InvalidInputError("X and beta_star have inconsistent shapes")
        self.X = X
        self.beta_star = beta_star
        self.support = np.flatnonzero(beta_star)
        self.off = np.flatnonzero(beta_star == 0)
        self.sign_s = np.sign(beta_star[self.support])
        XS = X[:, self.support]
        gram = XS.T @ XS
        if self.support.size:
            if np.linalg.matrix_rank(gram) < self.support.size:
                raise RankDeficiencyError("X_S.T X_S is singular")
            self._proj = np.linalg.solve(gram, XS.T)           # (X_S'X_S)^-1 X_S'
            self._drift = np.linalg.solve(gram, self.sign_s)   # (X_S'X_S)^-1 sign
        else:
            self._proj = np.zeros((0, X.shape[0]))
            self._drift = np.zeros(0)
        self._XS = XS
        self._XSc = X[:, self.off]

    def check(self, y, lam) -> np.ndarray | bool:
        lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
        if np.any(lam_arr <= 0):
            raise InvalidParameterError("lambda must be > 0")
        eps = np.asarray(y, dtype=float) - self.X @ self.beta_star
        u0 = self._proj @ eps
        # u(lam) = u0 - lam * drift
        u = u0[:, None] - np.outer(self._drift, lam_arr)
        r2 = np.all(np.sign(self.beta_star[self.support][:, None] + u)
                    == self.sign_s[:, None], axis=0)
        resid = self._XS @ u - eps[:, None]
        r1 = np.all(np.abs(self._XSc.T @ resid) <= lam_arr[None, :], axis=0)
        out = r1 & r2
        return bool(out[0]) if np.ndim(lam) == 0 else out


def kkt_sign_recovery(X, y, beta_star, lam: float) -> bool:
    return SignRecoveryKKT(X, beta_star).check(y, lam)


def transformed_problem(jumps: JumpSet, magnitudes=1.0) -> SignRecoveryKKT:
    """KKT checker for the centred difference-domain Lasso of a jump set."""
    return SignRecoveryKKT(centered_design_dense(jumps.n), jumps.theta_tilde(magnitudes))


class Theorem1Bound(NamedTuple):
    condition_ok: bool
    probability: float
    psi: float


def theorem1_bound(X, beta_star, lam: float, sigma_max_eig: float, eta: float) -> Theorem1Bound:
    """Sufficient condition and probability bound for Lasso sign recovery.

    ``condition_ok`` is ``min_S |beta_j| > Psi`` with
    ``Psi = lam * (eta / (sqrt(C_min) max_Sc ||X_j||) + ||(X_S'X_S)^-1 sign||_inf)``.
    The probability is ``1 - 2p exp(-lam^2 eta^2 / (2 Lmax max_Sc ||X_j||^2))``,
    unclamped.  With an empty complement the column maximum runs over all
    columns.
    """
    X = np.asarray(X, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    if not 0 < eta <= 1:
        raise InvalidParameterError("eta must lie in (0, 1]")
    if not sigma_max_eig >= 0 or not lam >= 0:
        raise InvalidParameterError("lambda and the noise eigenvalue must be >= 0")
    p = X.shape[1]
    support = np.flatnonzero(beta_star)
    off = np.flatnonzero(beta_star == 0)
    if support.size == 0:
        raise InvalidInputError("beta_star has empty support")
    XS = X[:, support]
    gram = XS.T @ XS
    c_min = float(np.linalg.eigvalsh(gram).min())
    if c_min <= 1e-12 * max(1.0, float(np.abs(gram).max())):
        raise RankDeficiencyError(f"C_min = {c_min:.3e} is not positive")
    norms = np.linalg.norm(X[:, off if off.size else np.arange(p)], axis=0)
    max_norm = float(norms.max())
    drift = np.linalg.solve(gram, np.sign(beta_star[support]))
    psi = lam * (eta / (np.sqrt(c_min) * max_norm) + float(np.abs(drift).max()))
    m = float(np.abs(beta_star[support]).min())
    denom = 2.0 * sigma_max_eig * max_norm ** 2
    if lam == 0:
        expo = 0.0
    elif denom == 0:
        expo = -np.inf
    else:
        expo = -(lam * eta) ** 2 / denom
    prob = 1.0 - 2.0 * p * float(np.exp(expo))
    return Theorem1Bound(bool(m > psi), prob, float(psi))
