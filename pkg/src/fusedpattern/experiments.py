"""Monte Carlo recovery experiments.

Replicate ``r`` at noise level index ``k`` draws its noise from
``replicate_rng(seed, k, r)``, so results do not depend on worker count or
execution order.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .design import center_response, centered_design_dense, reconstruct_mu
from .errors import InvalidParameterError, InvalidSetupError
from .flsa import FusionPath, flsa_path
from .ic import JumpSet, ic_magnitudes, transformed_problem
from .puffer import ThresholdPath, precondition_scores, soft_threshold, theorem6_bound
from .signal_model import (ESTIMATE_TOL, StepwiseSignal, jump_signs, pattern_loss,
                           replicate_rng, sample_noisy)

METHODS = ("preconditioned", "flsa")


def binomial_se(p: float, reps: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / reps)


# --- pattern loss along a solution path --------------------------------------

def threshold_path_losses(y, truth_signs) -> tuple[np.ndarray, np.ndarray]:
    """Pattern loss of the preconditioned fit at one λ inside every linear piece.

    The fitted jump signs are ``sign(soft_threshold(diff(y), λ))``, so the
    loss is read off the scores directly.
    """
    path = ThresholdPath(precondition_scores(y))
    lams = path.candidate_lambdas()
    w = path.scores
    signs = np.sign(w)[None, :] * (np.abs(w)[None, :] > lams[:, None])
    losses = np.count_nonzero(signs != np.asarray(truth_signs)[None, :], axis=1)
    return lams, losses


def fusion_path_losses(path: FusionPath, truth_signs) -> tuple[np.ndarray, np.ndarray]:
    """Pattern loss of the FLSA fit on every linear piece of its path.

    On a piece the fitted jump signs are ``sign(y[i+1] - y[i])`` at every
    surviving boundary and 0 elsewhere; each merge event zeroes its
    boundaries.  Returns one representative λ per piece with its loss.
    """
    truth = np.asarray(truth_signs)
    sgn = path.boundary_signs
    loss = int(np.count_nonzero(sgn != truth))
    events = path.merge_events
    edges = [0.0] + [e.lam for e in events]
    reps = [0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])] + [edges[-1] + 1.0]
    losses = [loss]
    for e in events:
        for p in e.positions:
            loss += int(truth[p] != 0) - int(sgn[p] != truth[p])
        losses.append(loss)
    return np.array(reps), np.array(losses)


def replicate_success(y, truth_signs, method: str) -> bool:
    if method == "preconditioned":
        _, losses = threshold_path_losses(y, truth_signs)
    elif method == "flsa":
        _, losses = fusion_path_losses(flsa_path(y), truth_signs)
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    return bool(losses.min() == 0)


# --- configs and results -------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    signal: StepwiseSignal
    sigmas: tuple[float, ...]
    replicates: int = 1000
    seed: int = 0
    method: str = "preconditioned"
    tol: float = ESTIMATE_TOL  # used where fitted vectors are compared

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if not self.sigmas:
            raise InvalidParameterError("need at least one sigma")
        if any(not s > 0 for s in self.sigmas):
            raise InvalidParameterError("sigma values must be > 0")
        if self.replicates < 1:
            raise InvalidParameterError("replicates must be >= 1")
        if self.method not in METHODS:
            raise InvalidParameterError(f"method must be one of {METHODS}")

    def to_dict(self) -> dict:
        return {
            "blocks": [list(b) for b in self.signal.blocks],
            "sigmas": list(self.sigmas),
            "replicates": self.replicates,
            "seed": self.seed,
            "method": self.method,
            "tol": self.tol,
        }


@dataclass
class RecoveryResult:
    config: ExperimentConfig
    flags: dict[float, np.ndarray]
    elapsed: float = 0.0

    def probability(self, sigma: float) -> float:
        return float(np.mean(self.flags[sigma]))

    def stderr(self, sigma: float) -> float:
        return binomial_se(self.probability(sigma), self.config.replicates)

    def table(self) -> list[tuple[float, float, float]]:
        return [(s, self.probability(s), self.stderr(s)) for s in self.config.sigmas]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "summary": [{"sigma": s, "probability": p, "stderr": e}
                        for s, p, e in self.table()],
            "flags": {repr(s): self.flags[s].astype(int).tolist()
                      for s in self.config.sigmas},
            "elapsed_seconds": self.elapsed,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def write_sweep_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["sigma", "probability", "stderr"])
    for s, p, e in rows:
        writer.writerow([repr(float(s)), repr(float(p)), repr(float(e))])


def _run_chunk(args) -> np.ndarray:
    signal, sigma, seed, k, method, reps = args
    truth = jump_signs(signal.mu())
    out = np.empty(len(reps), dtype=bool)
    for i, r in enumerate(reps):
        y = sample_noisy(signal, sigma, seed, stream=(k, r)).values
        out[i] = replicate_success(y, truth, method)
    return out


def recovery_probability(config: ExperimentConfig, workers: int = 1) -> RecoveryResult:
    """Fraction of replicates for which some λ on the path has zero pattern loss."""
    start = time.perf_counter()
    flags = {}
    reps = np.arange(config.replicates)
    for k, sigma in enumerate(config.sigmas):
        if workers <= 1:
            flags[sigma] = _run_chunk((config.signal, sigma, config.seed, k,
                                       config.method, reps))
        else:
            chunks = np.array_split(reps, workers)
            jobs = [(config.signal, sigma, config.seed, k, config.method, c)
                    for c in chunks]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                flags[sigma] = np.concatenate(list(pool.map(_run_chunk, jobs)))
    return RecoveryResult(config, flags, time.perf_counter() - start)


def sigma_sweep(config: ExperimentConfig, workers: int = 1) -> list[tuple[float, float, float]]:
    """``(sigma, P, stderr)`` rows, one per noise level of the config."""
    return recovery_probability(config, workers).table()


# --- single-draw comparison --------------------------------------------------

def _l2_optimal(fit: Callable[[float], np.ndarray], edges, truth) -> tuple[float, float]:
    """Exact minimiser of ||fit(λ) - truth||² over a piecewise-affine path.

    ``edges`` are the ascending kinks starting at 0; the fit is affine on
    each ``[edges[k], edges[k+1]]`` and constant beyond the last kink.
    """
    best_lam, best_err = 0.0, np.inf
    edges = list(edges)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        a = fit(lo)
        slope = (fit(hi) - a) / (hi - lo)
        r = a - truth
        denom = float(slope @ slope)
        t = 0.0 if denom == 0 else min(max(-float(r @ slope) / denom, 0.0), hi - lo)
        lam = lo + t
        err = float(np.sum((fit(lam) - truth) ** 2))
        if err < best_err:
            best_lam, best_err = lam, err
    last = edges[-1]
    err = float(np.sum((fit(last) - truth) ** 2))
    if err < best_err:
        best_lam, best_err = last, err
    return best_lam, math.sqrt(best_err)


@dataclass
class MethodReport:
    method: str
    pattern_lambda: float
    pattern_loss: int
    pattern_fit: np.ndarray
    l2_lambda: float
    l2_error: float
    l2_pattern_loss: int
    l2_fit: np.ndarray

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "pattern_lambda": self.pattern_lambda,
            "pattern_loss": self.pattern_loss,
            "l2_lambda": self.l2_lambda,
            "l2_error": self.l2_error,
            "l2_pattern_loss": self.l2_pattern_loss,
        }


def compare_methods(y, truth: StepwiseSignal, tol: float = ESTIMATE_TOL) -> dict[str, MethodReport]:
    """Pattern-optimal and ℓ2-optimal selections on both solution paths."""
    y = np.asarray(y, dtype=float)
    mu_star = truth.mu()
    if y.shape != mu_star.shape:
        raise InvalidParameterError("y and truth differ in length")
    truth_signs = jump_signs(mu_star)
    reports = {}

    w = precondition_scores(y)

    def pre_fit(lam):
        return reconstruct_mu(soft_threshold(w, lam), y)

    lams, losses = threshold_path_losses(y, truth_signs)
    k = int(np.argmin(losses))
    pre_edges = np.concatenate(([0.0], np.unique(np.abs(w))))
    l2_lam, l2_err = _l2_optimal(pre_fit, pre_edges, mu_star)
    reports["preconditioned"] = MethodReport(
        "preconditioned", float(lams[k]), pattern_loss(pre_fit(lams[k]), mu_star, tol),
        pre_fit(lams[k]), l2_lam, l2_err, pattern_loss(pre_fit(l2_lam), mu_star, tol),
        pre_fit(l2_lam))

    path = flsa_path(y)
    lams, losses = fusion_path_losses(path, truth_signs)
    k = int(np.argmin(losses))
    l2_lam, l2_err = _l2_optimal(path.fit, np.concatenate(([0.0], path.knots)), mu_star)
    reports["flsa"] = MethodReport(
        "flsa", float(lams[k]), pattern_loss(path.fit(lams[k]), mu_star, tol),
        path.fit(lams[k]), l2_lam, l2_err, pattern_loss(path.fit(l2_lam), mu_star, tol),
        path.fit(l2_lam))
    return reports


# --- theory checks -----------------------------------------------------------

@dataclass
class Theorem6Cell:
    lam: float
    sigma: float
    bound: float
    condition_ok: bool
    frequency: float
    stderr: float


def theorem6_experiment(signal: StepwiseSignal, lams: Sequence[float],
                        sigmas: Sequence[float], reps: int, seed: int) -> list[Theorem6Cell]:
    """Fixed-λ exact sign-recovery frequency of the preconditioned fit vs. its bound."""
    mu = signal.mu()
    target = jump_signs(mu)
    lams = np.asarray(lams, dtype=float)
    cells = []
    for k, sigma in enumerate(sigmas):
        hits = np.zeros(lams.size, dtype=int)
        for r in range(reps):
            w = precondition_scores(sample_noisy(signal, sigma, seed, (k, r)).values)
            signs = np.sign(w)[None, :] * (np.abs(w)[None, :] > lams[:, None])
            hits += np.all(signs == target[None, :], axis=1)
        for lam, h in zip(lams, hits):
            b = theorem6_bound(float(lam), float(sigma), signal.n, signal)
            p = h / reps
            cells.append(Theorem6Cell(float(lam), float(sigma), b.probability,
                                      bool(b.condition_ok), p, binomial_se(p, reps)))
    return cells


@dataclass
class NecessityResult:
    lambdas: np.ndarray
    per_lambda: np.ndarray   # fixed-λ sign-recovery frequency
    frequency: float         # some λ on the grid recovers the signs
    stderr: float
    reps: int
    max_signed: float


def default_lambda_grid(magnitude: float = 1.0, size: int = 20) -> np.ndarray:
    return np.geomspace(0.01, 1.0, size) * magnitude


def ic_necessity_experiment(jumps: JumpSet, sigma: float, reps: int, seed: int,
                            magnitudes=1.0, lambdas=None) -> NecessityResult:
    """Sign recovery of the difference-domain Lasso when the IC fails.

    Noise is added to the sequence, centred, and each draw is checked with
    the exact KKT conditions on a λ grid.
    """
    report = ic_magnitudes(jumps)
    if report.holds:
        raise InvalidSetupError(
            f"irrepresentable condition holds (max signed magnitude "
            f"{report.max_signed:.6f} < 1); nothing to test")
    if not sigma > 0:
        raise InvalidParameterError("sigma must be > 0")
    lambdas = default_lambda_grid(float(np.min(magnitudes))) if lambdas is None \
        else np.asarray(lambdas, dtype=float)
    kkt = transformed_problem(jumps, magnitudes)
    mean_part = centered_design_dense(jumps.n) @ jumps.theta_tilde(magnitudes)
    hits = np.zeros(lambdas.size, dtype=int)
    any_hits = 0
    for r in range(reps):
        eps = sigma * replicate_rng(seed, r).standard_normal(jumps.n)
        y_tilde = mean_part + center_response(eps).y_tilde
        ok = kkt.check(y_tilde, lambdas)
        hits += ok
        any_hits += bool(ok.any())
    freq = any_hits / reps
    return NecessityResult(lambdas, hits / reps, freq, binomial_se(freq, reps), reps,
                           report.max_signed)
