"""Fused Lasso signal approximator.

Minimises ``0.5 ||y - mu||^2 + lam1 ||mu||_1 + lam2 sum |mu[i+1] - mu[i]|``.

* :func:`flsa_path` computes the whole ``lam1 = 0`` solution path in
  ``lam2``.  Adjacent groups only ever fuse as ``lam2`` grows, so the path
  is stored as one fusion level per boundary.
* :func:`apply_lambda1` handles ``lam1 > 0`` by soft-thresholding the
  ``lam1 = 0`` fit.
* :func:`qp_oracle` solves the problem directly (cyclic coordinate descent
  on the box-constrained dual, with exact group polishing) and certifies the
  answer with :func:`kkt_residual`.  It is slow and meant for validation.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConvergenceError, InvalidInputError, InvalidParameterError
from .puffer import soft_threshold

#: relative gap under which two fusion levels count as the same event
EVENT_TOL = 1e-12


def _sequence(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise InvalidInputError("y must be a non-empty vector")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("y contains non-finite values")
    return y


@dataclass(frozen=True)
class FusedGroups:
    starts: np.ndarray  # 0-based first index of each group
    stops: np.ndarray   # 0-based one-past-last index
    values: np.ndarray

    def __len__(self):
        return self.starts.size

    def labels(self) -> np.ndarray:
        """Group id of every position."""
        return np.repeat(np.arange(self.starts.size), self.stops - self.starts)

    def expand(self) -> np.ndarray:
        return np.repeat(self.values, self.stops - self.starts)


@dataclass(frozen=True)
class MergeEvent:
    lam: float
    positions: tuple[int, ...]  # boundaries removed; boundary i sits between i and i+1


@dataclass(frozen=True)
class FusionPath:
    """Piecewise-linear ``lam1 = 0`` solution path.

    ``fusion_lambda[i]`` is the smallest ``lam2`` at which positions ``i``
    and ``i + 1`` share a fitted value (0 for tied observations).  While a
    boundary survives, the sign of the fitted difference across it equals
    the sign of ``y[i + 1] - y[i]``, which fixes every group's slope.
    """

    y: np.ndarray
    fusion_lambda: np.ndarray

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def boundary_signs(self) -> np.ndarray:
        return np.sign(np.diff(self.y)).astype(int)

    @property
    def merge_events(self) -> list[MergeEvent]:
        """Fusions at ``lam2 > 0`` grouped by (numerically) equal level."""
        lam = self.fusion_lambda
        order = np.argsort(lam, kind="stable")
        events: list[MergeEvent] = []
        current: list[int] = []
        level = None
        for i in order:
            li = lam[i]
            if li <= 0:
                continue
            if level is not None and li - level <= EVENT_TOL * max(1.0, level):
                current.append(int(i))
                continue
            if current:
                events.append(MergeEvent(level, tuple(sorted(current))))
            level, current = float(li), [int(i)]
        if current:
            events.append(MergeEvent(level, tuple(sorted(current))))
        return events

    @property
    def knots(self) -> np.ndarray:
        """Distinct positive fusion levels, ascending."""
        return np.array([e.lam for e in self.merge_events])

    def groups(self, lam2: float) -> FusedGroups:
        if not lam2 >= 0:
            raise InvalidParameterError(f"lambda2 must be >= 0, got {lam2}")
        n = self.n
        alive = np.flatnonzero(self.fusion_lambda > lam2)
        starts = np.concatenate(([0], alive + 1))
        stops = np.concatenate((alive + 1, [n]))
        sums = np.add.reduceat(self.y, starts)
        sizes = stops - starts
        sgn = self.boundary_signs
        left = np.zeros(starts.size)
        right = np.zeros(starts.size)
        left[1:] = sgn[alive]
        right[:-1] = sgn[alive]
        # group value is (sum - lam2 * tension) / size with
        # tension = sign(value - left nbr) + sign(value - right nbr)
        tension = left - right
        values = (sums - lam2 * tension) / sizes
        return FusedGroups(starts, stops, values)

    def fit(self, lam2: float) -> np.ndarray:
        return self.groups(lam2).expand()

    def segments(self) -> Iterator[tuple[float, float, FusedGroups, np.ndarray]]:
        """``(lam_lo, lam_hi, groups at lam_lo, slope of each group value)`` per linear piece."""
        edges = np.concatenate(([0.0], self.knots, [np.inf]))
        sgn = self.boundary_signs
        for lo, hi in zip(edges[:-1], edges[1:]):
            g = self.groups(lo)
            alive = g.stops[:-1] - 1
            tension = np.zeros(len(g))
            tension[1:] += sgn[alive]
            tension[:-1] -= sgn[alive]
            yield float(lo), float(hi), g, -tension / (g.stops - g.starts)

    def partition_labels(self, lam2: float) -> np.ndarray:
        alive = self.fusion_lambda > lam2
        return np.concatenate(([0], np.cumsum(alive)))


def flsa_path(y) -> FusionPath:
    """Exact fusion path of the ``lam1 = 0`` problem, O(n log n)."""
    y = _sequence(y)
    n = y.size
    fusion = np.full(max(n - 1, 0), np.inf)
    if n == 1:
        fusion.setflags(write=False)
        return FusionPath(y=y, fusion_lambda=fusion)
    sgn = np.sign(np.diff(y)).astype(int)
    csum = np.concatenate(([0.0], np.cumsum(y)))

    # groups keyed by start; end_of[start] and start_of[end] are inclusive
    end_of = {}
    start_of = {}
    a = 0
    for i in range(n - 1):
        if sgn[i] == 0:
            fusion[i] = 0.0
        else:
            end_of[a], start_of[i] = i, a
            a = i + 1
    end_of[a], start_of[n - 1] = n - 1, a

    def stats(lo, hi):
        s = csum[hi + 1] - csum[lo]
        t = (sgn[lo - 1] if lo > 0 else 0) - (sgn[hi] if hi < n - 1 else 0)
        return s, hi - lo + 1, t

    stamp = np.zeros(n - 1, dtype=np.int64)
    heap: list[tuple[float, int, int]] = []

    def push(i, lam_now):
        # boundary i separates [start_of[i], i] and [i + 1, end_of[i + 1]]
        sg, ng, tg = stats(start_of[i], i)
        sh, nh, th = stats(i + 1, end_of[i + 1])
        num = sh * ng - sg * nh
        den = th * ng - tg * nh
        if sgn[i] * den <= 0:
            return  # groups move apart or in parallel
        lam = num / den
        if lam - lam_now <= EVENT_TOL * max(1.0, abs(lam_now)):
            lam = lam_now
        heapq.heappush(heap, (lam, i, int(stamp[i])))

    for i in range(n - 1):
        if sgn[i] != 0:
            push(i, 0.0)

    lam_now = 0.0
    while heap:
        lam, i, st = heapq.heappop(heap)
        if st != stamp[i] or fusion[i] != np.inf:
            continue
        lam_now = max(lam, lam_now)
        fusion[i] = lam_now
        lo, hi = start_of.pop(i), end_of.pop(i + 1)
        del end_of[lo], start_of[hi]
        end_of[lo], start_of[hi] = hi, lo
        for b in (lo - 1, hi):
            if 0 <= b < n - 1:
                stamp[b] += 1
                push(b, lam_now)
    fusion.setflags(write=False)
    return FusionPath(y=y, fusion_lambda=fusion)


def flsa_fit(path: FusionPath, lam2: float) -> np.ndarray:
    return path.fit(lam2)


def apply_lambda1(mu_hat, lam1: float) -> np.ndarray:
    if not lam1 >= 0:
        raise InvalidParameterError(f"lambda1 must be >= 0, got {lam1}")
    return soft_threshold(np.asarray(mu_hat, dtype=float), lam1)


def flsa_solve(y, lam1: float = 0.0, lam2: float = 0.0) -> np.ndarray:
    """Fit at one ``(lam1, lam2)`` through the path and soft-thresholding."""
    return apply_lambda1(flsa_path(y).fit(lam2), lam1)


def objective(y, mu, lam1: float, lam2: float) -> float:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return float(0.5 * np.sum((y - mu) ** 2) + lam1 * np.sum(np.abs(mu))
                 + lam2 * np.sum(np.abs(np.diff(mu))))


def kkt_residual(y, mu, lam1: float, lam2: float, zero_tol: float = 1e-9) -> float:
    """Largest violation of the subgradient optimality conditions at ``mu``.

    Stationarity reads ``w[k] = w[k-1] + mu[k] - y[k] + v[k]`` with
    ``w[-1] = w[n-1] = 0``, ``v[k]`` in ``lam1 * d|mu[k]|`` and ``w[k]`` in
    ``lam2 * d|mu[k+1] - mu[k]|``.  The reachable set of each ``w[k]`` is an
    interval; whenever it misses the admissible set the gap is recorded and
    the walk resumes from the nearest admissible point.  A return value of
    0 certifies optimality exactly.
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n = y.size
    if mu.shape != y.shape:
        raise InvalidInputError("mu and y differ in length")
    nz = np.abs(mu) > zero_tol
    vfix = lam1 * np.sign(mu)
    d = np.diff(mu)
    jump = np.abs(d) > zero_tol
    lo = hi = 0.0
    worst = 0.0
    for k in range(n):
        base = mu[k] - y[k]
        if nz[k]:
            lo, hi = lo + base + vfix[k], hi + base + vfix[k]
        else:
            lo, hi = lo + base - lam1, hi + base + lam1
        if k == n - 1:
            a = b = 0.0
        elif jump[k]:
            a = b = lam2 * (1.0 if d[k] > 0 else -1.0)
        else:
            a, b = -lam2, lam2
        new_lo, new_hi = max(lo, a), min(hi, b)
        if new_lo > new_hi:
            worst = max(worst, new_lo - new_hi)
            # resume from the admissible point nearest the reachable interval
            p = a if hi < a else b
            new_lo = new_hi = p
        lo, hi = new_lo, new_hi
    return worst


def _polish(y, w, lam1, lam2):
    """Exact fit for the partition and boundary signs read off the dual iterate."""
    n = y.size
    at_bound = np.flatnonzero(np.abs(w) >= lam2 * (1.0 - 1e-12)) if lam2 > 0 else np.arange(n - 1)
    t = np.sign(w) if lam2 > 0 else np.zeros(n - 1)
    csum = np.concatenate(([0.0], np.cumsum(y)))
    cuts = list(at_bound)
    while True:
        starts = np.array([0] + [c + 1 for c in cuts], dtype=int)
        stops = np.array([c + 1 for c in cuts] + [n], dtype=int)
        sizes = stops - starts
        sums = csum[stops] - csum[starts]
        tl = np.zeros(starts.size)
        tr = np.zeros(starts.size)
        if cuts:
            tb = t[np.array(cuts)]
            tl[1:] = tb
            tr[:-1] = tb
        vals = soft_threshold((sums - lam2 * (tl - tr)) / sizes, lam1)
        if lam2 == 0:
            break
        # drop boundaries whose fitted jump disagrees with the dual sign
        bad = [k for k, c in enumerate(cuts)
               if np.sign(vals[k + 1] - vals[k]) != t[c]]
        if not bad:
            break
        cuts = [c for k, c in enumerate(cuts) if k not in set(bad)]
    return np.repeat(vals, sizes)


def qp_oracle(y, lam1: float = 0.0, lam2: float = 0.0, tol: float = 1e-8,
              max_sweeps: int = 1_000_000, polish_every: int = 16) -> np.ndarray:
    """Direct solve by cyclic dual coordinate descent, certified by :func:`kkt_residual`.

    The dual is ``min 0.5 ||y - v + B w||^2`` over ``|v| <= lam1``,
    ``|w| <= lam2`` with ``(B w)[k] = w[k] - w[k-1]``; the primal fit is the
    residual ``y - v + B w``.  Every ``polish_every`` sweeps the fused groups
    and jump signs implied by the iterate are solved in closed form and the
    result is returned once its KKT residual is at most ``tol``.
    """
    y = _sequence(y)
    if not lam1 >= 0 or not lam2 >= 0:
        raise InvalidParameterError("penalties must be >= 0")
    if not tol > 0:
        raise InvalidParameterError("tol must be > 0")
    n = y.size
    w = [0.0] * (n - 1)
    v = [0.0] * n
    r = list(y)
    best = np.inf
    for sweep in range(max_sweeps + 1):
        if sweep % polish_every == 0:
            mu = _polish(y, np.array(w), lam1, lam2)
            res = kkt_residual(y, mu, lam1, lam2, zero_tol=0.0)
            best = min(best, res)
            if res <= tol:
                return mu
        if lam2 > 0:
            for i in range(n - 1):
                old = w[i]
                new = old + 0.5 * (r[i + 1] - r[i])
                if new > lam2:
                    new = lam2
                elif new < -lam2:
                    new = -lam2
                delta = new - old
                if delta:
                    w[i] = new
                    r[i] += delta
                    r[i + 1] -= delta
        if lam1 > 0:
            for k in range(n):
                old = v[k]
                new = old + r[k]
                if new > lam1:
                    new = lam1
                elif new < -lam1:
                    new = -lam1
                delta = new - old
                if delta:
                    v[k] = new
                    r[k] -= delta
    raise ConvergenceError(f"qp_oracle did not certify within {max_sweeps} sweeps", best)
