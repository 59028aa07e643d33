"""Blocky signals, noisy draws, jump-sign patterns and the pattern loss.

Indices in block definitions and CSV files are 1-based; numpy arrays are
0-based as usual, so position ``i`` of a jump pattern (0-based) compares
entries ``i`` and ``i + 1`` of the underlying vector.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, InvalidPartitionError, InvalidParameterError

#: tolerance used when extracting signs from fitted (floating point) vectors
ESTIMATE_TOL = 1e-9


@dataclass(frozen=True)
class StepwiseSignal:
    """Piecewise-constant expected signal stored as ``(L, U, level)`` blocks."""

    blocks: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        blocks = tuple((int(lo), int(hi), float(level)) for lo, hi, level in self.blocks)
        if not blocks:
            raise InvalidPartitionError("a signal needs at least one block")
        expected_lo = 1
        for k, (lo, hi, level) in enumerate(blocks):
            if lo != expected_lo:
                raise InvalidPartitionError(
                    f"block {k + 1} starts at {lo}, expected {expected_lo}")
            if hi < lo:
                raise InvalidPartitionError(f"block {k + 1} is empty ({lo}..{hi})")
            if not np.isfinite(level):
                raise InvalidPartitionError(f"block {k + 1} has non-finite level")
            if k > 0 and level == blocks[k - 1][2]:
                raise InvalidPartitionError(
                    f"blocks {k} and {k + 1} share level {level}; merge them")
            expected_lo = hi + 1
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return self.blocks[-1][1]

    @property
    def levels(self) -> np.ndarray:
        return np.array([b[2] for b in self.blocks])

    @property
    def jump_indices(self) -> np.ndarray:
        """1-based indices ``L_j`` (j >= 2) where the level changes."""
        return np.array([b[0] for b in self.blocks[1:]], dtype=int)

    @property
    def jump_signs(self) -> np.ndarray:
        return np.sign(np.diff(self.levels)).astype(int)

    @property
    def min_jump(self) -> float:
        """Smallest absolute level change, ``inf`` for a single block."""
        if len(self.blocks) == 1:
            return float("inf")
        return float(np.min(np.abs(np.diff(self.levels))))

    def mu(self) -> np.ndarray:
        sizes = [hi - lo + 1 for lo, hi, _ in self.blocks]
        return np.repeat(self.levels, sizes)


def make_stepwise(blocks: Iterable[Sequence[float]]) -> StepwiseSignal:
    return StepwiseSignal(tuple(tuple(b) for b in blocks))


def paper_signal() -> StepwiseSignal:
    """Seven-block benchmark signal of length 430 with three spikes."""
    return make_stepwise([
        (1, 100, 0.0),
        (101, 110, -2.0),
        (111, 210, -0.1),
        (211, 220, 2.0),
        (221, 320, 0.1),
        (321, 330, -2.0),
        (331, 430, 0.0),
    ])


@dataclass(frozen=True)
class NoisySequence:
    values: np.ndarray
    sigma: float
    seed: int
    stream: tuple[int, ...] = field(default=())


def replicate_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for one replicate; depends only on ``seed`` and ``stream``.

    The stream key is fed to :class:`numpy.random.SeedSequence` as a spawn
    key, so ``replicate_rng(s, i, r)`` is the same no matter which worker
    draws it or in which order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(stream)))


def sample_noisy(signal: StepwiseSignal, sigma: float, seed: int,
                 stream: Sequence[int] = ()) -> NoisySequence:
    if not sigma >= 0:
        raise InvalidParameterError(f"sigma must be >= 0, got {sigma}")
    mu = signal.mu()
    if sigma == 0:
        values = mu.copy()
    else:
        values = mu + sigma * replicate_rng(seed, *stream).standard_normal(mu.size)
    return NoisySequence(values=values, sigma=float(sigma), seed=int(seed),
                         stream=tuple(stream))


@dataclass(frozen=True)
class JumpPattern:
    signs: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, JumpPattern):
            return NotImplemented
        return np.array_equal(self.signs, other.signs)

    def __hash__(self):
        return hash(self.signs.tobytes())

    @property
    def positions(self) -> np.ndarray:
        """0-based positions with a nonzero sign."""
        return np.flatnonzero(self.signs)


def _as_vector(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    return arr


def jump_signs(v, tol: float = 0.0) -> np.ndarray:
    """Signs of successive differences with ``|diff| <= tol`` mapped to 0."""
    v = _as_vector(v)
    if v.size < 2:
        raise InvalidInputError("need at least two entries to form a jump pattern")
    if tol < 0:
        raise InvalidParameterError("tol must be >= 0")
    d = np.diff(v)
    s = np.sign(d).astype(np.int8)
    s[np.abs(d) <= tol] = 0
    return s


def jump_pattern(v, tol: float = 0.0) -> JumpPattern:
    return JumpPattern(jump_signs(v, tol))


def pattern_loss(estimate, truth, tol: float = ESTIMATE_TOL) -> int:
    """Number of positions whose jump signs disagree; 0 iff the pattern is recovered."""
    estimate = _as_vector(estimate, "estimate")
    truth = _as_vector(truth, "truth")
    if estimate.shape != truth.shape:
        raise InvalidInputError(
            f"length mismatch: {estimate.size} vs {truth.size}")
    return int(np.count_nonzero(jump_signs(estimate, tol) != jump_signs(truth, tol)))


# --- CSV interfaces --------------------------------------------------------

BLOCKS_HEADER = ["L", "U", "level"]
SEQUENCE_HEADER = ["index", "value"]


def _read_rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty file") from None
        if [c.strip() for c in first] != header:
            raise InvalidInputError(
                f"{path}: expected header {','.join(header)}, got {','.join(first)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InvalidInputError(f"{path}:{lineno}: expected {len(header)} fields")
            rows.append((lineno, [c.strip() for c in row]))
    return rows


def read_blocks_csv(path: str | Path) -> StepwiseSignal:
    blocks = []
    for lineno, (lo, hi, level) in _read_rows(path, BLOCKS_HEADER):
        try:
            blocks.append((int(lo), int(hi), float(level)))
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: malformed block row") from None
    return make_stepwise(blocks)


def write_blocks_csv(signal: StepwiseSignal, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(BLOCKS_HEADER)
    for lo, hi, level in signal.blocks:
        writer.writerow([lo, hi, repr(level)])


def read_sequence_csv(path: str | Path) -> np.ndarray:
    values = []
    for k, (lineno, (idx, value)) in enumerate(_read_rows(path, SEQUENCE_HEADER), start=1):
        try:
            i, x = int(idx), float(value)
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: malformed sequence row") from None
        if i != k:
            raise InvalidInputError(f"{path}:{lineno}: index {i}, expected {k}")
        if not np.isfinite(x):
            raise InvalidInputError(f"{path}:{lineno}: non-finite value")
        values.append(x)
    if not values:
        raise InvalidInputError(f"{path}: no data rows")
    return np.array(values)


def write_sequence_csv(values, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SEQUENCE_HEADER)
    for i, x in enumerate(np.asarray(values, dtype=float), start=1):
        writer.writerow([i, repr(float(x))])
