"""Offline change point detectors over penalized segment costs.

All detectors operate on a univariate series without missing values and
return 1-based change point locations, each marking the first observation
of a new segment. Argmin ties are always broken toward the smallest
index, so runs are bit-reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .costs import Penalty, SegmentCost, mbic_fold, penalty_value
from .data import ChangePoints, TimeSeries, to_partition

# Slack on the PELT pruning inequality so float jitter cannot drop a
# candidate that the unpruned recursion would keep on a tie.
PRUNE_SLACK = 1e-9

DETECTOR_NAMES = ("amoc", "binseg", "segneigh", "pelt", "zero", "oracle_dp")


class DetectionTimeout(Exception):
    """Raised when a detector exceeds its wall-clock deadline."""


def _check_deadline(deadline: float | None) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise DetectionTimeout


def _univariate(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        if series.n_dim != 1:
            raise ValueError(f"{series.name}: detector supports univariate series only")
        y = np.asarray(series.dim(0), dtype=float)
    else:
        y = np.asarray(series, dtype=float).reshape(-1)
    if np.isnan(y).any():
        raise ValueError("detector does not support missing values")
    return y


@dataclass(frozen=True)
class DetectorSpec:
    """One detector configuration: cost, penalty, and structural limits."""

    name: str
    cost_kind: str = "mean"
    penalty: Penalty = field(default_factory=lambda: Penalty("mbic", n_params=1))
    max_cp: int = 5
    min_seg_len: int = 1

    def __post_init__(self) -> None:
        if self.name not in DETECTOR_NAMES:
            raise ValueError(f"unknown detector {self.name!r}")
        if self.max_cp < 1:
            raise ValueError("max_cp must be >= 1")
        if self.min_seg_len < 1:
            raise ValueError("min_seg_len must be >= 1")


def detect_zero(series) -> ChangePoints:
    """Baseline that always reports an unchanged series."""
    return ()


def detect_amoc(
    series,
    cost_kind: str = "mean",
    penalty: Penalty | None = None,
    min_seg_len: int = 1,
    deadline: float | None = None,
) -> ChangePoints:
    """At most one change: best single split against the unsplit series."""
    y = _univariate(series)
    cost = SegmentCost(cost_kind, y)
    msl = max(min_seg_len, cost.min_seg_len)
    n = cost.n_obs
    if n < 2 * msl:
        raise ValueError(f"series of length {n} too short for min_seg_len {msl}")
    if penalty is None:
        penalty = Penalty.for_cost("mbic", cost_kind)
    _check_deadline(deadline)
    eff = mbic_fold(cost, penalty.folds_segment_length)
    null = eff(1, n)
    taus = np.arange(msl + 1, n - msl + 2)
    split = eff(1, taus - 1) + eff(taus, n)
    best = int(np.argmin(split))
    if split[best] + penalty_value(penalty, n) < null:
        return (int(taus[best]),)
    return ()


def binseg_sequence(
    y: np.ndarray,
    cost_kind: str,
    fold: bool,
    max_cp: int,
    min_seg_len: int = 1,
    deadline: float | None = None,
) -> list[tuple[float, int]]:
    """Greedy split sequence of binary segmentation, penalty-independent.

    Returns up to ``max_cp`` pairs ``(gain, location)`` in the order the
    splits were taken; a caller applies a penalty by truncating at the
    first gain below it.
    """
    cost = SegmentCost(cost_kind, y)
    msl = max(min_seg_len, cost.min_seg_len)
    eff = mbic_fold(cost, fold)
    n = cost.n_obs

    def best_split(a: int, b: int) -> tuple[float, int] | None:
        lo, hi = a + msl, b - msl + 1
        if lo > hi:
            return None
        taus = np.arange(lo, hi + 1)
        split = eff(a, taus - 1) + eff(taus, b)
        i = int(np.argmin(split))
        return eff(a, b) - float(split[i]), int(taus[i])

    segments: dict[tuple[int, int], tuple[float, int] | None] = {(1, n): best_split(1, n)}
    sequence: list[tuple[float, int]] = []
    while len(sequence) < max_cp:
        _check_deadline(deadline)
        splittable = [(a, b, s) for (a, b), s in sorted(segments.items()) if s is not None]
        if not splittable:
            break
        a, b, (gain, tau) = max(splittable, key=lambda item: (item[2][0], -item[0]))
        sequence.append((gain, tau))
        del segments[(a, b)]
        segments[(a, tau - 1)] = best_split(a, tau - 1)
        segments[(tau, b)] = best_split(tau, b)
    return sequence


def detect_binseg(
    series,
    cost_kind: str = "mean",
    penalty: Penalty | None = None,
    max_cp: int = 5,
    min_seg_len: int = 1,
    deadline: float | None = None,
) -> ChangePoints:
    """Binary segmentation: greedy splits until the gain drops below the penalty."""
    y = _univariate(series)
    if penalty is None:
        penalty = Penalty.for_cost("mbic", cost_kind)
    sequence = binseg_sequence(
        y, cost_kind, penalty.folds_segment_length, max_cp, min_seg_len, deadline
    )
    return change_points_from_sequence(sequence, penalty_value(penalty, y.size))


def change_points_from_sequence(
    sequence: Sequence[tuple[float, int]], penalty: float
) -> ChangePoints:
    """Truncate a greedy split sequence at the first gain below ``penalty``."""
    cps = []
    for gain, tau in sequence:
        if gain < penalty:
            break
        cps.append(tau)
    return tuple(sorted(cps))


def segneigh_tables(
    y: np.ndarray,
    cost_kind: str,
    fold: bool,
    max_q: int,
    min_seg_len: int = 1,
    deadline: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact dynamic program over the number of change points.

    ``C[q, t]`` is the minimal total segment cost of ``y[1..t]`` using
    exactly ``q`` change points, ``B[q, t]`` the location of the last one.
    Rows are penalty-independent, so one table serves a whole penalty grid.
    """
    cost = SegmentCost(cost_kind, y)
    msl = max(min_seg_len, cost.min_seg_len)
    n = cost.n_obs
    max_q = max(0, min(max_q, n // msl - 1))
    eff = mbic_fold(cost, fold)

    seg_cost = np.full((n + 1, n + 1), np.inf)  # [a, b], 1-based
    for a in range(1, n - msl + 2):
        bs = np.arange(a + msl - 1, n + 1)
        seg_cost[a, a + msl - 1 :] = eff(a, bs)

    c_table = np.full((max_q + 1, n + 1), np.inf)
    b_table = np.zeros((max_q + 1, n + 1), dtype=int)
    c_table[0, 1:] = seg_cost[1, 1:]
    for q in range(1, max_q + 1):
        _check_deadline(deadline)
        # rows: candidate last change point tau = 1..n (tau = 1 is ruled
        # out because a prefix of length 0 has infinite cost)
        totals = c_table[q - 1, :n][:, None] + seg_cost[1:, :]
        c_table[q, :] = totals.min(axis=0)
        b_table[q, :] = totals.argmin(axis=0) + 1
    return c_table, b_table


def backtrack_segneigh(b_table: np.ndarray, q: int, n_obs: int) -> ChangePoints:
    cps = []
    t = n_obs
    for level in range(q, 0, -1):
        tau = int(b_table[level, t])
        cps.append(tau)
        t = tau - 1
    return tuple(sorted(cps))


def detect_segneigh(
    series,
    cost_kind: str = "mean",
    penalty: Penalty | None = None,
    max_cp: int = 5,
    min_seg_len: int = 1,
    deadline: float | None = None,
) -> ChangePoints:
    """Exact segmentation per change point count, then penalized count choice."""
    y = _univariate(series)
    if penalty is None:
        penalty = Penalty.for_cost("mbic", cost_kind)
    c_table, b_table = segneigh_tables(
        y, cost_kind, penalty.folds_segment_length, max_cp, min_seg_len, deadline
    )
    beta = penalty_value(penalty, y.size)
    totals = c_table[:, y.size] + beta * np.arange(c_table.shape[0])
    q = int(np.argmin(totals))
    return backtrack_segneigh(b_table, q, y.size)


def _optimal_partition(
    y: np.ndarray,
    cost_kind: str,
    penalty: Penalty,
    min_seg_len: int,
    prune: bool,
    deadline: float | None,
) -> tuple[ChangePoints, float]:
    cost = SegmentCost(cost_kind, y)
    msl = max(min_seg_len, cost.min_seg_len)
    n = cost.n_obs
    if n < msl:
        raise ValueError(f"series of length {n} too short for min_seg_len {msl}")
    eff = mbic_fold(cost, penalty.folds_segment_length)
    beta = penalty_value(penalty, n)

    best = np.full(n + 1, np.inf)
    best[0] = -beta
    last = np.zeros(n + 1, dtype=int)
    cands: list[int] = []
    # A candidate whose prune condition fires at step s may still be the
    # optimal predecessor of steps closer than one minimum segment length
    # (where extending the optimum at s is inadmissible), so its removal
    # is delayed until step s + msl.
    kill_step: dict[int, int] = {}
    for s in range(1, n + 1):
        _check_deadline(deadline)
        if s - msl >= 0:
            cands.append(s - msl)
        if kill_step:
            cands = [t for t in cands if kill_step.get(t, n + 1) > s]
        if not cands:
            continue
        arr = np.asarray(cands)
        vals = best[arr] + eff(arr + 1, s) + beta
        i = int(np.argmin(vals))
        best[s] = float(vals[i])
        last[s] = int(arr[i])
        if prune:
            doomed = vals - beta > best[s] + PRUNE_SLACK
            for t in arr[doomed]:
                kill_step.setdefault(int(t), s + msl)

    cps = []
    s = n
    while s > 0:
        t = int(last[s])
        if t > 0:
            cps.append(t + 1)
        s = t
    return tuple(sorted(cps)), float(best[n])


def detect_pelt(
    series,
    cost_kind: str = "mean",
    penalty: Penalty | None = None,
    min_seg_len: int = 1,
    deadline: float | None = None,
) -> ChangePoints:
    """Pruned exact minimization of the penalized segmentation objective."""
    y = _univariate(series)
    if penalty is None:
        penalty = Penalty.for_cost("mbic", cost_kind)
    cps, _ = _optimal_partition(y, cost_kind, penalty, min_seg_len, True, deadline)
    return cps


def oracle_dp(
    series,
    cost_kind: str = "mean",
    penalty: Penalty | None = None,
    min_seg_len: int = 1,
    deadline: float | None = None,
) -> ChangePoints:
    """Unpruned quadratic dynamic program; reference for PELT exactness."""
    y = _univariate(series)
    if penalty is None:
        penalty = Penalty.for_cost("mbic", cost_kind)
    cps, _ = _optimal_partition(y, cost_kind, penalty, min_seg_len, False, deadline)
    return cps


def partition_objective(
    series,
    change_points,
    cost_kind: str = "mean",
    penalty: Penalty | None = None,
    min_seg_len: int = 1,
) -> float:
    """Penalized objective value of a given segmentation of ``series``."""
    y = _univariate(series)
    cost = SegmentCost(cost_kind, y)
    if penalty is None:
        penalty = Penalty.for_cost("mbic", cost_kind)
    eff = mbic_fold(cost, penalty.folds_segment_length)
    partition = to_partition(change_points, cost.n_obs)
    total = sum(eff(a, b) for a, b in partition)
    return float(total + penalty_value(penalty, cost.n_obs) * (len(partition) - 1))


def detect(spec: DetectorSpec, series, deadline: float | None = None) -> ChangePoints:
    """Run the detector described by ``spec`` on ``series``."""
    if spec.name == "zero":
        return detect_zero(series)
    if spec.name == "amoc":
        return detect_amoc(series, spec.cost_kind, spec.penalty, spec.min_seg_len, deadline)
    if spec.name == "binseg":
        return detect_binseg(
            series, spec.cost_kind, spec.penalty, spec.max_cp, spec.min_seg_len, deadline
        )
    if spec.name == "segneigh":
        return detect_segneigh(
            series, spec.cost_kind, spec.penalty, spec.max_cp, spec.min_seg_len, deadline
        )
    if spec.name == "pelt":
        return detect_pelt(series, spec.cost_kind, spec.penalty, spec.min_seg_len, deadline)
    return oracle_dp(series, spec.cost_kind, spec.penalty, spec.min_seg_len, deadline)
