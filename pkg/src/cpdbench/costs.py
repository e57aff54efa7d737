"""Segment cost functions and penalties for penalized segmentation.

All costs are twice the negative maximum Gaussian log-likelihood of a
segment, up to segment-additive constants:

* ``mean``     - change in mean, unit variance: sum of squared residuals
  about the segment mean.
* ``var``      - change in variance about a fixed mean of 0 (the data is
  assumed standardized): ``l * (log sigma2 + 1)`` with
  ``sigma2 = sum(y^2) / l``.
* ``meanvar``  - change in mean and variance:
  ``l * (log 2*pi + log sigma2 + 1)`` with ``sigma2`` the in-segment
  variance about the segment mean.

Variance estimates are floored at ``VARIANCE_FLOOR`` so degenerate
segments keep finite cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VARIANCE_FLOOR = 1e-8
LOG_2PI = math.log(2.0 * math.pi)

COST_KINDS = ("mean", "var", "meanvar")

# Free parameters per segment for each cost; penalties scale with this.
COST_PARAMS = {"mean": 1, "var": 1, "meanvar": 2}

# Variance-style costs need two points for a meaningful estimate.
COST_MIN_SEG_LEN = {"mean": 1, "var": 2, "meanvar": 2}

PENALTY_KINDS = ("none", "sic", "bic", "mbic", "aic", "hq", "manual")


@dataclass(frozen=True)
class Penalty:
    """Per-change-point penalty of the segmentation objective.

    ``n_params`` is the parameter count of the cost function in use.
    ``sic`` and ``bic`` are synonyms. The ``mbic`` penalty additionally
    folds a ``log(l/T)`` term per segment into the cost, handled by
    :func:`mbic_fold` inside the detectors.
    """

    kind: str
    value: float | None = None
    n_params: int = 1

    def __post_init__(self) -> None:
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "manual":
            if self.value is None or self.value < 0:
                raise ValueError("manual penalty needs a value >= 0")
        elif self.value is not None:
            raise ValueError(f"penalty {self.kind!r} takes no value")
        if self.n_params < 1:
            raise ValueError("n_params must be >= 1")

    @classmethod
    def for_cost(cls, kind: str, cost_kind: str, value: float | None = None) -> "Penalty":
        return cls(kind, value, COST_PARAMS[cost_kind])

    @property
    def folds_segment_length(self) -> bool:
        return self.kind == "mbic"


def penalty_value(penalty: Penalty, n_obs: int) -> float:
    """Penalty charged per change point for a series of length ``n_obs``."""
    if n_obs < 2:
        raise ValueError("penalty_value needs n_obs >= 2")
    k = penalty.n_params
    if penalty.kind == "none":
        return 0.0
    if penalty.kind in ("sic", "bic"):
        return (k + 1) * math.log(n_obs)
    if penalty.kind == "mbic":
        return (k + 2) * math.log(n_obs)
    if penalty.kind == "aic":
        return 2.0 * (k + 1)
    if penalty.kind == "hq":
        # log log T is negative for T = 2; clamp to keep the value >= 0.
        return max(0.0, 2.0 * (k + 1) * math.log(math.log(n_obs)))
    return float(penalty.value)  # manual


def manual_grid(n_values: int = 101, low: float = 1e-3, high: float = 1e3) -> np.ndarray:
    """Log-spaced grid of manual penalty values."""
    return np.logspace(math.log10(low), math.log10(high), n_values)


class SegmentCost:
    """O(1) segment cost queries over a univariate series via prefix sums.

    Segment bounds are 1-based and inclusive; ``a`` and ``b`` may be numpy
    arrays for vectorized queries.
    """

    def __init__(self, kind: str, y: np.ndarray):
        if kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {kind!r}")
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size == 0:
            raise ValueError("empty series")
        if not np.isfinite(y).all():
            raise ValueError("cost functions require finite, non-missing values")
        self.kind = kind
        self.n_obs = int(y.size)
        self._s1 = np.concatenate([[0.0], np.cumsum(y)])
        self._s2 = np.concatenate([[0.0], np.cumsum(y * y)])

    @property
    def min_seg_len(self) -> int:
        return COST_MIN_SEG_LEN[self.kind]

    def sum_sq(self, a, b):
        """Plain sum of squares over ``[a, b]``; exactly additive in splits."""
        return self._s2[b] - self._s2[np.asarray(a) - 1]

    def cost(self, a, b):
        """Segment cost of ``[a, b]``; raises if the segment is empty."""
        a_arr = np.asarray(a)
        b_arr = np.asarray(b)
        if np.any(a_arr > b_arr) or np.any(a_arr < 1) or np.any(b_arr > self.n_obs):
            raise ValueError("invalid segment bounds")
        length = b_arr - a_arr + 1
        s1 = self._s1[b_arr] - self._s1[a_arr - 1]
        s2 = self._s2[b_arr] - self._s2[a_arr - 1]
        if self.kind == "mean":
            out = s2 - s1 * s1 / length
        elif self.kind == "var":
            sigma2 = np.maximum(s2 / length, VARIANCE_FLOOR)
            out = length * (np.log(sigma2) + 1.0)
        else:  # meanvar
            sigma2 = np.maximum((s2 - s1 * s1 / length) / length, VARIANCE_FLOOR)
            out = length * (LOG_2PI + np.log(sigma2) + 1.0)
        if np.isscalar(a) and np.isscalar(b):
            return float(out)
        return out


def mbic_fold(cost: SegmentCost, fold: bool):
    """Return a segment cost callable, adding ``log(l/T)`` when ``fold``.

    The fold keeps the MBIC objective in the per-change-point penalty form
    used by the dynamic programs; the added term preserves the K = 0
    pruning bound of PELT.
    """
    if not fold:
        return cost.cost
    log_t = math.log(cost.n_obs)

    def folded(a, b):
        length = np.asarray(b) - np.asarray(a) + 1
        out = cost.cost(a, b) + (np.log(length) - log_t)
        if np.isscalar(a) and np.isscalar(b):
            return float(out)
        return out

    return folded
