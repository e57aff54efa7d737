"""Bayesian online change point detection with a Gaussian conjugate model.

The filter tracks a posterior over the run length ``r``, the number of
observations since the current segment began: at time ``t``, ``r = 0``
means ``y_t`` is the first observation of a new segment, so a change
point sits at ``t``. Changes arrive with constant hazard ``1 /
intensity``. Each segment is modeled as Gaussian with a normal-inverse-
gamma prior (mean ``mu0`` fixed at 0 for standardized data), which gives
Student-t predictive densities. Dimensions of a multivariate series are
modeled independently and their predictive densities multiplied.

All recursion arithmetic is carried out in the log domain.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .data import ChangePoints, TimeSeries
from .offline import DetectionTimeout


@dataclass(frozen=True)
class BocpdParams:
    """Hazard intensity, prior hyperparameters, and optional truncation.

    ``intensity`` is the expected spacing between change points; the
    hazard of a change at any step is its reciprocal. ``truncate`` keeps
    only the most probable run lengths after each step (None keeps all).
    """

    intensity: float = 100.0
    alpha0: float = 1.0
    beta0: float = 1.0
    kappa0: float = 1.0
    mu0: float = 0.0
    truncate: int | None = None

    def __post_init__(self) -> None:
        if self.intensity <= 0 or self.alpha0 <= 0 or self.beta0 <= 0 or self.kappa0 <= 0:
            raise ValueError("intensity and prior hyperparameters must be positive")
        if self.truncate is not None and self.truncate < 1:
            raise ValueError("truncate must be >= 1")


@dataclass(frozen=True)
class RunLengthPosterior:
    """Column ``t`` of ``probs`` is the run length distribution after ``y_t``."""

    probs: np.ndarray  # (T + 1, T + 1); probs[r, t]
    n_obs: int

    def column(self, t: int) -> np.ndarray:
        return self.probs[: t + 1, t]


def _log_student_t(x: np.ndarray, df: np.ndarray, loc: np.ndarray, scale: np.ndarray):
    z = (x - loc) / scale
    return (
        gammaln((df + 1.0) / 2.0)
        - gammaln(df / 2.0)
        - 0.5 * np.log(df * math.pi)
        - np.log(scale)
        - (df + 1.0) / 2.0 * np.log1p(z * z / df)
    )


def run_length_filter(
    series, params: BocpdParams = BocpdParams(), deadline: float | None = None
) -> RunLengthPosterior:
    """Forward filter over run lengths for a series without missing values."""
    if isinstance(series, TimeSeries):
        values = series.values
    else:
        values = np.asarray(series, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
    if not np.isfinite(values).all():
        raise ValueError("run length filter requires finite, non-missing values")
    n, d = values.shape

    log_h = math.log(1.0 / params.intensity)
    log_1mh = math.log1p(-1.0 / params.intensity)

    # Sufficient statistics per hypothesis "the last m observations form
    # the current segment"; row m of each array is the posterior after m
    # observations, row 0 the prior.
    mu = np.full((1, d), params.mu0)
    beta = np.full((1, d), params.beta0)
    kappa = np.array([params.kappa0])
    alpha = np.array([params.alpha0])

    probs = np.zeros((n + 1, n + 1))
    probs[0, 0] = 1.0
    log_msg = np.array([0.0])  # r_1 = 0 with certainty

    for t in range(1, n + 1):
        if deadline is not None and time.monotonic() > deadline:
            raise DetectionTimeout
        x = values[t - 1]
        scale = np.sqrt(beta * (kappa + 1.0)[:, None] / (alpha[:, None] * kappa[:, None]))
        log_pred = _log_student_t(x, 2.0 * alpha[:, None], mu, scale).sum(axis=1)
        if t == 1:
            log_msg = np.array([0.0])
        else:
            growth = log_msg + log_pred[1:t] + log_1mh
            change = log_h + log_pred[0]
            log_msg = np.concatenate([[change], growth])
            log_msg -= logsumexp(log_msg)
        if params.truncate is not None and log_msg.size > params.truncate:
            drop = np.argsort(log_msg)[: log_msg.size - params.truncate]
            log_msg[drop] = -np.inf
            log_msg -= logsumexp(log_msg)
        probs[:t, t] = np.exp(log_msg)

        beta_next = beta + kappa[:, None] * (x - mu) ** 2 / (2.0 * (kappa + 1.0)[:, None])
        mu_next = (kappa[:, None] * mu + x) / (kappa + 1.0)[:, None]
        mu = np.vstack([np.full((1, d), params.mu0), mu_next])
        beta = np.vstack([np.full((1, d), params.beta0), beta_next])
        kappa = np.concatenate([[params.kappa0], kappa + 1.0])
        alpha = np.concatenate([[params.alpha0], alpha + 0.5])
    return RunLengthPosterior(probs=probs, n_obs=n)


def map_segmentation(posterior: RunLengthPosterior) -> ChangePoints:
    """Change points along the greedy most-probable run length path.

    Starting at the final step, take the most probable run length ``r``;
    the current segment then began ``r`` steps back, which is recorded as
    a change point, and the walk restarts just before it.
    """
    cps = []
    t = posterior.n_obs
    while t > 1:
        r = int(np.argmax(posterior.probs[: t + 1, t]))
        start = t - r
        if start <= 1:
            break
        cps.append(start)
        t = start - 1
    return tuple(sorted(cps))
