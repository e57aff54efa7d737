"""Null-model simulation of annotator agreement.

Simulated annotators draw a Poisson number of change points placed
uniformly (without replacement) strictly inside the series, never on the
first or last index. The p-value of the observed human agreement is the
fraction of simulated annotator sets whose mean one-vs-rest agreement
reaches it.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .data import AnnotationDB, ChangePoints
from .metrics import MetricConfig, ovr_agreement

DEFAULT_ITERATIONS = 100_000
RNG_BLOCK = 1024  # iterations per RNG stream; fixed so job count cannot change results


@dataclass(frozen=True)
class SimConfig:
    eta: float
    iterations: int = DEFAULT_ITERATIONS
    metric: str = "f1"
    seed: int = 0
    annotators: int | None = None  # default: as many as the observed entry
    metric_cfg: MetricConfig = field(default_factory=MetricConfig)

    def __post_init__(self) -> None:
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.annotators is not None and self.annotators < 2:
            raise ValueError("need at least 2 annotators")


@dataclass(frozen=True)
class AgreementResult:
    observed: float
    p_hat: float
    iterations: int
    eta: float
    metric: str
    simulated_mean: float
    simulated_q05: float
    simulated_q50: float
    simulated_q95: float

    def to_json(self) -> dict:
        return {
            "observed": self.observed,
            "p_hat": self.p_hat,
            "iterations": self.iterations,
            "eta": self.eta,
            "metric": self.metric,
            "simulated": {
                "mean": self.simulated_mean,
                "q05": self.simulated_q05,
                "q50": self.simulated_q50,
                "q95": self.simulated_q95,
            },
        }


def simulate_annotator(n_obs: int, eta: float, rng: np.random.Generator) -> ChangePoints:
    """Draw one simulated annotation set for a series of length ``n_obs``.

    The count is Poisson(eta) capped at ``n_obs - 2``, the largest number
    of distinct locations available in ``[2, n_obs - 1]``.
    """
    if n_obs < 3:
        raise ValueError("simulation needs n_obs >= 3")
    count = min(int(rng.poisson(eta)), n_obs - 2)
    if count == 0:
        return ()
    locations = rng.choice(np.arange(2, n_obs), size=count, replace=False)
    return tuple(sorted(int(v) for v in locations))


def _simulate_block(args) -> np.ndarray:
    n_obs, eta, k, metric, cfg, seed, block = args
    rng = np.random.default_rng(seed)
    values = np.empty(block)
    for i in range(block):
        draws = {f"s{j}": simulate_annotator(n_obs, eta, rng) for j in range(k)}
        values[i] = ovr_agreement(draws, n_obs, metric, cfg)[1]
    return values


def simulated_agreement(
    n_obs: int, k: int, cfg: SimConfig, jobs: int = 1
) -> np.ndarray:
    """Simulated mean one-vs-rest agreement values, deterministic per seed.

    Iterations run in fixed blocks with RNG streams spawned from the
    seed, so the result does not depend on the worker count.
    """
    blocks = []
    remaining = cfg.iterations
    children = np.random.SeedSequence(cfg.seed).spawn(
        (cfg.iterations + RNG_BLOCK - 1) // RNG_BLOCK
    )
    for child in children:
        block = min(RNG_BLOCK, remaining)
        blocks.append((n_obs, cfg.eta, k, cfg.metric, cfg.metric_cfg, child, block))
        remaining -= block
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_simulate_block, blocks))
    else:
        parts = [_simulate_block(b) for b in blocks]
    return np.concatenate(parts)


def agreement_pvalue(
    annotations: Mapping[str, ChangePoints],
    n_obs: int,
    cfg: SimConfig,
    jobs: int = 1,
) -> AgreementResult:
    """Estimate how likely the observed agreement is under the null model."""
    if len(annotations) < 2:
        raise ValueError("need at least 2 annotators")
    k = cfg.annotators or len(annotations)
    observed = ovr_agreement(dict(annotations), n_obs, cfg.metric, cfg.metric_cfg)[1]
    simulated = simulated_agreement(n_obs, k, cfg, jobs)
    p_hat = float(np.count_nonzero(simulated >= observed)) / cfg.iterations
    q05, q50, q95 = np.quantile(simulated, [0.05, 0.5, 0.95])
    return AgreementResult(
        observed=float(observed),
        p_hat=p_hat,
        iterations=cfg.iterations,
        eta=cfg.eta,
        metric=cfg.metric,
        simulated_mean=float(simulated.mean()),
        simulated_q05=float(q05),
        simulated_q50=float(q50),
        simulated_q95=float(q95),
    )


def estimate_eta(db: AnnotationDB) -> float:
    """Mean number of change points per (series, annotator) pair."""
    counts = [len(cps) for annotators in db.values() for cps in annotators.values()]
    if not counts:
        raise ValueError("empty annotation database")
    return sum(counts) / len(counts)


def write_agreement_report(
    results: Mapping[str, AgreementResult], json_path: str | Path, md_path: str | Path | None = None
) -> None:
    """Persist per-series results as JSON and, optionally, a Markdown table."""
    doc = {name: results[name].to_json() for name in sorted(results)}
    Path(json_path).write_text(json.dumps(doc, indent=1), encoding="utf-8")
    if md_path is not None:
        lines = [
            "| series | metric | observed | p-value |",
            "|---|---|---|---|",
        ]
        for name in sorted(results):
            r = results[name]
            lines.append(f"| {name} | {r.metric} | {r.observed:.4f} | {r.p_hat:.5f} |")
        Path(md_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
