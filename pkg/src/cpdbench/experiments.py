"""Default/Oracle benchmark harness: grids, execution, and scoring.

The Default experiment runs every detector once with its package default
configuration; the Oracle experiment sweeps a hyperparameter grid and
keeps the best score per series. Detector errors and timeouts are data
(they score zero), never exceptions. Series a detector cannot handle
(missing values, or multivariate input to a univariate method) yield
``skip`` records, which stay absent from score matrices.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import bocpd as bocpd_mod
from . import offline
from .costs import Penalty, manual_grid, penalty_value
from .data import AnnotationDB, ChangePoints, TimeSeries, standardize, to_partition
from .metrics import MetricConfig, covering_multi, f_measure
from .offline import DetectionTimeout

BUILTIN_DETECTORS = ("amoc", "binseg", "bocpd", "pelt", "segneigh", "zero")
MULTIVARIATE_CAPABLE = ("bocpd", "zero")
MODES = ("default", "oracle")
METRIC_NAMES = ("cover", "f1")

DEFAULT_ORACLE_TIMEOUT = 1800.0

# Named penalties of the oracle sweep; sic and bic are synonymous but both
# appear so grid identifiers mirror the published table.
GRID_PENALTIES = ("none", "sic", "bic", "mbic", "aic", "hq")
GRID_COSTS = ("mean", "var", "meanvar")
GRID_MAX_CP = (5, "half")  # "half" resolves to T // 2 + 1 per series
BOCPD_INTENSITIES = (10.0, 50.0, 100.0, 200.0)
BOCPD_PRIOR_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


def _penalty_grid() -> list[tuple[str, float | None]]:
    grid: list[tuple[str, float | None]] = [(name, None) for name in GRID_PENALTIES]
    grid.extend(("manual", float(v)) for v in manual_grid())
    return grid


def default_configs(detector: str) -> list[dict]:
    if detector in ("amoc", "pelt"):
        return [{"cost": "mean", "penalty": "mbic", "penalty_value": None, "min_seg_len": 1}]
    if detector in ("binseg", "segneigh"):
        return [
            {
                "cost": "mean",
                "penalty": "mbic",
                "penalty_value": None,
                "max_cp": 5,
                "min_seg_len": 1,
            }
        ]
    if detector == "bocpd":
        return [{"intensity": 100.0, "alpha0": 1.0, "beta0": 1.0, "kappa0": 1.0}]
    if detector == "zero":
        return [{}]
    raise ValueError(f"unknown detector {detector!r}")


def oracle_grid(detector: str) -> list[dict]:
    if detector in ("amoc", "pelt"):
        return [
            {"cost": cost, "penalty": name, "penalty_value": value, "min_seg_len": 1}
            for cost in GRID_COSTS
            for name, value in _penalty_grid()
        ]
    if detector in ("binseg", "segneigh"):
        return [
            {
                "cost": cost,
                "penalty": name,
                "penalty_value": value,
                "max_cp": max_cp,
                "min_seg_len": 1,
            }
            for max_cp in GRID_MAX_CP
            for cost in GRID_COSTS
            for name, value in _penalty_grid()
        ]
    if detector == "bocpd":
        return [
            {"intensity": i, "alpha0": a, "beta0": b, "kappa0": k}
            for i in BOCPD_INTENSITIES
            for a in BOCPD_PRIOR_GRID
            for b in BOCPD_PRIOR_GRID
            for k in BOCPD_PRIOR_GRID
        ]
    if detector == "zero":
        return [{}]
    raise ValueError(f"unknown detector {detector!r}")


@dataclass(frozen=True)
class ExperimentPlan:
    """Which detectors to run, with which configurations, and how long."""

    mode: str
    detectors: tuple[str, ...]
    configs: dict[str, list[tuple[str, dict]]]
    timeout: float | None
    seed: int = 0
    metric_cfg: MetricConfig = field(default_factory=MetricConfig)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        for detector in self.detectors:
            if detector not in self.configs:
                raise ValueError(f"no configurations for detector {detector!r}")
            if self.mode == "default" and len(self.configs[detector]) != 1:
                raise ValueError("default mode requires exactly one configuration")

    @property
    def cardinality_per_series(self) -> int:
        return sum(len(self.configs[d]) for d in self.detectors)


def build_plan(
    mode: str,
    detectors: Sequence[str] | None = None,
    timeout: float | None = None,
    seed: int = 0,
    metric_cfg: MetricConfig = MetricConfig(),
) -> ExperimentPlan:
    detectors = tuple(detectors) if detectors else BUILTIN_DETECTORS
    for detector in detectors:
        if detector not in BUILTIN_DETECTORS:
            raise ValueError(f"unknown detector {detector!r}")
    configs: dict[str, list[tuple[str, dict]]] = {}
    for detector in detectors:
        if mode == "default":
            configs[detector] = [(f"{detector}-default", params) for params in default_configs(detector)]
        else:
            configs[detector] = [
                (f"{detector}-{i:03d}", params) for i, params in enumerate(oracle_grid(detector))
            ]
    if timeout is None and mode == "oracle":
        timeout = DEFAULT_ORACLE_TIMEOUT
    return ExperimentPlan(mode=mode, detectors=detectors, configs=configs, timeout=timeout, seed=seed, metric_cfg=metric_cfg)


@dataclass(frozen=True)
class DetectionRecord:
    """Outcome of one (series, detector, configuration) execution."""

    series: str
    detector: str
    config_id: str
    params: dict
    status: str  # success | failure | timeout | skip
    locations: ChangePoints | None
    runtime: float
    mode: str

    def __post_init__(self) -> None:
        if (self.status == "success") != (self.locations is not None):
            raise ValueError("locations must be present exactly for successful runs")

    def to_json(self) -> dict:
        return {
            "series": self.series,
            "detector": self.detector,
            "config_id": self.config_id,
            "params": self.params,
            "status": self.status,
            "locations": None if self.locations is None else list(self.locations),
            "runtime": self.runtime,
            "mode": self.mode,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "DetectionRecord":
        locations = doc["locations"]
        return cls(
            series=doc["series"],
            detector=doc["detector"],
            config_id=doc["config_id"],
            params=dict(doc["params"]),
            status=doc["status"],
            locations=None if locations is None else tuple(int(v) for v in locations),
            runtime=float(doc["runtime"]),
            mode=doc["mode"],
        )

    def canonical(self) -> dict:
        """Representation used for determinism checks; runtime is wall clock."""
        doc = self.to_json()
        del doc["runtime"]
        return doc


def write_records(records: Iterable[DetectionRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json()) + "\n")


def read_records(path: str | Path) -> list[DetectionRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(DetectionRecord.from_json(json.loads(line)))
    return records


def _resolve_max_cp(value, n_obs: int) -> int:
    return n_obs // 2 + 1 if value == "half" else int(value)


def _offline_penalty(params: dict) -> Penalty:
    return Penalty.for_cost(params["penalty"], params["cost"], params.get("penalty_value"))


def _run_offline_config(series_std: TimeSeries, detector: str, params: dict, deadline):
    penalty = _offline_penalty(params)
    msl = params.get("min_seg_len", 1)
    if detector == "amoc":
        return offline.detect_amoc(series_std, params["cost"], penalty, msl, deadline)
    if detector == "pelt":
        return offline.detect_pelt(series_std, params["cost"], penalty, msl, deadline)
    max_cp = _resolve_max_cp(params["max_cp"], series_std.n_obs)
    if detector == "binseg":
        return offline.detect_binseg(series_std, params["cost"], penalty, max_cp, msl, deadline)
    return offline.detect_segneigh(series_std, params["cost"], penalty, max_cp, msl, deadline)


def _run_bocpd_config(series_std: TimeSeries, params: dict, deadline):
    bparams = bocpd_mod.BocpdParams(
        intensity=params["intensity"],
        alpha0=params["alpha0"],
        beta0=params["beta0"],
        kappa0=params["kappa0"],
        truncate=params.get("truncate"),
    )
    posterior = bocpd_mod.run_length_filter(series_std, bparams, deadline)
    return bocpd_mod.map_segmentation(posterior)


def _grouped_offline_records(task) -> list[DetectionRecord]:
    """Shared-computation path for binseg/segneigh penalty grids.

    The greedy split sequence (binseg) and the per-count dynamic program
    (segneigh) do not depend on the penalty, so one computation serves a
    whole penalty grid. The shared work runs under a single configuration
    allowance; if it times out, every configuration of the group does.
    """
    series_std, detector, configs, timeout, mode = task
    y = np.asarray(series_std.dim(0))
    n = series_std.n_obs
    groups: dict[tuple, list[tuple[str, dict]]] = {}
    for config_id, params in configs:
        key = (
            params["cost"],
            params["penalty"] == "mbic",
            _resolve_max_cp(params["max_cp"], n),
            params.get("min_seg_len", 1),
        )
        groups.setdefault(key, []).append((config_id, params))

    by_id: dict[str, DetectionRecord] = {}
    for (cost_kind, fold, max_cp, msl), members in groups.items():
        start = time.monotonic()
        deadline = None if timeout is None else start + timeout
        try:
            if detector == "binseg":
                shared = offline.binseg_sequence(y, cost_kind, fold, max_cp, msl, deadline)
            else:
                shared = offline.segneigh_tables(y, cost_kind, fold, max_cp, msl, deadline)
        except DetectionTimeout:
            elapsed = time.monotonic() - start
            for config_id, params in members:
                by_id[config_id] = DetectionRecord(
                    series_std.name, detector, config_id, params, "timeout",
                    None, elapsed / len(members), mode,
                )
            continue
        except Exception:
            elapsed = time.monotonic() - start
            for config_id, params in members:
                by_id[config_id] = DetectionRecord(
                    series_std.name, detector, config_id, params, "failure",
                    None, elapsed / len(members), mode,
                )
            continue
        shared_time = (time.monotonic() - start) / len(members)
        for config_id, params in members:
            t0 = time.monotonic()
            try:
                beta = penalty_value(_offline_penalty(params), n)
                if detector == "binseg":
                    locations = offline.change_points_from_sequence(shared, beta)
                else:
                    c_table, b_table = shared
                    totals = c_table[:, n] + beta * np.arange(c_table.shape[0])
                    locations = offline.backtrack_segneigh(b_table, int(np.argmin(totals)), n)
                status = "success"
            except Exception:
                locations, status = None, "failure"
            by_id[config_id] = DetectionRecord(
                series_std.name, detector, config_id, params, status,
                locations, shared_time + (time.monotonic() - t0), mode,
            )
    return [by_id[config_id] for config_id, _ in configs]


def _run_task(task) -> list[DetectionRecord]:
    series, detector, configs, timeout, mode = task
    cannot_run = series.has_missing or (
        series.n_dim > 1 and detector not in MULTIVARIATE_CAPABLE
    )
    if cannot_run:
        return [
            DetectionRecord(series.name, detector, config_id, params, "skip", None, 0.0, mode)
            for config_id, params in configs
        ]
    series_std = standardize(series)
    if detector in ("binseg", "segneigh") and len(configs) > 1:
        return _grouped_offline_records((series_std, detector, configs, timeout, mode))
    records = []
    for config_id, params in configs:
        start = time.monotonic()
        deadline = None if timeout is None else start + timeout
        try:
            if detector == "zero":
                locations: ChangePoints | None = offline.detect_zero(series_std)
            elif detector == "bocpd":
                locations = _run_bocpd_config(series_std, params, deadline)
            else:
                locations = _run_offline_config(series_std, detector, params, deadline)
            status = "success"
        except DetectionTimeout:
            locations, status = None, "timeout"
        except Exception:
            locations, status = None, "failure"
        records.append(
            DetectionRecord(
                series.name, detector, config_id, params, status,
                locations, time.monotonic() - start, mode,
            )
        )
    return records


def run_experiment(
    plan: ExperimentPlan,
    dataset: Sequence[TimeSeries],
    annotations: AnnotationDB | None = None,
    jobs: int = 1,
) -> list[DetectionRecord]:
    """Execute every (series, detector, configuration) cell of the plan.

    Records come back in a fixed order (dataset order, then plan detector
    order, then configuration order), so equal-seed runs are comparable
    line by line.
    """
    if annotations is not None:
        uncovered = [s.name for s in dataset if s.name not in annotations]
        if uncovered:
            raise ValueError(f"annotations missing for series: {', '.join(uncovered)}")
    tasks = [
        (series, detector, plan.configs[detector], plan.timeout, plan.mode)
        for series in dataset
        for detector in plan.detectors
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            nested = list(pool.map(_run_task, tasks))
    else:
        nested = [_run_task(task) for task in tasks]
    return [record for batch in nested for record in batch]


ABSENT = None


@dataclass(frozen=True)
class ScoreMatrix:
    """Series-by-method score table for one metric; None cells are absent."""

    metric: str
    methods: tuple[str, ...]
    series: tuple[str, ...]
    cells: dict[tuple[str, str], float | None]

    def cell(self, series: str, method: str) -> float | None:
        return self.cells[(series, method)]

    def row(self, series: str) -> dict[str, float | None]:
        return {m: self.cells[(series, m)] for m in self.methods}

    def subset(self, series_names: Iterable[str]) -> "ScoreMatrix":
        keep = tuple(s for s in self.series if s in set(series_names))
        return ScoreMatrix(
            self.metric,
            self.methods,
            keep,
            {(s, m): self.cells[(s, m)] for s in keep for m in self.methods},
        )

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "methods": list(self.methods),
            "series": list(self.series),
            "cells": {
                s: {m: self.cells[(s, m)] for m in self.methods} for s in self.series
            },
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ScoreMatrix":
        methods = tuple(doc["methods"])
        series = tuple(doc["series"])
        cells = {
            (s, m): doc["cells"][s][m] for s in series for m in methods
        }
        return cls(doc["metric"], methods, series, cells)

    def write_csv(self, path: str | Path) -> None:
        lines = ["series," + ",".join(self.methods)]
        for s in self.series:
            row = [
                "" if self.cells[(s, m)] is None else repr(float(self.cells[(s, m)]))
                for m in self.methods
            ]
            lines.append(s + "," + ",".join(row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def read_csv(cls, path: str | Path, metric: str = "") -> "ScoreMatrix":
        lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
        methods = tuple(lines[0].split(",")[1:])
        series = []
        cells: dict[tuple[str, str], float | None] = {}
        for line in lines[1:]:
            parts = line.split(",")
            name = parts[0]
            series.append(name)
            for method, value in zip(methods, parts[1:]):
                cells[(name, method)] = None if value == "" else float(value)
        return cls(metric or Path(path).stem, methods, tuple(series), cells)


def record_score(
    record: DetectionRecord,
    annotations: Mapping[str, ChangePoints],
    n_obs: int,
    metric: str,
    cfg: MetricConfig,
) -> float | None:
    """Score one record: failures and timeouts are 0, skips are absent."""
    if record.status == "skip":
        return ABSENT
    if record.status != "success":
        return 0.0
    annotator_sets = [annotations[k] for k in sorted(annotations)]
    if metric == "cover":
        pred = to_partition(record.locations, n_obs)
        return covering_multi([to_partition(a, n_obs) for a in annotator_sets], pred)
    if metric == "f1":
        return f_measure(annotator_sets, record.locations, cfg).f_beta
    raise ValueError(f"unknown metric {metric!r}")


def score_records(
    records: Sequence[DetectionRecord],
    annotations: AnnotationDB,
    lengths: Mapping[str, int],
    cfg: MetricConfig = MetricConfig(),
    metrics: Sequence[str] = METRIC_NAMES,
) -> dict[str, ScoreMatrix]:
    """Turn detection records into one score matrix per metric.

    Default cells hold the single run's score; oracle cells hold the
    maximum score over the detector's grid, with failed configurations
    contributing zero.
    """
    series_names = tuple(sorted({r.series for r in records}))
    methods = tuple(sorted({r.detector for r in records}))
    missing = [s for s in series_names if s not in annotations]
    if missing:
        raise ValueError(f"annotations missing for series: {', '.join(missing)}")
    grouped: dict[tuple[str, str], list[DetectionRecord]] = {}
    for record in records:
        grouped.setdefault((record.series, record.detector), []).append(record)

    out: dict[str, ScoreMatrix] = {}
    for metric in metrics:
        cells: dict[tuple[str, str], float | None] = {}
        for series in series_names:
            for method in methods:
                cell_records = grouped.get((series, method), [])
                scores = [
                    record_score(r, annotations[series], lengths[series], metric, cfg)
                    for r in cell_records
                ]
                present = [s for s in scores if s is not None]
                if not present:
                    cells[(series, method)] = ABSENT
                elif any(r.mode == "oracle" for r in cell_records):
                    cells[(series, method)] = max(present)
                else:
                    cells[(series, method)] = present[0]
        out[metric] = ScoreMatrix(metric, methods, series_names, cells)
    return out


def aggregate(matrix: ScoreMatrix) -> dict[str, float]:
    """Mean score per method over series where every method has a score."""
    rows = [
        s
        for s in matrix.series
        if all(matrix.cells[(s, m)] is not None for m in matrix.methods)
    ]
    if not rows:
        return {m: math.nan for m in matrix.methods}
    return {
        m: sum(matrix.cells[(s, m)] for s in rows) / len(rows) for m in matrix.methods
    }


def series_class(series: TimeSeries) -> str:
    if series.name.startswith("quality_control"):
        return "quality_control"
    return "multivariate" if series.n_dim > 1 else "univariate"


def summary_markdown(matrices: Mapping[str, ScoreMatrix], title: str = "Aggregate scores") -> str:
    """Markdown table of per-method mean scores, one column per metric."""
    metrics = sorted(matrices)
    methods = sorted({m for sm in matrices.values() for m in sm.methods})
    means = {metric: aggregate(matrices[metric]) for metric in metrics}
    lines = [f"## {title}", "", "| method | " + " | ".join(metrics) + " |",
             "|---" * (len(metrics) + 1) + "|"]
    for method in methods:
        row = [
            f"{means[metric][method]:.3f}" if method in matrices[metric].methods else ""
            for metric in metrics
        ]
        lines.append(f"| {method} | " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


# Hyperparameter grids of the cited third-party detectors, recorded as
# data for future plug-ins. None of these run here; the asymptotic
# penalty is likewise recorded but unsupported by the built-in detectors.
THIRD_PARTY_GRIDS: dict[str, dict] = {
    "cpnp": {
        "supported": False,
        "penalty": [*GRID_PENALTIES, "asymptotic", "manual:101-log-1e-3..1e3"],
        "n_quantiles": [10, 20, 30, 40],
    },
    "rfpop": {
        "supported": False,
        "loss": ["L1", "L2", "Outlier", "Huber"],
        "lambda": "101-log-1e-3..1e3",
        "lthreshold": "11-log-1e-1..1e1",
    },
    "ecp": {
        "supported": False,
        "algorithm": ["e.divisive", "e.agglo"],
        "significance": [0.05, 0.01],
        "min_size": [2, 30],
        "alpha": [0.5, 1.0, 1.5],
    },
    "kcpa": {
        "supported": False,
        "cost": "101-log-1e-3..1e3",
        "max_cp": ["max", 5],
    },
    "wbs": {
        "supported": False,
        "penalty": ["SSIC", "BIC", "MBIC"],
        "integrated": [True, False],
        "max_cp": [50, "T"],
    },
    "prophet": {"supported": False, "max_cp": [25, "T"]},
    "bocpdms": {
        "supported": False,
        "intensity": list(BOCPD_INTENSITIES),
        "alpha0": list(BOCPD_PRIOR_GRID),
        "beta0": list(BOCPD_PRIOR_GRID),
        "kappa0": list(BOCPD_PRIOR_GRID),
        "prune": 100,
    },
    "rbocpdms": {
        "supported": False,
        "intensity": list(BOCPD_INTENSITIES),
        "alpha0": 0.5,
        "alpha_rld": 0.5,
        "timeout_s": 1800,
    },
}
