"""Generators for quality-control and introduction series.

Each generated series carries a published ground-truth change point set;
lengths, noise levels, and effect sizes are fixed constants of this
module (version ``SPEC_VERSION``), chosen so the stated change is clearly
detectable. Generation is deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .data import ChangePoints, TimeSeries, save_dataset, to_partition

SPEC_VERSION = 1


@dataclass(frozen=True)
class SynthSpec:
    name: str
    n_obs: int
    change_points: ChangePoints
    kind: str
    seed: int
    params: Mapping[str, object] = field(default_factory=dict)


SPECS: dict[str, SynthSpec] = {
    spec.name: spec
    for spec in [
        SynthSpec(
            "quality_control_1", 300, (146,), "trend_then_offset", 101,
            {"slope": 0.02, "noise_sd": 0.6, "offset": 6.5, "half_width": 1.0},
        ),
        SynthSpec(
            "quality_control_2", 200, (97,), "mean_shift", 102,
            {"levels": (0.0, 3.0), "noise_sd": 1.0},
        ),
        SynthSpec(
            "quality_control_3", 360, (179,), "noise_change_with_outlier", 103,
            {"pre": (0.0, 1.0), "post": (2.0, 2.0), "outlier_at": 42, "outlier": 8.0},
        ),
        SynthSpec(
            "quality_control_4", 680, (341,), "periodic_mean_shift", 104,
            {"components": ((1.6, 53.0), (0.6, 11.0)), "shift": 3.5, "noise_sd": 0.3},
        ),
        SynthSpec("quality_control_5", 300, (), "pure_noise", 105, {"sd": 1.0}),
        SynthSpec(
            "demo_100", 100, (50,), "mean_shift", 201,
            {"levels": (0.0, 2.5), "noise_sd": 0.7},
        ),
        SynthSpec(
            "demo_200", 120, (33, 79), "mean_shift", 202,
            {"levels": (0.0, 3.0, -1.5), "noise_sd": 0.7},
        ),
        SynthSpec(
            "demo_300", 100, (43,), "variance_change", 203, {"sds": (0.5, 2.5)},
        ),
        SynthSpec("demo_400", 100, (), "pure_noise", 204, {"sd": 1.0}),
        SynthSpec(
            "demo_500", 120, (80,), "outliers_mean_shift", 205,
            {"levels": (0.0, 3.0), "noise_sd": 0.8, "outliers": ((20, 6.0), (55, -6.0))},
        ),
        SynthSpec(
            "demo_600", 120, (65,), "trend_change", 206,
            {"slopes": (0.06, -0.1), "noise_sd": 0.5},
        ),
        SynthSpec("demo_650", 120, (), "random_walk", 207, {"step_sd": 1.0}),
        SynthSpec(
            "demo_700", 120, (57,), "periodicity_change", 208,
            {"periods": (24.0, 8.0), "amplitude": 2.0, "noise_sd": 0.3},
        ),
        SynthSpec(
            "demo_800", 120, (65,), "multidim_shift", 209,
            {"shift": 3.0, "noise_sd": 0.8},
        ),
    ]
}

QUALITY_CONTROL_NAMES = tuple(n for n in SPECS if n.startswith("quality_control"))
DEMO_NAMES = tuple(n for n in SPECS if n.startswith("demo"))

DEMO_TRUTHS: dict[str, ChangePoints] = {n: SPECS[n].change_points for n in DEMO_NAMES}


def _segment_slices(spec: SynthSpec):
    for a, b in to_partition(spec.change_points, spec.n_obs):
        yield a - 1, b  # 0-based half-open


def generate(name_or_spec: str | SynthSpec, seed: int | None = None) -> tuple[TimeSeries, ChangePoints]:
    """Generate a registered series and its ground-truth change points."""
    if isinstance(name_or_spec, SynthSpec):
        spec = name_or_spec
    else:
        try:
            spec = SPECS[name_or_spec]
        except KeyError:
            raise ValueError(f"unknown synthetic series {name_or_spec!r}") from None
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    p = spec.params
    n = spec.n_obs
    t_axis = np.arange(1, n + 1, dtype=float)

    if spec.kind == "mean_shift":
        y = rng.normal(0.0, p["noise_sd"], n)
        for level, (lo, hi) in zip(p["levels"], _segment_slices(spec)):
            y[lo:hi] += level
    elif spec.kind == "trend_then_offset":
        cp = spec.change_points[0]
        y = np.empty(n)
        y[: cp - 1] = p["slope"] * t_axis[: cp - 1] + rng.normal(0.0, p["noise_sd"], cp - 1)
        y[cp - 1 :] = p["offset"] + rng.uniform(-p["half_width"], p["half_width"], n - cp + 1)
    elif spec.kind == "noise_change_with_outlier":
        cp = spec.change_points[0]
        y = np.empty(n)
        y[: cp - 1] = rng.normal(*p["pre"], cp - 1)
        y[cp - 1 :] = rng.normal(*p["post"], n - cp + 1)
        y[p["outlier_at"] - 1] += p["outlier"]
    elif spec.kind == "periodic_mean_shift":
        y = rng.normal(0.0, p["noise_sd"], n)
        for amplitude, period in p["components"]:
            y += amplitude * np.sin(2.0 * np.pi * t_axis / period)
        y[spec.change_points[0] - 1 :] += p["shift"]
    elif spec.kind == "pure_noise":
        y = rng.normal(0.0, p["sd"], n)
    elif spec.kind == "variance_change":
        y = np.empty(n)
        for sd, (lo, hi) in zip(p["sds"], _segment_slices(spec)):
            y[lo:hi] = rng.normal(0.0, sd, hi - lo)
    elif spec.kind == "outliers_mean_shift":
        y = rng.normal(0.0, p["noise_sd"], n)
        for level, (lo, hi) in zip(p["levels"], _segment_slices(spec)):
            y[lo:hi] += level
        for at, value in p["outliers"]:
            y[at - 1] += value
    elif spec.kind == "trend_change":
        cp = spec.change_points[0]
        y = rng.normal(0.0, p["noise_sd"], n)
        pre, post = p["slopes"]
        y[: cp - 1] += pre * t_axis[: cp - 1]
        # continue from the level reached at the change point
        y[cp - 1 :] += pre * cp + post * (t_axis[cp - 1 :] - cp)
    elif spec.kind == "random_walk":
        y = np.cumsum(rng.normal(0.0, p["step_sd"], n))
    elif spec.kind == "periodicity_change":
        cp = spec.change_points[0]
        pre, post = p["periods"]
        y = rng.normal(0.0, p["noise_sd"], n)
        y[: cp - 1] += p["amplitude"] * np.sin(2.0 * np.pi * t_axis[: cp - 1] / pre)
        y[cp - 1 :] += p["amplitude"] * np.sin(2.0 * np.pi * t_axis[cp - 1 :] / post)
    elif spec.kind == "multidim_shift":
        cp = spec.change_points[0]
        first = rng.normal(0.0, p["noise_sd"], n)
        first[cp - 1 :] += p["shift"]
        second = rng.normal(0.0, p["noise_sd"], n)
        y = np.column_stack([first, second])
    else:
        raise ValueError(f"unknown generator kind {spec.kind!r}")

    return TimeSeries(name=spec.name, values=y), spec.change_points


def write_series(name: str, out_dir: str | Path, seed: int | None = None) -> tuple[Path, Path]:
    """Generate and write a series plus its ground-truth sidecar file."""
    series, truth = generate(name, seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = out_dir / f"{name}.json"
    truth_path = out_dir / f"{name}.truth.json"
    save_dataset(series, data_path)
    truth_path.write_text(
        json.dumps({"name": name, "change_points": list(truth)}), encoding="utf-8"
    )
    return data_path, truth_path
