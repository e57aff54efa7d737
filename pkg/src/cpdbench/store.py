"""State and persistence for the annotation collection service.

All mutations append one JSON event to a log before being applied, so
replaying the log reconstructs the exact assignment state after a crash.
A snapshot is written periodically to bound replay time; the log remains
the source of truth.

Annotators must pass the introduction (nine synthetic series with known
change points, mean F1 over them at least the pass threshold) before
receiving real series. Real-series payloads are scrubbed: no series
name, no dates, and values standardized so raw magnitudes never leave
the server. Series are assigned with a bias toward those that already
have annotations: among the eligible series the ones with the highest
completed count are preferred, with uniform choice among ties.
"""

from __future__ import annotations

import json
import math
import random
import secrets
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import ChangePoints, TimeSeries, standardize
from .metrics import MetricConfig, f_measure, true_positives
from .synthgen import DEMO_NAMES, DEMO_TRUTHS, generate

RUBRIC = (
    "Please mark the point(s) in the time series where an abrupt change in "
    "the behavior of the series occurs. The goal is to define segments of "
    "the time series that are separated by places where these abrupt "
    "changes occur. Recall that it is also possible for there to be no "
    "change points."
)

INTRO_SERIES = tuple(DEMO_NAMES)
DEFAULT_TARGET_ANNOTATORS = 5
DEFAULT_PASS_THRESHOLD = 0.8
INTRO_MARGIN = 5


class StoreError(Exception):
    """Base class for store-level request failures."""


class AuthError(StoreError):
    pass


class IntroNotPassed(StoreError):
    pass


class UnknownDemo(StoreError):
    pass


class UnknownTask(StoreError):
    pass


class DuplicateSubmission(StoreError):
    pass


class InvalidLocations(StoreError):
    pass


@dataclass
class AnnotatorState:
    annotator_id: str
    token: str
    intro_status: str = "pending"  # pending | passed | must_repeat
    intro_scores: dict[str, float] = field(default_factory=dict)
    history: set[str] = field(default_factory=set)
    open_task: str | None = None


@dataclass
class SeriesState:
    series: TimeSeries
    annotations: dict[str, ChangePoints] = field(default_factory=dict)
    open_tasks: int = 0

    @property
    def completed(self) -> int:
        return len(self.annotations)


@dataclass
class TaskState:
    task_id: str
    annotator_id: str
    series_name: str
    cps: ChangePoints | None = None  # set once completed

    @property
    def done(self) -> bool:
        return self.cps is not None


def _scrubbed_values(series: TimeSeries) -> list[list[float | None]]:
    std = standardize(series)
    return [
        [None if math.isnan(v) else round(float(v), 6) for v in std.dim(j)]
        for j in range(std.n_dim)
    ]


class AnnotationStore:
    def __init__(
        self,
        root: str | Path | None = None,
        target_annotators: int = DEFAULT_TARGET_ANNOTATORS,
        pass_threshold: float = DEFAULT_PASS_THRESHOLD,
        seed: int | None = None,
        snapshot_every: int = 200,
    ):
        self.target_annotators = target_annotators
        self.pass_threshold = pass_threshold
        self.snapshot_every = snapshot_every
        self._rng = random.Random(seed)
        self._seq = 0
        self._annotators: dict[str, AnnotatorState] = {}  # by token
        self._by_id: dict[str, AnnotatorState] = {}
        self._series: dict[str, SeriesState] = {}
        self._tasks: dict[str, TaskState] = {}
        self._intro_cache: dict[str, TimeSeries] = {}

        self.root = Path(root) if root is not None else None
        self._log_path = self.root / "events.jsonl" if self.root else None
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)
            if self._log_path.exists():
                with self._log_path.open(encoding="utf-8") as handle:
                    for line in handle:
                        if line.strip():
                            self._apply(json.loads(line))

    # -- event plumbing ---------------------------------------------------

    def _emit(self, event: dict) -> None:
        self._seq += 1
        event["seq"] = self._seq
        if self._log_path is not None:
            with self._log_path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(event) + "\n")
                handle.flush()
        self._apply(event, fresh=True)
        if self.root is not None and self._seq % self.snapshot_every == 0:
            self.write_snapshot()

    def _apply(self, event: dict, fresh: bool = False) -> None:
        if not fresh:
            self._seq = max(self._seq, int(event.get("seq", 0)))
        handler = getattr(self, f"_on_{event['type']}")
        handler(event)

    # -- series -----------------------------------------------------------

    def register_series(self, series: TimeSeries) -> None:
        if series.name in self._series:
            raise StoreError(f"series {series.name!r} already registered")
        values = [
            [None if math.isnan(v) else float(v) for v in series.dim(j)]
            for j in range(series.n_dim)
        ]
        self._emit({"type": "series", "name": series.name, "values": values})

    def _on_series(self, event: dict) -> None:
        columns = [
            [math.nan if v is None else v for v in col] for col in event["values"]
        ]
        series = TimeSeries(name=event["name"], values=np.array(columns, dtype=float).T)
        self._series[series.name] = SeriesState(series=series)

    # -- annotators ---------------------------------------------------------

    def register_annotator(self) -> dict:
        annotator_id = f"a{len(self._by_id) + 1}"
        token = secrets.token_hex(16)
        self._emit({"type": "annotator", "annotator_id": annotator_id, "token": token})
        return {"annotator_id": annotator_id, "token": token}

    def _on_annotator(self, event: dict) -> None:
        state = AnnotatorState(annotator_id=event["annotator_id"], token=event["token"])
        self._annotators[state.token] = state
        self._by_id[state.annotator_id] = state

    def annotator(self, token: str | None) -> AnnotatorState:
        if token is None or token not in self._annotators:
            raise AuthError("unknown or missing bearer token")
        return self._annotators[token]

    # -- introduction -------------------------------------------------------

    def _demo_series(self, demo_id: str) -> TimeSeries:
        if demo_id not in self._intro_cache:
            self._intro_cache[demo_id] = generate(demo_id)[0]
        return self._intro_cache[demo_id]

    def intro_next(self, token: str) -> dict:
        annotator = self.annotator(token)
        if annotator.intro_status == "passed":
            return {"done": True, "intro_status": "passed"}
        for position, demo_id in enumerate(INTRO_SERIES):
            if demo_id not in annotator.intro_scores:
                series = self._demo_series(demo_id)
                return {
                    "demo_id": demo_id,
                    "position": position + 1,
                    "total": len(INTRO_SERIES),
                    "n_obs": series.n_obs,
                    "n_dim": series.n_dim,
                    "values": _scrubbed_values(series),
                    "rubric": RUBRIC,
                    "intro_status": annotator.intro_status,
                }
        return {"done": True, "intro_status": annotator.intro_status}

    def intro_submit(self, token: str, demo_id: str, cps: list[int]) -> dict:
        annotator = self.annotator(token)
        if demo_id not in DEMO_TRUTHS:
            raise UnknownDemo(f"unknown introduction series {demo_id!r}")
        series = self._demo_series(demo_id)
        cleaned = sorted(set(int(v) for v in cps))
        if any(not 1 <= v <= series.n_obs for v in cleaned):
            raise InvalidLocations(f"locations outside [1, {series.n_obs}]")
        truth = DEMO_TRUTHS[demo_id]
        cfg = MetricConfig(margin=INTRO_MARGIN)
        score = f_measure([truth], cleaned, cfg).f_beta
        # A failed round resets on the next submission, so its scores do
        # not carry over into this round's running mean.
        prior = dict(annotator.intro_scores) if annotator.intro_status != "must_repeat" else {}
        round_scores = {**prior, demo_id: score}
        completes_round = len(round_scores) == len(INTRO_SERIES)
        self._emit(
            {
                "type": "intro",
                "annotator_id": annotator.annotator_id,
                "demo_id": demo_id,
                "cps": cleaned,
                "f1": score,
            }
        )
        matched = true_positives(truth, cleaned, INTRO_MARGIN)
        false_alarms = [
            x for x in cleaned if all(abs(x - t) > INTRO_MARGIN for t in truth)
        ]
        feedback = {
            "demo_id": demo_id,
            "f1": score,
            "matched": list(matched),
            "missed": [t for t in truth if t not in matched],
            "false_alarms": false_alarms,
            "intro_status": annotator.intro_status,
            "completed": completes_round,
        }
        if completes_round:
            feedback["mean_f1"] = sum(round_scores.values()) / len(round_scores)
        return feedback

    def _on_intro(self, event: dict) -> None:
        annotator = self._by_id[event["annotator_id"]]
        if annotator.intro_status == "passed":
            return
        if annotator.intro_status == "must_repeat":
            annotator.intro_scores = {}
            annotator.intro_status = "pending"
        annotator.intro_scores[event["demo_id"]] = event["f1"]
        if len(annotator.intro_scores) == len(INTRO_SERIES):
            mean_f1 = sum(annotator.intro_scores.values()) / len(INTRO_SERIES)
            if mean_f1 >= self.pass_threshold:
                annotator.intro_status = "passed"
            else:
                annotator.intro_status = "must_repeat"
                annotator.intro_scores = {}

    # -- assignment -----------------------------------------------------------

    def next_task(self, token: str) -> dict | None:
        annotator = self.annotator(token)
        if annotator.intro_status != "passed":
            raise IntroNotPassed("complete the introduction first")
        if annotator.open_task is not None:
            task = self._tasks[annotator.open_task]
            return self._task_payload(task)
        eligible = [
            name
            for name, state in sorted(self._series.items())
            if state.completed + state.open_tasks < self.target_annotators
            and name not in annotator.history
        ]
        if not eligible:
            return None
        top = max(self._series[name].completed for name in eligible)
        pool = [name for name in eligible if self._series[name].completed == top]
        choice = self._rng.choice(pool)
        task_id = f"t{self._seq + 1}"
        self._emit(
            {
                "type": "assign",
                "task_id": task_id,
                "annotator_id": annotator.annotator_id,
                "series": choice,
            }
        )
        return self._task_payload(self._tasks[task_id])

    def _on_assign(self, event: dict) -> None:
        task = TaskState(
            task_id=event["task_id"],
            annotator_id=event["annotator_id"],
            series_name=event["series"],
        )
        self._tasks[task.task_id] = task
        annotator = self._by_id[task.annotator_id]
        annotator.open_task = task.task_id
        annotator.history.add(task.series_name)
        self._series[task.series_name].open_tasks += 1

    def _task_payload(self, task: TaskState) -> dict:
        series = self._series[task.series_name].series
        return {
            "task_id": task.task_id,
            "n_obs": series.n_obs,
            "n_dim": series.n_dim,
            "values": _scrubbed_values(series),
            "rubric": RUBRIC,
        }

    # -- submission -----------------------------------------------------------

    def submit_annotation(
        self, token: str, task_id: str, cps: list[int] | None = None, no_change: bool = False
    ) -> dict:
        annotator = self.annotator(token)
        task = self._tasks.get(task_id)
        if task is None or task.annotator_id != annotator.annotator_id:
            raise UnknownTask(f"no task {task_id!r} for this annotator")
        cleaned: ChangePoints = ()
        if not no_change:
            cleaned = tuple(sorted(set(int(v) for v in cps or [])))
        n_obs = self._series[task.series_name].series.n_obs
        if any(not 1 <= v <= n_obs for v in cleaned):
            raise InvalidLocations(f"locations outside [1, {n_obs}]")
        if task.done:
            if task.cps == cleaned:
                return {"task_id": task_id, "accepted": True, "replay": True}
            raise DuplicateSubmission(f"task {task_id!r} already submitted differently")
        self._emit(
            {
                "type": "annotate",
                "task_id": task_id,
                "cps": list(cleaned),
            }
        )
        return {"task_id": task_id, "accepted": True, "replay": False}

    def _on_annotate(self, event: dict) -> None:
        task = self._tasks[event["task_id"]]
        if task.done:
            return
        task.cps = tuple(int(v) for v in event["cps"])
        series_state = self._series[task.series_name]
        series_state.open_tasks -= 1
        series_state.annotations[task.annotator_id] = task.cps
        annotator = self._by_id[task.annotator_id]
        if annotator.open_task == task.task_id:
            annotator.open_task = None

    # -- export and snapshots ---------------------------------------------------

    def export(self) -> dict[str, dict[str, list[int]]]:
        return {
            name: {
                annotator: list(cps)
                for annotator, cps in sorted(state.annotations.items())
            }
            for name, state in sorted(self._series.items())
            if state.annotations
        }

    def assignment_counts(self) -> dict[str, int]:
        return {name: state.completed for name, state in sorted(self._series.items())}

    def write_snapshot(self) -> None:
        if self.root is None:
            return
        snapshot = {
            "seq": self._seq,
            "series": sorted(self._series),
            "counts": self.assignment_counts(),
            "annotators": {
                a.annotator_id: {"intro_status": a.intro_status, "history": sorted(a.history)}
                for a in self._by_id.values()
            },
        }
        (self.root / "snapshot.json").write_text(
            json.dumps(snapshot, indent=1), encoding="utf-8"
        )
