import json

import numpy as np
import pytest

from cpdbench.data import TimeSeries
from cpdbench.store import (
    AnnotationStore,
    DuplicateSubmission,
    IntroNotPassed,
    InvalidLocations,
    RUBRIC,
    UnknownTask,
)
from cpdbench.synthgen import DEMO_TRUTHS


def make_series(name="series_a", n=60, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=n)
    values[n // 2 :] += 3.0
    return TimeSeries(name, values)


def pass_intro(store, token):
    while True:
        page = store.intro_next(token)
        if page.get("done"):
            return page
        store.intro_submit(token, page["demo_id"], list(DEMO_TRUTHS[page["demo_id"]]))


class TestIntroFlow:
    def test_ground_truth_run_passes(self):
        store = AnnotationStore()
        token = store.register_annotator()["token"]
        state = pass_intro(store, token)
        assert state["intro_status"] == "passed"

    def test_exact_submission_scores_one(self):
        store = AnnotationStore()
        token = store.register_annotator()["token"]
        page = store.intro_next(token)
        feedback = store.intro_submit(token, page["demo_id"], list(DEMO_TRUTHS[page["demo_id"]]))
        assert feedback["f1"] == 1.0
        assert feedback["missed"] == []
        assert feedback["false_alarms"] == []

    def test_no_change_demo_scores_one_via_trivial_point(self):
        store = AnnotationStore()
        token = store.register_annotator()["token"]
        feedback = store.intro_submit(token, "demo_400", [])
        assert feedback["f1"] == 1.0

    def test_poor_round_must_repeat_and_resets(self):
        store = AnnotationStore()
        token = store.register_annotator()["token"]
        for demo_id in DEMO_TRUTHS:
            feedback = store.intro_submit(token, demo_id, [])
        assert feedback["completed"] is True
        assert feedback["mean_f1"] < 0.8
        assert feedback["intro_status"] == "must_repeat"
        with pytest.raises(IntroNotPassed):
            store.next_task(token)
        # the next round starts from scratch and can pass
        state = pass_intro(store, token)
        assert state["intro_status"] == "passed"

    def test_unknown_demo_rejected(self):
        store = AnnotationStore()
        token = store.register_annotator()["token"]
        from cpdbench.store import UnknownDemo

        with pytest.raises(UnknownDemo):
            store.intro_submit(token, "demo_999", [])

    def test_out_of_range_rejected(self):
        store = AnnotationStore()
        token = store.register_annotator()["token"]
        with pytest.raises(InvalidLocations):
            store.intro_submit(token, "demo_100", [0])


class TestAssignment:
    def build(self, counts, target=5, seed=0):
        store = AnnotationStore(target_annotators=target, seed=seed)
        for name in counts:
            store.register_series(make_series(name, seed=hash(name) % 100))
        for name, count in counts.items():
            for _ in range(count):
                token = store.register_annotator()["token"]
                store._annotators[token].intro_status = "passed"  # test shortcut
                store._annotators[token].history = {
                    other for other in counts if other != name
                }
                payload = store.next_task(token)
                store.submit_annotation(token, payload["task_id"], [3])
        return store

    def test_higher_count_preferred(self):
        store = self.build({"a_two": 2, "b_zero": 0})
        token = store.register_annotator()["token"]
        store._annotators[token].intro_status = "passed"
        payload = store.next_task(token)
        task = store._tasks[payload["task_id"]]
        assert task.series_name == "a_two"

    def test_full_series_never_assigned(self):
        store = self.build({"full": 5, "empty": 0})
        token = store.register_annotator()["token"]
        store._annotators[token].intro_status = "passed"
        payload = store.next_task(token)
        assert store._tasks[payload["task_id"]].series_name == "empty"

    def test_exhausted_annotator_gets_none(self):
        store = self.build({"only": 0})
        token = store.register_annotator()["token"]
        store._annotators[token].intro_status = "passed"
        payload = store.next_task(token)
        store.submit_annotation(token, payload["task_id"], [2])
        assert store.next_task(token) is None

    def test_open_task_is_sticky(self):
        store = self.build({"a": 0, "b": 0})
        token = store.register_annotator()["token"]
        store._annotators[token].intro_status = "passed"
        first = store.next_task(token)
        second = store.next_task(token)
        assert first["task_id"] == second["task_id"]

    def test_fairness_over_many_sessions(self):
        rng = np.random.default_rng(7)
        store = AnnotationStore(target_annotators=10_000, seed=1)
        names = [f"s{i}" for i in range(8)]
        for name in names:
            store.register_series(make_series(name, seed=3))
        for _ in range(10_000):
            token = store.register_annotator()["token"]
            store._annotators[token].intro_status = "passed"
            eligible = dict(store.assignment_counts())
            top = max(eligible.values())
            payload = store.next_task(token)
            picked = store._tasks[payload["task_id"]].series_name
            assert eligible[picked] == top
            store.submit_annotation(token, payload["task_id"], [int(rng.integers(1, 60))])


class TestSubmission:
    def prepared(self):
        store = AnnotationStore(seed=0)
        store.register_series(make_series("lone", n=40))
        token = store.register_annotator()["token"]
        pass_intro(store, token)
        payload = store.next_task(token)
        return store, token, payload

    def test_submit_increments_count(self):
        store, token, payload = self.prepared()
        store.submit_annotation(token, payload["task_id"], [7, 21])
        assert store.assignment_counts()["lone"] == 1

    def test_replay_is_idempotent(self):
        store, token, payload = self.prepared()
        first = store.submit_annotation(token, payload["task_id"], [7])
        again = store.submit_annotation(token, payload["task_id"], [7])
        assert again["replay"] is True
        assert store.assignment_counts()["lone"] == 1

    def test_conflicting_duplicate_rejected(self):
        store, token, payload = self.prepared()
        store.submit_annotation(token, payload["task_id"], [7])
        with pytest.raises(DuplicateSubmission):
            store.submit_annotation(token, payload["task_id"], [8])

    def test_out_of_bounds_rejected(self):
        store, token, payload = self.prepared()
        with pytest.raises(InvalidLocations):
            store.submit_annotation(token, payload["task_id"], [0])
        with pytest.raises(InvalidLocations):
            store.submit_annotation(token, payload["task_id"], [41])

    def test_unknown_task_rejected(self):
        store, token, _ = self.prepared()
        with pytest.raises(UnknownTask):
            store.submit_annotation(token, "bogus", [1])

    def test_no_change_flag(self):
        store, token, payload = self.prepared()
        store.submit_annotation(token, payload["task_id"], no_change=True)
        assert store.export() == {"lone": {"a1": []}}


class TestPayloadScrubbing:
    def test_task_payload_carries_no_identity(self):
        store = AnnotationStore(seed=0)
        store.register_series(make_series("super_secret_name", n=30))
        token = store.register_annotator()["token"]
        pass_intro(store, token)
        payload = store.next_task(token)
        blob = json.dumps(payload)
        assert "super_secret_name" not in blob
        assert "date" not in blob.lower()
        assert payload["rubric"] == RUBRIC
        assert set(payload) == {"task_id", "n_obs", "n_dim", "values", "rubric"}

    def test_values_are_standardized(self):
        store = AnnotationStore(seed=0)
        store.register_series(TimeSeries("scaled", np.arange(50.0) * 1e6))
        token = store.register_annotator()["token"]
        pass_intro(store, token)
        values = np.array(store.next_task(token)["values"][0], dtype=float)
        assert abs(values.mean()) < 1e-5
        assert abs(values.std() - 1.0) < 1e-3


class TestPersistence:
    def test_replay_reproduces_state(self, tmp_path):
        store = AnnotationStore(root=tmp_path, seed=0)
        store.register_series(make_series("persisted", n=40))
        token = store.register_annotator()["token"]
        pass_intro(store, token)
        payload = store.next_task(token)
        store.submit_annotation(token, payload["task_id"], [11])

        reloaded = AnnotationStore(root=tmp_path, seed=0)
        assert reloaded.export() == store.export()
        assert reloaded.assignment_counts() == store.assignment_counts()
        annotator = reloaded.annotator(token)
        assert annotator.intro_status == "passed"
        assert annotator.history == {"persisted"}

    def test_snapshot_written(self, tmp_path):
        store = AnnotationStore(root=tmp_path, seed=0, snapshot_every=2)
        store.register_series(make_series("one"))
        store.register_annotator()
        assert (tmp_path / "snapshot.json").exists()

    def test_export_round_trip_via_loader(self, tmp_path):
        store = AnnotationStore(seed=0)
        store.register_series(make_series("roundtrip", n=25))
        tokens = [store.register_annotator()["token"] for _ in range(2)]
        for i, token in enumerate(tokens):
            pass_intro(store, token)
            payload = store.next_task(token)
            store.submit_annotation(token, payload["task_id"], [5 + i])
        path = tmp_path / "annotations.json"
        path.write_text(json.dumps(store.export()))
        from cpdbench.data import load_annotations

        assert load_annotations(path) == {"roundtrip": {"a1": (5,), "a2": (6,)}}
