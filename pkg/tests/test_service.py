import numpy as np
import pytest
from fastapi.testclient import TestClient

from cpdbench.data import TimeSeries
from cpdbench.service import create_app
from cpdbench.store import AnnotationStore
from cpdbench.synthgen import DEMO_TRUTHS

ADMIN = "admin-secret"


@pytest.fixture()
def client():
    store = AnnotationStore(seed=0)
    rng = np.random.default_rng(0)
    values = rng.normal(size=80)
    values[40:] += 3.0
    store.register_series(TimeSeries("hidden_series", values))
    app = create_app(store, ADMIN)
    return TestClient(app)


def register(client):
    response = client.post("/api/register")
    assert response.status_code == 200
    token = response.json()["token"]
    return {"Authorization": f"Bearer {token}"}


def pass_intro(client, headers):
    while True:
        page = client.get("/api/intro/next", headers=headers).json()
        if page.get("done"):
            return page
        response = client.post(
            "/api/intro/submit",
            headers=headers,
            json={"demo_id": page["demo_id"], "cps": list(DEMO_TRUTHS[page["demo_id"]])},
        )
        assert response.status_code == 200


class TestEndpoints:
    def test_health(self, client):
        assert client.get("/api/health").json() == {"status": "ok"}

    def test_auth_required(self, client):
        assert client.get("/api/intro/next").status_code == 401
        assert client.get("/api/task").status_code == 401
        bad = {"Authorization": "Bearer nope"}
        assert client.get("/api/task", headers=bad).status_code == 401

    def test_task_gated_until_intro_passed(self, client):
        headers = register(client)
        assert client.get("/api/task", headers=headers).status_code == 403

    def test_full_annotation_flow(self, client):
        headers = register(client)
        state = pass_intro(client, headers)
        assert state["intro_status"] == "passed"
        payload = client.get("/api/task", headers=headers).json()
        assert payload["rubric"].startswith("Please mark the point(s)")
        assert "hidden_series" not in str(payload)
        response = client.post(
            "/api/annotate",
            headers=headers,
            json={"task_id": payload["task_id"], "cps": [41]},
        )
        assert response.status_code == 200
        export = client.get(
            "/api/admin/export", headers={"Authorization": f"Bearer {ADMIN}"}
        )
        assert export.json() == {"hidden_series": {"a1": [41]}}

    def test_annotate_retry_idempotent(self, client):
        headers = register(client)
        pass_intro(client, headers)
        payload = client.get("/api/task", headers=headers).json()
        body = {"task_id": payload["task_id"], "cps": [10]}
        first = client.post("/api/annotate", headers=headers, json=body)
        second = client.post("/api/annotate", headers=headers, json=body)
        assert first.status_code == second.status_code == 200
        assert second.json()["replay"] is True

    def test_conflicting_duplicate_is_409(self, client):
        headers = register(client)
        pass_intro(client, headers)
        payload = client.get("/api/task", headers=headers).json()
        client.post("/api/annotate", headers=headers, json={"task_id": payload["task_id"], "cps": [10]})
        conflict = client.post(
            "/api/annotate", headers=headers, json={"task_id": payload["task_id"], "cps": [11]}
        )
        assert conflict.status_code == 409

    def test_bounds_rejected(self, client):
        headers = register(client)
        pass_intro(client, headers)
        payload = client.get("/api/task", headers=headers).json()
        response = client.post(
            "/api/annotate", headers=headers, json={"task_id": payload["task_id"], "cps": [0]}
        )
        assert response.status_code == 422

    def test_unknown_task_is_404(self, client):
        headers = register(client)
        pass_intro(client, headers)
        response = client.post(
            "/api/annotate", headers=headers, json={"task_id": "zzz", "cps": [1]}
        )
        assert response.status_code == 404

    def test_unknown_demo_is_404(self, client):
        headers = register(client)
        response = client.post(
            "/api/intro/submit", headers=headers, json={"demo_id": "demo_1234", "cps": []}
        )
        assert response.status_code == 404

    def test_export_needs_admin(self, client):
        headers = register(client)
        assert client.get("/api/admin/export", headers=headers).status_code == 403
        assert client.get("/api/admin/export").status_code == 401

    def test_empty_export(self, client):
        export = client.get("/api/admin/export", headers={"Authorization": f"Bearer {ADMIN}"})
        assert export.json() == {}

    def test_no_change_submission(self, client):
        headers = register(client)
        pass_intro(client, headers)
        payload = client.get("/api/task", headers=headers).json()
        response = client.post(
            "/api/annotate",
            headers=headers,
            json={"task_id": payload["task_id"], "no_change": True},
        )
        assert response.status_code == 200
        export = client.get(
            "/api/admin/export", headers={"Authorization": f"Bearer {ADMIN}"}
        )
        assert export.json() == {"hidden_series": {"a1": []}}

    def test_tasks_exhausted_returns_null(self, client):
        headers = register(client)
        pass_intro(client, headers)
        payload = client.get("/api/task", headers=headers).json()
        client.post(
            "/api/annotate", headers=headers, json={"task_id": payload["task_id"], "cps": [5]}
        )
        assert client.get("/api/task", headers=headers).json() == {"task": None}
