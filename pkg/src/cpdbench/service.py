"""HTTP API of the annotation collection service.

All endpoints speak UTF-8 JSON with 1-based locations. Annotator
endpoints are gated by the bearer token issued at registration; the
export endpoint by the admin token the server was started with.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .store import (
    AnnotationStore,
    AuthError,
    DuplicateSubmission,
    IntroNotPassed,
    InvalidLocations,
    StoreError,
    UnknownDemo,
    UnknownTask,
)


class IntroSubmission(BaseModel):
    demo_id: str
    cps: list[int] = Field(default_factory=list)


class AnnotationSubmission(BaseModel):
    task_id: str
    cps: list[int] | None = None
    no_change: bool = False


def _bearer(authorization: str | None) -> str | None:
    if authorization is None:
        return None
    scheme, _, token = authorization.partition(" ")
    if scheme.lower() != "bearer" or not token:
        return None
    return token


def create_app(
    store: AnnotationStore,
    admin_token: str,
    assets_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="change point annotation service")

    def token(authorization: str | None = Header(default=None)) -> str:
        value = _bearer(authorization)
        if value is None:
            raise HTTPException(status_code=401, detail="missing bearer token")
        return value

    def run(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except AuthError as exc:
            raise HTTPException(status_code=401, detail=str(exc)) from exc
        except IntroNotPassed as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from exc
        except (UnknownDemo, UnknownTask) as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except DuplicateSubmission as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except InvalidLocations as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except StoreError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/api/register")
    def register() -> dict:
        return run(store.register_annotator)

    @app.get("/api/intro/next")
    def intro_next(tok: str = Depends(token)) -> dict:
        return run(store.intro_next, tok)

    @app.post("/api/intro/submit")
    def intro_submit(body: IntroSubmission, tok: str = Depends(token)) -> dict:
        return run(store.intro_submit, tok, body.demo_id, body.cps)

    @app.get("/api/task")
    def next_task(tok: str = Depends(token)) -> dict:
        payload = run(store.next_task, tok)
        if payload is None:
            return {"task": None}
        return payload

    @app.post("/api/annotate")
    def annotate(body: AnnotationSubmission, tok: str = Depends(token)) -> dict:
        return run(
            store.submit_annotation, tok, body.task_id, body.cps, body.no_change
        )

    @app.get("/api/admin/export")
    def export(tok: str = Depends(token)) -> dict:
        if tok != admin_token:
            raise HTTPException(status_code=403, detail="admin token required")
        return store.export()

    if assets_dir is not None:
        app.mount("/", StaticFiles(directory=str(assets_dir), html=True), name="assets")
    return app
