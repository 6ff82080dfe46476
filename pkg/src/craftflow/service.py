"""HTTP service for the create/refine/share lifecycle.

Every save appends a revision; consumers holding the plain link get the
latest revision read-write (with the edit token), while the same link
with ``/restore`` appended serves a read-only view that never carries
edit credentials and rejects writes.
"""

from __future__ import annotations

import threading
from typing import Optional

from fastapi import Body, FastAPI, Header, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .errors import (
    BadToken,
    ExhaustedRetries,
    IngestError,
    UnknownWorkflow,
)
from .ingest import IngestConfig, ingest_video
from .model import VideoMeta, Workflow
from .notation import cwn, jsonio
from .storage import WorkflowStore
from .transforms import export_dot
from .validate import ValidationConfig, validate


def create_app(
    store: WorkflowStore,
    *,
    strict_validation: bool = True,
    max_gap_s: float = 1.0,
    provider=None,
    ingest_config: Optional[IngestConfig] = None,
    enable_history: bool = False,
) -> FastAPI:
    app = FastAPI(title="craftflow", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    vcfg = ValidationConfig(max_gap_s=max_gap_s)
    icfg = ingest_config or IngestConfig(validation=vcfg)

    ingest_lock = threading.Lock()
    ingest_status: dict[str, dict] = {}

    app.state.store = store
    app.state.ingest_status = ingest_status

    def _error(status: int, message: str, **extra) -> JSONResponse:
        return JSONResponse({"error": message, **extra}, status_code=status)

    def _parse_body(doc) -> tuple[Optional[Workflow], Optional[JSONResponse]]:
        try:
            w = jsonio.from_dict(doc)
        except jsonio.SchemaError as exc:
            return None, _error(400, str(exc))
        violations = validate(w, vcfg)
        if violations and strict_validation:
            return None, _error(
                422,
                "validation failed",
                violations=[v.to_json() for v in violations],
            )
        return w, None

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.post("/workflows", status_code=201)
    def create_workflow(doc: dict = Body(...)):
        w, err = _parse_body(doc)
        if err is not None:
            return err
        wf_id, token = store.create(w)
        violations = validate(w, vcfg)
        out = {"id": wf_id, "edit_token": token, "rev": 1}
        if violations:
            out["violations"] = [v.to_json() for v in violations]
        return out

    @app.get("/workflows/{wf_id}")
    def get_workflow(
        wf_id: str,
        rev: Optional[int] = Query(None, ge=1),
        format: str = Query("json"),
    ):
        if format not in ("json", "cwn", "dot"):
            return _error(400, f"unknown format {format!r}")
        try:
            w = store.get(wf_id, rev)
        except UnknownWorkflow as exc:
            return _error(404, str(exc))
        if format == "cwn":
            return PlainTextResponse(cwn.to_cwn(w))
        if format == "dot":
            return PlainTextResponse(
                export_dot(w), media_type="text/vnd.graphviz"
            )
        return JSONResponse(jsonio.to_dict(w))

    @app.put("/workflows/{wf_id}")
    def update_workflow(
        wf_id: str,
        doc: dict = Body(...),
        x_edit_token: Optional[str] = Header(None),
    ):
        if not store.exists(wf_id):
            return _error(404, f"no workflow {wf_id!r}")
        w, err = _parse_body(doc)
        if err is not None:
            return err
        try:
            new_rev = store.update(wf_id, w, x_edit_token or "")
        except BadToken as exc:
            return _error(403, str(exc))
        out = {"id": wf_id, "rev": new_rev}
        violations = validate(w, vcfg)
        if violations:
            out["violations"] = [v.to_json() for v in violations]
        return out

    @app.get("/workflows/{wf_id}/restore")
    def restore_view(wf_id: str):
        try:
            w = store.get(wf_id)
        except UnknownWorkflow as exc:
            return _error(404, str(exc))
        return {"capability": "read-only", "workflow": jsonio.to_dict(w)}

    @app.api_route(
        "/workflows/{wf_id}/restore",
        methods=["PUT", "POST", "DELETE", "PATCH"],
    )
    def restore_write(wf_id: str, request: Request):
        return _error(405, "the restore view is read-only, no edit access")

    @app.get("/workflows/{wf_id}/history")
    def history(wf_id: str):
        if not enable_history:
            return _error(404, "history is not enabled")
        try:
            return {"revisions": store.revisions(wf_id)}
        except UnknownWorkflow as exc:
            return _error(404, str(exc))

    def _run_ingest(wf_id: str, video: VideoMeta):
        try:
            w, report = ingest_video(provider, video, icfg)
        except ExhaustedRetries as exc:
            ingest_status[wf_id] = {
                "state": "failed",
                "error": str(exc),
                "report": exc.report.to_json() if exc.report else None,
            }
            return
        except (IngestError, jsonio.SchemaError) as exc:
            ingest_status[wf_id] = {
                "state": "failed",
                "error": str(exc),
                "report": None,
            }
            return
        try:
            rev = store.update(
                wf_id, w, ingest_status[wf_id]["token"], author="ingest"
            )
        except Exception as exc:  # keep the status honest, never stuck running
            ingest_status[wf_id] = {
                "state": "failed",
                "error": str(exc),
                "report": report.to_json(),
            }
            return
        ingest_status[wf_id] = {
            "state": "done",
            "rev": rev,
            "report": report.to_json(),
        }

    @app.post("/workflows/{wf_id}/ingest", status_code=202)
    def trigger_ingest(
        wf_id: str,
        payload: Optional[dict] = Body(None),
        x_edit_token: Optional[str] = Header(None),
    ):
        if provider is None:
            return _error(503, "no model provider configured")
        try:
            store.check_token(wf_id, x_edit_token)
        except UnknownWorkflow as exc:
            return _error(404, str(exc))
        except BadToken as exc:
            return _error(403, str(exc))
        if payload and "video" in payload:
            try:
                v = payload["video"]
                video = VideoMeta(
                    v.get("uri", ""),
                    v.get("duration_s", 0),
                    v.get("title", ""),
                )
            except (TypeError, ValueError, AttributeError) as exc:
                return _error(400, f"bad video metadata: {exc}")
        else:
            video = store.get(wf_id).video
        with ingest_lock:
            current = ingest_status.get(wf_id)
            if current and current.get("state") == "running":
                return _error(409, "an ingestion is already running")
            ingest_status[wf_id] = {"state": "running", "token": x_edit_token}
        worker = threading.Thread(
            target=_run_ingest, args=(wf_id, video), daemon=True
        )
        worker.start()
        return {"state": "running"}

    @app.get("/workflows/{wf_id}/ingest/status")
    def ingest_state(wf_id: str):
        if not store.exists(wf_id):
            return _error(404, f"no workflow {wf_id!r}")
        status = ingest_status.get(wf_id)
        if status is None:
            return {"state": "idle"}
        return {k: v for k, v in status.items() if k != "token"}

    return app
