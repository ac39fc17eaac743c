"""HTTP+JSON surface over the study store, plus optional static hosting of the
respondent UI. Errors are returned as ``{"code", "message"}`` JSON bodies.

Endpoints:

    POST /studies                       create a study (admin)
    POST /studies/{id}/sessions         open or resume a respondent session
    GET  /sessions/{sid}/trials/next    next pending trial as PNG bytes
                                        (X-Trial-Id / X-Trial-Number /
                                        X-Trial-Total headers; 204 when done)
    POST /sessions/{sid}/judgments      {"trial_id", "verdict": "real"|"fake"}
    GET  /studies/{id}/report           judged-real rates per source

Respondent-facing responses are blind: no source label, path, or original
filename ever appears in them.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .store import ConflictError, NotFoundError, PreconditionError, StudyError, StudyStore


class SourceSpec(BaseModel):
    label: str
    directory: str


class StudySpec(BaseModel):
    name: str
    sources: list[SourceSpec] = Field(min_length=2)
    trials_per_session: int = 20


class SessionSpec(BaseModel):
    alias: str = Field(min_length=1)
    seed: int = 0


class JudgmentSpec(BaseModel):
    trial_id: str
    verdict: str


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(store: StudyStore, ui_dir=None) -> FastAPI:
    app = FastAPI(title="unetcolor study service")

    @app.exception_handler(NotFoundError)
    async def _nf(request: Request, exc: NotFoundError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(ConflictError)
    async def _cf(request: Request, exc: ConflictError):
        return _error(409, "conflict", str(exc))

    @app.exception_handler(PreconditionError)
    async def _pc(request: Request, exc: PreconditionError):
        return _error(412, "precondition_failed", str(exc))

    @app.exception_handler(StudyError)
    async def _se(request: Request, exc: StudyError):
        return _error(400, "bad_request", str(exc))

    @app.post("/studies", status_code=201)
    def create_study(spec: StudySpec):
        labels = [s.label for s in spec.sources]
        if len(set(labels)) != len(labels):
            raise StudyError("source labels must be unique")
        study = store.create_study(
            spec.name, {s.label: s.directory for s in spec.sources}, spec.trials_per_session)
        return {"study_id": study.study_id, "name": study.name,
                "trials_per_session": study.trials_per_session}

    @app.post("/studies/{study_id}/sessions")
    def open_session(study_id: str, spec: SessionSpec):
        session = store.open_session(study_id, spec.alias, spec.seed)
        return {
            "session_id": session.session_id,
            "alias": session.alias,
            "total_trials": len(session.trials),
            "judged_count": session.judged_count,
            "complete": session.complete,
        }

    @app.get("/sessions/{session_id}/trials/next")
    def next_trial(session_id: str):
        nxt = store.next_trial(session_id)
        if nxt is None:
            return Response(status_code=204, headers={"X-Session-Complete": "true"})
        number, total, trial_id, png = nxt
        return Response(
            content=png,
            media_type="image/png",
            headers={
                "X-Trial-Id": trial_id,
                "X-Trial-Number": str(number),
                "X-Trial-Total": str(total),
                "Cache-Control": "no-store",
            },
        )

    @app.post("/sessions/{session_id}/judgments")
    def submit_judgment(session_id: str, spec: JudgmentSpec):
        session = store.submit_judgment(session_id, spec.trial_id, spec.verdict)
        return {
            "accepted": True,
            "judged_count": session.judged_count,
            "total_trials": len(session.trials),
            "complete": session.complete,
        }

    @app.get("/studies/{study_id}/report")
    def report(study_id: str):
        return store.report(study_id)

    if ui_dir is not None:
        ui_path = Path(ui_dir)
        if not ui_path.is_dir():
            raise StudyError(f"UI directory {ui_path} does not exist")
        app.mount("/", StaticFiles(directory=str(ui_path), html=True), name="ui")

    return app
