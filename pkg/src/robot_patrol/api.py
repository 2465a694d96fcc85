"""HTTP surface over the patrol service.

A thin FastAPI adapter: every behavior lives in the service and module
layer; handlers only decode requests, call through, and map structured
errors onto status codes (400 validation echoing the error class name,
401 unknown token, 404 unknown report/location).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .advisory import UnknownLocation
from .datastore import (
    DatastoreError,
    InvalidPayload,
    UnknownReport,
    UnknownUser,
)
from .gamification import NotVerified
from .protocol import ProtocolError
from .semantic_map import NoEventCheckpoint
from .service import PatrolService, UnknownToken


class LoginBody(BaseModel):
    name: str
    maintenance: bool = False


class BeginBody(BaseModel):
    token: str | None = None


class ObstacleBody(BaseModel):
    token: str | None = None
    obstacle_class: str = Field(alias="class")
    count: int = 1
    location: str
    draft_id: str | None = None

    model_config = {"populate_by_name": True}


class EventBody(BaseModel):
    token: str | None = None
    keyword: str
    location: str
    draft_id: str | None = None


class FeedbackBody(BaseModel):
    report_id: int
    helpful: bool


_BAD_REQUEST = (ProtocolError, InvalidPayload, NoEventCheckpoint, NotVerified, ValueError)
_NOT_FOUND = (UnknownLocation, UnknownReport, UnknownUser)


def create_app(service: PatrolService) -> FastAPI:
    app = FastAPI(title="robot-patrol")

    def _error(status: int, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(UnknownToken)
    async def _unknown_token(request: Request, exc: UnknownToken):
        return _error(401, exc)

    for cls in _NOT_FOUND:
        @app.exception_handler(cls)
        async def _not_found(request: Request, exc: Exception):
            return _error(404, exc)

    for cls in _BAD_REQUEST:
        @app.exception_handler(cls)
        async def _bad_request(request: Request, exc: Exception):
            return _error(400, exc)

    @app.exception_handler(DatastoreError)
    async def _datastore(request: Request, exc: DatastoreError):
        return _error(400, exc)

    def _session(token: str | None) -> tuple[str, str | None]:
        """Resolve a token to a user id; no token means a new guest.

        Returns (user_id, fresh_guest_token or None)."""
        if token is not None:
            return service.resolve_token(token).user_id, None
        guest = service.guest_session()
        return guest["user_id"], guest["token"]

    @app.post("/login")
    def login(body: LoginBody):
        return service.login(body.name, maintenance=body.maintenance)

    @app.post("/reports/begin")
    def begin(body: BeginBody):
        user_id, guest_token = _session(body.token)
        result = service.begin_report(user_id)
        if guest_token:
            result["token"] = guest_token
        return result

    @app.post("/reports/obstacle")
    def report_obstacle(body: ObstacleBody):
        user_id, guest_token = _session(body.token)
        result = service.submit_obstacle(
            user_id, body.obstacle_class, body.count, body.location, body.draft_id
        )
        if guest_token:
            result["token"] = guest_token
        return result

    @app.post("/reports/event")
    def report_event(body: EventBody):
        user_id, guest_token = _session(body.token)
        result = service.submit_event(user_id, body.keyword, body.location, body.draft_id)
        if guest_token:
            result["token"] = guest_token
        return result

    @app.get("/reports/{report_id}")
    def report_status(report_id: int):
        report = service.sync_and_get_report(report_id)
        return {
            "report_id": report.report_id,
            "kind": report.kind,
            "status": report.status,
            "location": str(report.payload.location),
            "submitted_at": report.submitted_at,
        }

    @app.post("/missions/dispatch")
    def dispatch():
        return service.dispatch()

    @app.get("/advisory")
    def advisory(route: str = ""):
        tokens = [t.strip() for t in route.split(",") if t.strip()]
        if not tokens:
            raise ValueError("route query parameter must list areas, e.g. route=corridor_1,corner_2")
        return service.advisory(tokens)

    @app.get("/leaderboard")
    def leaderboard(n: int = 10):
        return {"entries": service.leaderboard(n)}

    @app.post("/feedback")
    def feedback(body: FeedbackBody):
        return service.feedback(body.report_id, body.helpful)

    @app.get("/me")
    def me(token: str):
        user = service.resolve_token(token)
        return service.user_state(user.user_id)

    @app.get("/status")
    def status():
        return service.status()

    return app
