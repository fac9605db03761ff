"""HTTP service exposing every module operation.

Resource-oriented JSON endpoints; every request authenticates with a bearer
session token, passes through the permission matrix inside the store facade,
and every write lands as one event-log append. State-changing endpoints
accept a client-supplied request_id and replay idempotently.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import access
from .canon import dt_to_iso, iso_to_dt
from .domain import RoleKind
from .errors import (
    AuthorizationError,
    CorruptLogError,
    MeshatError,
    NotFoundError,
    StateError,
    ValidationError,
)
from .events import EntryKind
from .store import DataStore

TOKEN_TTL = timedelta(hours=8)


@dataclass
class SessionToken:
    token: str
    actor_id: str
    issued_at: datetime
    expiry: datetime


class SessionRegistry:
    def __init__(self, data: DataStore):
        self.data = data
        self.tokens: dict[str, SessionToken] = {}

    def login(self, actor_id: str, secret: str) -> SessionToken:
        credentials = self.data.load_credentials()
        if credentials.get(actor_id) != secret or not secret:
            raise AuthorizationError("unknown actor or bad secret", rule_id="auth-login")
        now = self.data.clock.now()
        session = SessionToken(secrets.token_urlsafe(24), actor_id, now, now + TOKEN_TTL)
        self.tokens[session.token] = session
        return session

    def resolve(self, token: str | None) -> str:
        if not token:
            raise AuthorizationError("missing bearer token", rule_id="auth-required")
        session = self.tokens.get(token)
        if session is None:
            raise AuthorizationError("unknown session token", rule_id="auth-required")
        if self.data.clock.now() >= session.expiry:
            raise AuthorizationError("session expired", rule_id="auth-expired")
        return session.actor_id


# -- request bodies -----------------------------------------------------------

class LoginBody(BaseModel):
    actor_id: str
    secret: str


class DashboardEntryBody(BaseModel):
    kind: str
    payload: dict
    kolb_tags: list[str] = Field(default_factory=list)
    request_id: str | None = None


class ConfirmBody(BaseModel):
    seqs: list[int]
    request_id: str | None = None


class JournalEntryBody(BaseModel):
    payload: dict
    kolb_tags: list[str] = Field(default_factory=list)
    request_id: str | None = None


class RatingsBody(BaseModel):
    ratings: dict[str, int]
    request_id: str | None = None


class NoteBody(BaseModel):
    payload: dict
    request_id: str | None = None


class PostBody(BaseModel):
    body: str
    request_id: str | None = None


class ModerationBody(BaseModel):
    decision: str
    request_id: str | None = None


class DiscussionBody(BaseModel):
    title: str
    text: str
    tags: list[str]
    request_id: str | None = None


class ReplyBody(BaseModel):
    text: str
    request_id: str | None = None


class SubjectBody(BaseModel):
    parent_id: str
    label: str
    request_id: str | None = None


class TaxonomyModerationBody(BaseModel):
    op: str
    node_id: str | None = None
    into_id: str | None = None
    label: str | None = None
    request_id: str | None = None


class ContractBody(BaseModel):
    answers: list[str]
    evidence_refs: list[int] = Field(default_factory=list)
    request_id: str | None = None


class ScheduleChangeBody(BaseModel):
    payload: dict
    request_id: str | None = None


def _entry_dict(entry) -> dict:
    return entry.to_record()


def _parse_window(from_raw: str | None, to_raw: str | None, clock) -> tuple[datetime, datetime]:
    to_dt = iso_to_dt(to_raw, field="to") if to_raw else clock.now()
    from_dt = iso_to_dt(from_raw, field="from") if from_raw else to_dt - timedelta(days=14)
    return from_dt, to_dt


def create_app(data: DataStore, static_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="meshat", docs_url=None, redoc_url=None, openapi_url=None)
    sessions = SessionRegistry(data)
    app.state.data = data
    app.state.sessions = sessions

    def caller(authorization: str | None = Header(default=None)) -> str:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        return sessions.resolve(token)

    @app.exception_handler(MeshatError)
    async def on_error(request: Request, exc: MeshatError):
        status = 500
        detail: dict = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ValidationError):
            status = 400
            detail["field"] = exc.field
        elif isinstance(exc, AuthorizationError):
            status = 403
            detail["rule_id"] = exc.rule_id
        elif isinstance(exc, NotFoundError):
            status = 404
        elif isinstance(exc, StateError):
            status = 409
        elif isinstance(exc, CorruptLogError):
            detail["last_good_seq"] = exc.last_good_seq
        return JSONResponse(status_code=status, content={"error": detail})

    # -- health & auth -------------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok", "courses": data.course_ids()}

    @app.post("/auth/login")
    def login(body: LoginBody):
        session = sessions.login(body.actor_id, body.secret)
        return {
            "token": session.token,
            "actor_id": session.actor_id,
            "issued_at": dt_to_iso(session.issued_at),
            "expiry": dt_to_iso(session.expiry),
        }

    # -- courses ---------------------------------------------------------------

    @app.get("/courses")
    def list_courses(actor_id: str = Depends(caller)):
        out = []
        for cid in data.course_ids():
            store = data.get(cid)
            if actor_id not in store.course.actors:
                continue
            out.append(_course_summary(store, actor_id))
        return {"courses": out}

    def _course_summary(store, actor_id: str) -> dict:
        course = store.course
        actor = course.actors[actor_id]
        my_groups = sorted(actor.student_groups() | actor.tutored_groups())
        return {
            "id": course.id,
            "name": course.name,
            "start_date": course.start_date.isoformat(),
            "end_date": course.end_date.isoformat(),
            "state": store.state_now().value,
            "lifecycle": course.lifecycle.value,
            "groups": sorted(course.groups),
            "my_groups": my_groups,
            "my_roles": sorted({b.kind.value for b in actor.roles}),
            "competencies": [
                {"id": c.id, "label": c.label, "kind": c.kind} for c in course.competencies.values()
            ],
        }

    @app.get("/courses/{course_id}")
    def course_detail(course_id: str, actor_id: str = Depends(caller)):
        store = data.get(course_id)
        if actor_id not in store.course.actors:
            raise AuthorizationError(f"{actor_id} is not enrolled in {course_id}")
        return _course_summary(store, actor_id)

    @app.post("/courses/{course_id}/close")
    def close_course_endpoint(course_id: str, actor_id: str = Depends(caller)):
        store = data.get(course_id)
        principal = store.principal(actor_id)
        if not principal.actor.has_role(RoleKind.DIRECTOR):
            raise AuthorizationError("only the director closes a course", rule_id="director-closes-course")
        store.close()
        return {"course_id": course_id, "state": store.state_now().value}

    # -- group dashboard ----------------------------------------------------------

    @app.get("/groups/{group_id}/dashboard")
    def group_dashboard(group_id: str, as_of: str | None = None, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        at = iso_to_dt(as_of, field="as_of") if as_of else None
        return store.dashboard_view(actor_id, group_id, as_of=at).to_dict()

    @app.get("/groups/{group_id}/dashboard/pending")
    def group_pending(group_id: str, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        return {"pending": [_entry_dict(e) for e in store.pending_proposals(actor_id, group_id)]}

    @app.get("/groups/{group_id}/dashboard/gantt")
    def group_gantt(group_id: str, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        rows = store.gantt_rows(actor_id, group_id)
        return {
            "rows": [
                {
                    "task": task,
                    "start": start.isoformat(),
                    "end": end.isoformat(),
                    "pct": pct,
                    "depends_on": list(deps),
                }
                for task, start, end, pct, deps in rows
            ]
        }

    @app.post("/groups/{group_id}/dashboard/entries")
    def propose(group_id: str, body: DashboardEntryBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        try:
            kind = EntryKind(body.kind)
        except ValueError:
            raise ValidationError(f"unknown entry kind {body.kind!r}", field="kind")
        from .domain import KolbPhase

        tags = frozenset(KolbPhase(t) for t in body.kolb_tags)
        entry = store.propose_dashboard_entry(
            actor_id, group_id, kind, body.payload, kolb_tags=tags, request_id=body.request_id
        )
        return _entry_dict(entry)

    @app.post("/groups/{group_id}/dashboard/confirmations")
    def confirm(group_id: str, body: ConfirmBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        view = store.confirm_dashboard_entries(actor_id, group_id, body.seqs, request_id=body.request_id)
        return view.to_dict()

    @app.get("/groups/{group_id}/indicators")
    def indicators(
        group_id: str,
        actor_id: str = Depends(caller),
        window_from: str | None = Query(default=None, alias="from"),
        window_to: str | None = Query(default=None, alias="to"),
    ):
        store = data.find_course_of_group(group_id)
        from_dt, to_dt = _parse_window(window_from, window_to, store.clock)
        return store.indicators(actor_id, group_id, from_dt, to_dt).to_dict()

    @app.get("/groups/{group_id}/monitor")
    def group_monitor(group_id: str, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        return store.monitor_view(actor_id, group_id).to_dict()

    # -- tutor monitor -----------------------------------------------------------------

    @app.get("/tutors/{tutor_id}/monitor/groups/{group_id}")
    def tutor_monitor(tutor_id: str, group_id: str, actor_id: str = Depends(caller)):
        if tutor_id != actor_id:
            raise AuthorizationError("tutors read their own monitor", rule_id="tutor-monitor-self")
        store = data.find_course_of_group(group_id)
        now = store.clock.now()
        return {
            "group_id": group_id,
            "indicators": store.indicators(actor_id, group_id, now - timedelta(days=14), now).to_dict(),
            "monitor": store.monitor_view(actor_id, group_id).to_dict(),
            "history": [row.to_dict() for row in store.indicator_history(actor_id, group_id)],
        }

    @app.post("/tutors/{tutor_id}/monitor/notes")
    def add_note(tutor_id: str, body: NoteBody, actor_id: str = Depends(caller)):
        if tutor_id != actor_id:
            raise AuthorizationError("notes are written by their author", rule_id="tutor-monitor-self")
        store = data.find_course_of_actor(actor_id)
        return _entry_dict(store.add_note(actor_id, body.payload, request_id=body.request_id))

    @app.post("/tutors/{tutor_id}/monitor/assessments")
    def add_assessment(tutor_id: str, body: NoteBody, actor_id: str = Depends(caller)):
        if tutor_id != actor_id:
            raise AuthorizationError("assessments are written by their author", rule_id="tutor-monitor-self")
        store = data.find_course_of_actor(actor_id)
        return _entry_dict(store.add_assessment(actor_id, body.payload, request_id=body.request_id))

    # -- student journal ------------------------------------------------------------------

    @app.get("/students/{student_id}/journal")
    def journal(student_id: str, actor_id: str = Depends(caller), format: str = "json"):
        store = data.find_course_of_actor(student_id)
        timeline = store.journal_timeline(actor_id, student_id)
        if format == "csv":
            return PlainTextResponse(timeline.to_csv(), media_type="text/csv")
        return timeline.to_dict()

    @app.post("/students/{student_id}/journal/entries")
    def journal_entry(student_id: str, body: JournalEntryBody, actor_id: str = Depends(caller)):
        if student_id != actor_id:
            raise AuthorizationError("journals accept only their owner's entries", rule_id="owner-writes-journal")
        store = data.find_course_of_actor(student_id)
        from .domain import KolbPhase

        tags = frozenset(KolbPhase(t) for t in body.kolb_tags)
        entry = store.record_journal_entry(actor_id, body.payload, kolb_tags=tags, request_id=body.request_id)
        return _entry_dict(entry)

    @app.post("/students/{student_id}/journal/assessments")
    def self_assess(student_id: str, body: RatingsBody, actor_id: str = Depends(caller)):
        if student_id != actor_id:
            raise AuthorizationError("self-assessments accept only their owner", rule_id="owner-writes-journal")
        store = data.find_course_of_actor(student_id)
        payload = {"entry_type": "self_assessment", "ratings": body.ratings}
        entry = store.record_journal_entry(actor_id, payload, request_id=body.request_id)
        return _entry_dict(entry)

    @app.get("/students/{student_id}/activity")
    def activity(
        student_id: str,
        actor_id: str = Depends(caller),
        window_from: str | None = Query(default=None, alias="from"),
        window_to: str | None = Query(default=None, alias="to"),
    ):
        store = data.find_course_of_actor(student_id)
        from_dt, to_dt = _parse_window(window_from, window_to, store.clock)
        return store.activity_summary(actor_id, student_id, from_dt, to_dt).to_dict()

    # -- blogs ---------------------------------------------------------------------------

    @app.get("/blogs/students/{student_id}")
    def student_blog(student_id: str, actor_id: str = Depends(caller)):
        store = data.find_course_of_actor(student_id)
        return {"posts": [p.to_dict() for p in store.student_blog_feed(actor_id, student_id)]}

    @app.post("/blogs/students/{student_id}/posts")
    def post_student_blog(student_id: str, body: PostBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_actor(student_id)
        return store.post_student_blog(actor_id, student_id, body.body, request_id=body.request_id).to_dict()

    @app.get("/blogs/groups/{group_id}")
    def group_blog(group_id: str, published_only: bool = True, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        return {"posts": [p.to_dict() for p in store.group_blog_feed(actor_id, group_id, published_only)]}

    @app.get("/blogs/groups/{group_id}/pending")
    def group_blog_pending(group_id: str, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        return {"posts": [p.to_dict() for p in store.pending_group_posts(actor_id, group_id)]}

    @app.post("/blogs/groups/{group_id}/posts")
    def post_group_blog(group_id: str, body: PostBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        return store.post_group_blog(actor_id, group_id, body.body, request_id=body.request_id).to_dict()

    @app.post("/blogs/groups/{group_id}/posts/{post_seq}/moderation")
    def moderate(group_id: str, post_seq: int, body: ModerationBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_group(group_id)
        if body.decision not in ("published", "rejected"):
            raise ValidationError(f"decision must be published or rejected, got {body.decision!r}", field="decision")
        return store.moderate_group_post(
            actor_id, group_id, post_seq, body.decision, request_id=body.request_id
        ).to_dict()

    # -- forum & taxonomy ------------------------------------------------------------------

    @app.get("/forum/discussions")
    def forum_search(
        actor_id: str = Depends(caller),
        tags: str | None = None,
        q: str | None = None,
        course: str | None = None,
    ):
        store = data.get(course) if course else data.find_course_of_actor(actor_id)
        tag_list = [t for t in (tags.split(",") if tags else []) if t]
        hits = store.search_forum(actor_id, tags=tag_list or None, text=q)
        return {"discussions": [d.to_dict() for d in hits]}

    @app.post("/forum/discussions")
    def forum_start(body: DiscussionBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_actor(actor_id)
        discussion = store.start_discussion(actor_id, body.title, body.text, body.tags, request_id=body.request_id)
        return discussion.to_dict()

    @app.post("/forum/discussions/{discussion_id}/replies")
    def forum_reply(discussion_id: str, body: ReplyBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_actor(actor_id)
        entry = store.reply_discussion(actor_id, discussion_id, body.text, request_id=body.request_id)
        return _entry_dict(entry)

    @app.get("/taxonomy")
    def taxonomy(actor_id: str = Depends(caller), course: str | None = None):
        store = data.get(course) if course else data.find_course_of_actor(actor_id)
        return {"nodes": store.taxonomy_nodes(actor_id)}

    @app.post("/taxonomy/proposals")
    def propose_subject(body: SubjectBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_actor(actor_id)
        return store.propose_subject(actor_id, body.parent_id, body.label, request_id=body.request_id)

    @app.post("/taxonomy/moderations")
    def moderate_taxonomy(body: TaxonomyModerationBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_actor(actor_id)
        payload = {"op": body.op}
        for key in ("node_id", "into_id", "label"):
            value = getattr(body, key)
            if value is not None:
                payload[key] = value
        entry = store.moderate_taxonomy(actor_id, payload, request_id=body.request_id)
        return _entry_dict(entry)

    # -- contracts ----------------------------------------------------------------------------

    @app.get("/contracts/{holder_id}")
    def contract(holder_id: str, actor_id: str = Depends(caller), format: str = "json"):
        store = data.find_course_of_actor(holder_id)
        versions = store.get_contract(actor_id, holder_id)
        if format == "text":
            text = "\n".join(versions[v].to_text() for v in sorted(versions))
            return PlainTextResponse(text, media_type="text/plain")
        return {"versions": {str(v): c.to_dict() for v, c in versions.items()}}

    @app.post("/contracts/{holder_id}")
    def create_contract(holder_id: str, body: ContractBody, actor_id: str = Depends(caller)):
        if holder_id != actor_id:
            raise AuthorizationError("contracts are written by their holder", rule_id="contract-holder-writes")
        store = data.find_course_of_actor(holder_id)
        return store.create_contract(actor_id, body.answers, request_id=body.request_id).to_dict()

    @app.put("/contracts/{holder_id}")
    def update_contract(holder_id: str, body: ContractBody, actor_id: str = Depends(caller)):
        if holder_id != actor_id:
            raise AuthorizationError("contracts are revised by their holder", rule_id="contract-holder-writes")
        store = data.find_course_of_actor(holder_id)
        contract = store.update_contract(
            actor_id, body.answers, evidence_refs=body.evidence_refs, request_id=body.request_id
        )
        return contract.to_dict()

    # -- schedule --------------------------------------------------------------------------------

    @app.get("/schedule")
    def schedule(actor_id: str = Depends(caller), group: str | None = None, course: str | None = None):
        store = data.get(course) if course else data.find_course_of_actor(actor_id)
        return {"items": [i.to_dict() for i in store.schedule_listing(actor_id, group_id=group)]}

    @app.post("/schedule/changes")
    def schedule_change(body: ScheduleChangeBody, actor_id: str = Depends(caller)):
        store = data.find_course_of_actor(actor_id)
        return _entry_dict(store.change_schedule(actor_id, body.payload, request_id=body.request_id))

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve(data_dir: Path, host: str, port: int, recover: bool = False, static_dir: Path | None = None):
    """Blocking entrypoint used by the CLI `serve` subcommand."""
    import uvicorn

    data = DataStore(data_dir, recover=recover)
    app = create_app(data, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
