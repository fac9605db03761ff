"""Course store: persistence, projections and the authorized operation facade.

One directory per course holds the definition/roster document and the event
log. Every write validates against the policy matrix and the owning module,
appends one entry (durable before acknowledgement), then advances the live
projections. Views are recomputable from scratch at any time; periodic
snapshot files are written as a non-authoritative convenience.
"""

from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

from . import access
from .access import Action, Principal, ResourceKind, ResourceRef
from .canon import canonical_json, dt_to_iso
from .clock import SystemClock
from .contract import (
    ContractRegistry,
    LearningContract,
    check_question_order,
    pair_answers,
    validate_create,
    validate_holder,
    validate_revision,
)
from .dashboard import (
    GroupDashboard,
    ProjectDashboardView,
    PROPOSABLE_KINDS,
    validate_confirmation,
    validate_proposal,
)
from .domain import (
    Course,
    CourseLifecycle,
    CourseState,
    MANAGER_ROLES,
    RoleKind,
    RosterRow,
    close_course,
    course_state_at,
    create_course,
    enroll,
    parse_roster_rows,
)
from .errors import AuthorizationError, NotFoundError, StateError, ValidationError
from .events import Entry, EntryDraft, EntryKind, EventLog
from .journal import (
    ReflexiveTimeline,
    StudentJournal,
    journal_kolb_tags,
    validate_self_assessment,
)
from .monitor import (
    ActivitySummary,
    GroupMonitor,
    TeamworkIndicators,
    compute_indicators,
    student_activity,
    validate_assessment,
    validate_note,
)
from .publication import (
    BlogPost,
    ForumDiscussion,
    PublicationState,
    validate_discussion_start,
    validate_group_post,
    validate_moderation,
    validate_reply,
    validate_taxonomy_change,
)
from .schedule import ScheduleItem, ScheduleState

SNAPSHOT_EVERY = 100
COURSE_DOC_VERSION = 1


class CourseProjection:
    """All live materialized views for one course, fed entries in seq order."""

    def __init__(self, course: Course):
        self.course = course
        self.dashboards = {gid: GroupDashboard(g) for gid, g in course.groups.items()}
        self.monitors = {gid: GroupMonitor(g) for gid, g in course.groups.items()}
        self.journals: dict[str, StudentJournal] = {}
        self.publication = PublicationState(course)
        self.contracts = ContractRegistry()
        self.schedule = ScheduleState()

    def journal_for(self, actor_id: str) -> StudentJournal:
        journal = self.journals.get(actor_id)
        if journal is None:
            journal = StudentJournal(actor_id)
            self.journals[actor_id] = journal
        return journal

    def apply(self, entry: Entry) -> None:
        if entry.group_id:
            dashboard = self.dashboards.get(entry.group_id)
            if dashboard is not None:
                dashboard.apply(entry)
            monitor = self.monitors.get(entry.group_id)
            if monitor is not None:
                monitor.apply(entry)
        if entry.kind is EntryKind.METACOG_ENTRY:
            self.journal_for(entry.actor_id).apply(entry)
        if self.publication.applies(entry):
            self.publication.apply(entry)
        if entry.kind is EntryKind.CONTRACT_REVISION:
            self.contracts.apply(entry)
        if entry.kind is EntryKind.SCHEDULE_CHANGE:
            self.schedule.apply(entry)


@dataclass(frozen=True)
class MonitorView:
    group_id: str
    notes: list[dict]
    assessments: list[dict]

    def to_dict(self) -> dict:
        return {"group_id": self.group_id, "notes": self.notes, "assessments": self.assessments}


class CourseStore:
    """One course: log + projections + the authorized operation surface."""

    def __init__(self, directory: Path, course: Course, log: EventLog, clock=None):
        self.directory = Path(directory)
        self.course = course
        self.log = log
        self.clock = clock or SystemClock()
        self.projection = CourseProjection(course)
        self._write_lock = threading.RLock()
        for entry in log.entries:
            self.projection.apply(entry)

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def initialize(cls, directory: Path, definition: dict, clock=None) -> "CourseStore":
        course = create_course(definition)
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        log = EventLog.create(directory / "events.log", course.id)
        store = cls(directory, course, log, clock=clock)
        store._definition = definition
        store._roster_rows = []
        store._save_course_doc()
        return store

    @classmethod
    def load(cls, directory: Path, clock=None, recover: bool = False) -> "CourseStore":
        directory = Path(directory)
        doc_path = directory / "course.json"
        if not doc_path.exists():
            raise NotFoundError(f"no course document at {doc_path}")
        doc = json.loads(doc_path.read_text(encoding="utf-8"))
        if doc.get("schema_version") != COURSE_DOC_VERSION:
            raise ValidationError(f"unsupported course document version {doc.get('schema_version')!r}", field="schema_version")
        course = create_course(doc["definition"])
        roster_rows = [RosterRow(r[0], r[1], RoleKind(r[2]), r[3] or None) for r in doc.get("roster", [])]
        if roster_rows:
            enroll(course, roster_rows)
        course.lifecycle = CourseLifecycle(doc["lifecycle"])
        if doc.get("closed_at"):
            from .canon import iso_to_dt

            course.closed_at = iso_to_dt(doc["closed_at"])
        log = EventLog.open(directory / "events.log", recover=recover)
        store = cls(directory, course, log, clock=clock)
        store._definition = doc["definition"]
        store._roster_rows = doc.get("roster", [])
        return store

    def _save_course_doc(self) -> None:
        doc = {
            "schema_version": COURSE_DOC_VERSION,
            "definition": self._definition,
            "lifecycle": self.course.lifecycle.value,
            "closed_at": dt_to_iso(self.course.closed_at) if self.course.closed_at else None,
            "roster": self._roster_rows,
        }
        path = self.directory / "course.json"
        path.write_text(canonical_json(doc) + "\n", encoding="utf-8")

    def import_roster(self, text: str) -> dict:
        """Install roster rows (course must be in setup); returns tallies."""
        with self._write_lock:
            rows = parse_roster_rows(text)
            enroll(self.course, rows)
            self._roster_rows = [[r.actor_id, r.display_name, r.role.value, r.group_id or ""] for r in rows]
            self._save_course_doc()
            # groups exist only now: rebuild projections so the taxonomy is seeded
            self.projection = CourseProjection(self.course)
            for entry in self.log.entries:
                self.projection.apply(entry)
        students = {a.id for a in self.course.actors.values() if a.has_role(RoleKind.STUDENT)}
        tutors = {a.id for a in self.course.actors.values() if a.tutored_groups()}
        return {
            "course_id": self.course.id,
            "groups": len(self.course.groups),
            "students": len(students),
            "tutors": len(tutors),
            "actors": len(self.course.actors),
        }

    def close(self, at: datetime | None = None) -> None:
        with self._write_lock:
            close_course(self.course, at or self.clock.now())
            self._save_course_doc()

    # -- internals ----------------------------------------------------------

    def state_now(self) -> CourseState:
        return course_state_at(self.course, self.clock.now())

    def principal(self, actor_id: str) -> Principal:
        return Principal(actor_id, self.course.require_actor(actor_id))

    def _require(self, actor_id: str, action: Action, resource: ResourceRef) -> None:
        access.require(self.principal(actor_id), action, resource, self.state_now(), self.course)

    def _append(self, draft: EntryDraft) -> tuple[Entry, bool]:
        """Append + apply; returns (entry, fresh). Duplicates are not re-applied."""
        with self._write_lock:
            before = self.log.last_seq()
            entry = self.log.append(draft, self.state_now(), self.clock.now())
            fresh = entry.seq > before
            if fresh:
                self.projection.apply(entry)
                if entry.seq % SNAPSHOT_EVERY == 0:
                    self._write_snapshot(entry.seq)
            return entry, fresh

    def _write_snapshot(self, seq: int) -> None:
        snapdir = self.directory / "snapshots"
        snapdir.mkdir(exist_ok=True)
        payload = {"upto_seq": seq, "views": self.views_payload()}
        (snapdir / f"snapshot-{seq:08d}.json").write_text(canonical_json(payload) + "\n", encoding="utf-8")

    # -- dashboard ------------------------------------------------------------

    def _dashboard(self, group_id: str) -> GroupDashboard:
        dashboard = self.projection.dashboards.get(group_id)
        if dashboard is None:
            raise NotFoundError(f"unknown group {group_id!r}")
        return dashboard

    def propose_dashboard_entry(
        self,
        caller_id: str,
        group_id: str,
        kind: EntryKind,
        payload: dict,
        kolb_tags=frozenset(),
        request_id: str | None = None,
    ) -> Entry:
        group = self.course.require_group(group_id)
        self._require(caller_id, Action.PROPOSE, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id=group_id))
        validate_proposal(self.course, group, caller_id, kind, payload)
        if "tombstone_of" in payload:
            target = payload["tombstone_of"]
            dashboard = self._dashboard(group_id)
            if target not in dashboard.pending:
                raise ValidationError(f"seq {target} is not a pending proposal", field="tombstone_of")
        draft = EntryDraft(
            actor_id=caller_id,
            kind=kind,
            payload=payload,
            group_id=group_id,
            kolb_tags=frozenset(kolb_tags),
            request_id=request_id,
        )
        entry, _ = self._append(draft)
        return entry

    def confirm_dashboard_entries(
        self, caller_id: str, group_id: str, seqs: list[int], request_id: str | None = None
    ) -> ProjectDashboardView:
        group = self.course.require_group(group_id)
        self._require(caller_id, Action.CONFIRM, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id=group_id))
        if caller_id != group.leader_id:
            raise AuthorizationError(f"{caller_id} does not lead group {group_id}", rule_id="leader-confirms-dashboard-data")
        with self._write_lock:
            dashboard = self._dashboard(group_id)
            duplicate = request_id and request_id in {e.request_id for e in self.log.entries}
            if not duplicate:
                validate_confirmation(dashboard, caller_id, seqs)
            draft = EntryDraft(
                actor_id=caller_id,
                kind=EntryKind.LEADER_CONFIRMATION,
                payload={"scope": "dashboard", "confirmed_seqs": sorted(seqs)},
                group_id=group_id,
                request_id=request_id,
            )
            self._append(draft)
        return self.dashboard_view(caller_id, group_id)

    def dashboard_view(self, caller_id: str, group_id: str, as_of: datetime | None = None) -> ProjectDashboardView:
        self.course.require_group(group_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id=group_id))
        return self._view_unchecked(group_id, as_of)

    def _view_unchecked(self, group_id: str, as_of: datetime | None = None) -> ProjectDashboardView:
        now = self.clock.now()
        if as_of is None or (self.log.entries and as_of >= self.log.entries[-1].at) or not self.log.entries:
            state = self._dashboard(group_id)
            return state.compute_view(self.course, as_of or now)
        return self._fold_dashboard(group_id, until=as_of).compute_view(self.course, as_of)

    def _fold_dashboard(self, group_id: str, until: datetime | None = None) -> GroupDashboard:
        group = self.course.require_group(group_id)
        fresh = GroupDashboard(group)
        for entry in self.log.replay(group=group_id, until=until):
            fresh.apply(entry)
        return fresh

    def _fold_monitor(self, group_id: str, until: datetime | None = None) -> GroupMonitor:
        group = self.course.require_group(group_id)
        fresh = GroupMonitor(group)
        for entry in self.log.replay(group=group_id, until=until):
            fresh.apply(entry)
        return fresh

    def gantt_rows(self, caller_id: str, group_id: str):
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id=group_id))
        return self._dashboard(group_id).gantt_rows()

    def pending_proposals(self, caller_id: str, group_id: str) -> list[Entry]:
        """The confirmation queue: full for the leader and monitors, own-only for members."""
        group = self.course.require_group(group_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id=group_id))
        pending = [self._dashboard(group_id).pending[seq] for seq in sorted(self._dashboard(group_id).pending)]
        caller = self.course.require_actor(caller_id)
        sees_all = (
            caller_id == group.leader_id
            or group_id in caller.tutored_groups()
            or any(b.kind in MANAGER_ROLES or b.kind is RoleKind.DIRECTOR for b in caller.roles)
        )
        if sees_all:
            return pending
        return [e for e in pending if e.actor_id == caller_id]

    # -- journal --------------------------------------------------------------

    def record_journal_entry(
        self, caller_id: str, payload: dict, kolb_tags=frozenset(), request_id: str | None = None
    ) -> Entry:
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id=caller_id))
        actor = self.course.require_actor(caller_id)
        if not actor.has_role(RoleKind.STUDENT):
            raise AuthorizationError(f"{caller_id} is not a student", rule_id="owner-writes-journal")
        if payload.get("entry_type") == "self_assessment":
            validate_self_assessment(self.course, payload)
        group = self.course.group_of_student(caller_id)
        draft = EntryDraft(
            actor_id=caller_id,
            kind=EntryKind.METACOG_ENTRY,
            payload=payload,
            group_id=group.id if group else None,
            kolb_tags=journal_kolb_tags(frozenset(kolb_tags)),
            request_id=request_id,
        )
        entry, _ = self._append(draft)
        return entry

    def journal_timeline(self, caller_id: str, subject_id: str) -> ReflexiveTimeline:
        self.course.require_actor(subject_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id=subject_id))
        return self.projection.journal_for(subject_id).timeline()

    def latest_self_assessment(self, caller_id: str, subject_id: str) -> dict[str, int]:
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id=subject_id))
        return self.projection.journal_for(subject_id).latest_assessment()

    # -- monitor ----------------------------------------------------------------

    def indicators(
        self, caller_id: str, group_id: str, window_from: datetime, window_to: datetime
    ) -> TeamworkIndicators:
        self.course.require_group(group_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.TUTOR_DASHBOARD, owner_group_id=group_id))
        return self._indicators_unchecked(group_id, window_from, window_to)

    def _indicators_unchecked(self, group_id: str, window_from: datetime, window_to: datetime) -> TeamworkIndicators:
        entries = self.log.entries
        if entries and window_to < entries[-1].at:
            dashboard = self._fold_dashboard(group_id, until=window_to)
            monitor = self._fold_monitor(group_id, until=window_to)
        else:
            dashboard = self._dashboard(group_id)
            monitor = self.projection.monitors[group_id]
        return compute_indicators(self.course, dashboard, monitor, window_from, window_to)

    def indicator_history(self, caller_id: str, group_id: str, step_days: int = 7) -> list[TeamworkIndicators]:
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.TUTOR_DASHBOARD, owner_group_id=group_id))
        return self._indicator_history_unchecked(group_id, step_days)

    def _indicator_history_unchecked(self, group_id: str, step_days: int = 7) -> list[TeamworkIndicators]:
        from .schedule import _day

        start = _day(self.course.start_date)
        horizon = min(self.clock.now(), _day(self.course.end_date, end=True))
        rows = []
        window_end = start + timedelta(days=step_days)
        while window_end <= horizon:
            rows.append(self._indicators_unchecked(group_id, window_end - timedelta(days=step_days), window_end))
            window_end += timedelta(days=step_days)
        return rows

    def activity_summary(
        self, caller_id: str, student_id: str, window_from: datetime, window_to: datetime
    ) -> ActivitySummary:
        self.course.require_actor(student_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.ACTIVITY_SUMMARY, owner_actor_id=student_id))
        return student_activity(self.log.entries, student_id, window_from, window_to)

    def add_note(self, caller_id: str, payload: dict, request_id: str | None = None) -> Entry:
        group_id = validate_note(self.course, caller_id, payload)
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.TUTOR_DASHBOARD, owner_group_id=group_id))
        draft = EntryDraft(
            actor_id=caller_id, kind=EntryKind.TUTOR_NOTE, payload=payload, group_id=group_id, request_id=request_id
        )
        entry, _ = self._append(draft)
        return entry

    def add_assessment(self, caller_id: str, payload: dict, request_id: str | None = None) -> Entry:
        group_id = validate_assessment(self.course, caller_id, payload)
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.ASSESSMENT, owner_group_id=group_id))
        draft = EntryDraft(
            actor_id=caller_id, kind=EntryKind.ASSESSMENT, payload=payload, group_id=group_id, request_id=request_id
        )
        entry, _ = self._append(draft)
        return entry

    def monitor_view(self, caller_id: str, group_id: str) -> MonitorView:
        self.course.require_group(group_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.TUTOR_DASHBOARD, owner_group_id=group_id))
        monitor = self.projection.monitors[group_id]
        notes = [
            {
                "seq": n.seq,
                "tutor_id": n.tutor_id,
                "at": dt_to_iso(n.at),
                "scope_kind": n.scope_kind,
                "scope_id": n.scope_id,
                "text": n.text,
                "tutor_role_tag": n.tutor_role_tag,
            }
            for n in monitor.notes
        ]
        assessments = [
            {
                "seq": a.seq,
                "tutor_id": a.tutor_id,
                "student_id": a.student_id,
                "at": dt_to_iso(a.at),
                "ratings": dict(sorted(a.ratings.items())),
                "comment": a.comment,
            }
            for a in monitor.assessments
        ]
        return MonitorView(group_id, notes, assessments)

    # -- blogs ------------------------------------------------------------------

    def post_student_blog(
        self, caller_id: str, owner_id: str, body: str, kolb_tags=frozenset(), request_id: str | None = None
    ) -> BlogPost:
        self.course.require_actor(owner_id)
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.STUDENT_BLOG, owner_actor_id=owner_id))
        group = self.course.group_of_student(caller_id)
        draft = EntryDraft(
            actor_id=caller_id,
            kind=EntryKind.BLOG_POST,
            payload={"body": body},
            group_id=group.id if group else None,
            kolb_tags=frozenset(kolb_tags),
            request_id=request_id,
        )
        entry, _ = self._append(draft)
        return self.projection.publication.posts[entry.seq]

    def student_blog_feed(self, caller_id: str, owner_id: str) -> list[BlogPost]:
        self.course.require_actor(owner_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.STUDENT_BLOG, owner_actor_id=owner_id))
        return self.projection.publication.student_feed(owner_id)

    def post_group_blog(self, caller_id: str, group_id: str, body: str, request_id: str | None = None) -> BlogPost:
        group = self.course.require_group(group_id)
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.GROUP_BLOG, owner_group_id=group_id))
        validate_group_post(group, caller_id)
        draft = EntryDraft(
            actor_id=caller_id,
            kind=EntryKind.GROUP_POST_SUBMISSION,
            payload={"body": body},
            group_id=group_id,
            request_id=request_id,
        )
        entry, _ = self._append(draft)
        return self.projection.publication.posts[entry.seq]

    def moderate_group_post(
        self, caller_id: str, group_id: str, post_seq: int, decision: str, request_id: str | None = None
    ) -> BlogPost:
        group = self.course.require_group(group_id)
        self._require(caller_id, Action.MODERATE, ResourceRef(ResourceKind.GROUP_BLOG, owner_group_id=group_id))
        with self._write_lock:
            duplicate = request_id and request_id in {e.request_id for e in self.log.entries}
            if not duplicate:
                validate_moderation(self.projection.publication, group, caller_id, post_seq)
            draft = EntryDraft(
                actor_id=caller_id,
                kind=EntryKind.LEADER_CONFIRMATION,
                payload={"scope": "blog", "post_seq": post_seq, "decision": decision},
                group_id=group_id,
                request_id=request_id,
            )
            self._append(draft)
        return self.projection.publication.posts[post_seq]

    def group_blog_feed(self, caller_id: str, group_id: str, published_only: bool = True) -> list[BlogPost]:
        group = self.course.require_group(group_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.GROUP_BLOG, owner_group_id=group_id))
        if not published_only:
            # drafts and rejections stay between the author and the leader
            if caller_id != group.leader_id:
                return [
                    p
                    for p in self.projection.publication.group_feed(group_id, published_only=False)
                    if p.state == "published" or p.author_id == caller_id
                ]
        return self.projection.publication.group_feed(group_id, published_only=published_only)

    def pending_group_posts(self, caller_id: str, group_id: str) -> list[BlogPost]:
        group = self.course.require_group(group_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.GROUP_BLOG, owner_group_id=group_id))
        posts = self.projection.publication.pending_group_posts(group_id)
        if caller_id != group.leader_id:
            posts = [p for p in posts if p.author_id == caller_id]
        return posts

    # -- forum & taxonomy ---------------------------------------------------------

    def start_discussion(
        self, caller_id: str, title: str, text: str, tags: list[str], request_id: str | None = None
    ) -> ForumDiscussion:
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.FORUM))
        validate_discussion_start(self.projection.publication, tags)
        draft = EntryDraft(
            actor_id=caller_id,
            kind=EntryKind.FORUM_POST,
            payload={"op": "start", "title": title, "text": text, "tags": sorted(set(tags))},
            request_id=request_id,
        )
        entry, _ = self._append(draft)
        return self.projection.publication.discussions[f"d{entry.seq}"]

    def reply_discussion(self, caller_id: str, discussion_id: str, text: str, request_id: str | None = None) -> Entry:
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.FORUM))
        validate_reply(self.projection.publication, discussion_id)
        draft = EntryDraft(
            actor_id=caller_id,
            kind=EntryKind.FORUM_POST,
            payload={"op": "reply", "discussion_id": discussion_id, "text": text},
            request_id=request_id,
        )
        entry, _ = self._append(draft)
        return entry

    def search_forum(self, caller_id: str, tags: list[str] | None = None, text: str | None = None) -> list[ForumDiscussion]:
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.FORUM))
        return self.projection.publication.search(set(tags) if tags else None, text)

    def taxonomy_nodes(self, caller_id: str) -> list[dict]:
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.TAXONOMY))
        tax = self.projection.publication.taxonomy
        return [
            {
                "id": n.id,
                "label": n.label,
                "parent_id": n.parent_id,
                "status": n.status,
                "proposed_by": n.proposed_by,
            }
            for n in sorted(tax.nodes.values(), key=lambda n: n.id)
        ]

    def propose_subject(self, caller_id: str, parent_id: str, label: str, request_id: str | None = None) -> dict:
        self._require(caller_id, Action.PROPOSE, ResourceRef(ResourceKind.TAXONOMY))
        payload = {"op": "propose", "parent_id": parent_id, "label": label}
        validate_taxonomy_change(self.projection.publication, payload)
        draft = EntryDraft(actor_id=caller_id, kind=EntryKind.TAXONOMY_PROPOSAL, payload=payload, request_id=request_id)
        entry, _ = self._append(draft)
        node = self.projection.publication.taxonomy.nodes[f"n{entry.seq}"]
        return {"id": node.id, "label": node.label, "parent_id": node.parent_id, "status": node.status}

    def moderate_taxonomy(self, caller_id: str, payload: dict, request_id: str | None = None) -> Entry:
        self._require(caller_id, Action.MODERATE, ResourceRef(ResourceKind.TAXONOMY))
        if payload.get("op") == "propose":
            raise ValidationError("proposals go through propose_subject", field="op")
        validate_taxonomy_change(self.projection.publication, payload)
        draft = EntryDraft(actor_id=caller_id, kind=EntryKind.TAXONOMY_PROPOSAL, payload=payload, request_id=request_id)
        entry, _ = self._append(draft)
        return entry

    # -- contracts -----------------------------------------------------------------

    def create_contract(self, caller_id: str, answers: list[str], request_id: str | None = None) -> LearningContract:
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.CONTRACT, owner_actor_id=caller_id))
        validate_create(self.projection.contracts, self.course, caller_id, self.state_now())
        paired = pair_answers(answers)
        check_question_order(paired)
        draft = EntryDraft(
            actor_id=caller_id,
            kind=EntryKind.CONTRACT_REVISION,
            payload={"version": 1, "answers": paired},
            request_id=request_id,
        )
        self._append(draft)
        return self.projection.contracts.of(caller_id)[1]

    def update_contract(
        self,
        caller_id: str,
        answers: list[str],
        evidence_refs: list[int] | None = None,
        request_id: str | None = None,
    ) -> LearningContract:
        """Rejected with StateError while the course runs; creates v2 after close."""
        refs = list(evidence_refs or [])
        self._require(caller_id, Action.WRITE, ResourceRef(ResourceKind.CONTRACT, owner_actor_id=caller_id))
        validate_revision(self.projection.contracts, self.log, caller_id, self.state_now(), refs)
        paired = pair_answers(answers)
        check_question_order(paired)
        draft = EntryDraft(
            actor_id=caller_id,
            kind=EntryKind.CONTRACT_REVISION,
            payload={"version": 2, "answers": paired, "evidence_refs": refs},
            request_id=request_id,
        )
        self._append(draft)
        return self.projection.contracts.of(caller_id)[2]

    def get_contract(self, caller_id: str, holder_id: str) -> dict[int, LearningContract]:
        self.course.require_actor(holder_id)
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.CONTRACT, owner_actor_id=holder_id))
        versions = self.projection.contracts.of(holder_id)
        if not versions:
            raise NotFoundError(f"{holder_id} holds no learning contract")
        return versions

    # -- schedule --------------------------------------------------------------------

    def schedule_listing(self, caller_id: str, group_id: str | None = None) -> list[ScheduleItem]:
        self._require(caller_id, Action.READ, ResourceRef(ResourceKind.SCHEDULE))
        return self.projection.schedule.listing(self.course, group_id)

    def change_schedule(self, caller_id: str, payload: dict, request_id: str | None = None) -> Entry:
        scope_group = payload.get("group_id") if payload.get("scope") == "group" else None
        if scope_group is not None:
            self.course.require_group(scope_group)
            resource = ResourceRef(ResourceKind.SCHEDULE, owner_group_id=scope_group)
        else:
            resource = ResourceRef(ResourceKind.SCHEDULE)
        self._require(caller_id, Action.WRITE, resource)
        draft = EntryDraft(
            actor_id=caller_id,
            kind=EntryKind.SCHEDULE_CHANGE,
            payload=payload,
            group_id=scope_group,
            request_id=request_id,
        )
        entry, _ = self._append(draft)
        return entry

    # -- exports ------------------------------------------------------------------------

    def views_payload(self) -> dict:
        now = self.clock.now()
        groups = {}
        for gid in sorted(self.course.groups):
            view = self._view_unchecked(gid, now)
            groups[gid] = view.to_dict()
        return {"course_id": self.course.id, "as_of": dt_to_iso(now), "groups": groups}

    def export(self, what: str) -> str:
        if what == "log":
            return self.log.export_text()
        if what == "views":
            return canonical_json(self.views_payload()) + "\n"
        if what == "matrix":
            return access.dump_matrix()
        if what == "taxonomy":
            return self.projection.publication.taxonomy.to_outline()
        if what == "forum":
            return self.projection.publication.forum_as_text()
        raise ValidationError(f"unknown export target {what!r}", field="what")


class DataStore:
    """A data directory holding any number of courses plus credentials."""

    def __init__(self, data_dir: Path, clock=None, recover: bool = False):
        self.data_dir = Path(data_dir)
        self.clock = clock or SystemClock()
        self.recover = recover
        self._stores: dict[str, CourseStore] = {}
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / "courses").mkdir(exist_ok=True)
        for course_dir in sorted((self.data_dir / "courses").iterdir()):
            if (course_dir / "course.json").exists():
                store = CourseStore.load(course_dir, clock=self.clock, recover=recover)
                self._stores[store.course.id] = store

    def course_ids(self) -> list[str]:
        return sorted(self._stores)

    def get(self, course_id: str) -> CourseStore:
        store = self._stores.get(course_id)
        if store is None:
            raise NotFoundError(f"unknown course {course_id!r}")
        return store

    def init_course(self, definition: dict) -> CourseStore:
        course_id = definition.get("id")
        if course_id in self._stores:
            raise ValidationError(f"course {course_id!r} already exists", field="id")
        store = CourseStore.initialize(self.data_dir / "courses" / str(course_id), definition, clock=self.clock)
        self._stores[store.course.id] = store
        return store

    def single(self) -> CourseStore:
        if len(self._stores) != 1:
            raise ValidationError(
                f"expected exactly one course in {self.data_dir}, found {len(self._stores)}; pass --course",
                field="course",
            )
        return next(iter(self._stores.values()))

    def find_course_of_group(self, group_id: str) -> CourseStore:
        for store in self._stores.values():
            if group_id in store.course.groups:
                return store
        raise NotFoundError(f"no course contains group {group_id!r}")

    def find_course_of_actor(self, actor_id: str) -> CourseStore:
        for store in self._stores.values():
            if actor_id in store.course.actors:
                return store
        raise NotFoundError(f"no course enrolls actor {actor_id!r}")

    # -- credentials --------------------------------------------------------------

    @property
    def credentials_path(self) -> Path:
        return self.data_dir / "credentials.json"

    def load_credentials(self) -> dict[str, str]:
        if not self.credentials_path.exists():
            return {}
        return json.loads(self.credentials_path.read_text(encoding="utf-8"))

    def provision_credentials(self, course_id: str) -> dict[str, str]:
        """Create (or extend) the local secret map for every enrolled actor."""
        creds = self.load_credentials()
        store = self.get(course_id)
        for actor_id in store.course.actors:
            creds.setdefault(actor_id, secrets.token_urlsafe(16))
        self.credentials_path.write_text(canonical_json(creds) + "\n", encoding="utf-8")
        return creds
