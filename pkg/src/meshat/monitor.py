"""Tutor-facing monitoring: teamwork indicators, activity summaries, notes.

Six per-group indicator scores over a time window, each in [0,1] or null
exactly when its denominator is zero:

  team_orientation   1 - Gini of confirmed working-time shares across members
  team_leadership    share of window-active tasks assigned by the leader
  monitoring         share of open tasks with a confirmed update in window
  feedback           min(1, (tutor notes + leader confirmations) / members)
  backup             share of tasks completed in window worked by >= 2 members
  coordination       on-time submissions / deliverables due in window

Communication is deliberately not scored. Windowing conventions follow the
dashboard module: time logs by occurred_on, task effects by confirmation
time, notes and confirmations by their own timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

from .canon import dt_to_iso
from .dashboard import GroupDashboard
from .domain import Course, ProjectGroup
from .errors import AuthorizationError, NotFoundError, ValidationError
from .events import Entry, EntryKind

INDICATOR_KEYS = ("TO", "TL", "MO", "FE", "BA", "CO")


def gini(values: list[float]) -> float:
    """Gini inequality of non-negative values; 0 when all equal.

    Sorted rank formulation; callers guarantee a strictly positive total.
    """
    n = len(values)
    if n == 0:
        raise ValueError("gini of empty population")
    total = sum(values)
    if total <= 0:
        raise ValueError("gini requires a positive total")
    ordered = sorted(values)
    weighted = sum((2 * rank - n - 1) * x for rank, x in enumerate(ordered, start=1))
    return max(0.0, weighted / (n * total))


@dataclass(frozen=True)
class TeamworkIndicators:
    group_id: str
    window_from: datetime
    window_to: datetime
    TO: float | None
    TL: float | None
    MO: float | None
    FE: float | None
    BA: float | None
    CO: float | None

    def scores(self) -> dict[str, float | None]:
        return {key: getattr(self, key) for key in INDICATOR_KEYS}

    def to_dict(self) -> dict:
        out = {
            "group_id": self.group_id,
            "window_from": dt_to_iso(self.window_from),
            "window_to": dt_to_iso(self.window_to),
        }
        out.update(self.scores())
        return out

    def to_row(self) -> list[str]:
        """Export row (group, window_end, six scores); nulls as empty fields."""
        cells = [self.group_id, dt_to_iso(self.window_to)]
        for key in INDICATOR_KEYS:
            value = getattr(self, key)
            cells.append("" if value is None else f"{value:.6f}")
        return cells


@dataclass(frozen=True)
class TutorNote:
    seq: int
    tutor_id: str
    at: datetime
    scope_kind: str  # "group" | "student"
    scope_id: str
    text: str
    tutor_role_tag: str | None


@dataclass(frozen=True)
class AssessmentRecord:
    seq: int
    tutor_id: str
    student_id: str
    at: datetime
    ratings: dict[str, int]
    comment: str


class GroupMonitor:
    """Per-group projection of tutor notes and assessments."""

    def __init__(self, group: ProjectGroup):
        self.group = group
        self.notes: list[TutorNote] = []
        self.assessments: list[AssessmentRecord] = []

    def applies(self, entry: Entry) -> bool:
        return entry.group_id == self.group.id and entry.kind in (EntryKind.TUTOR_NOTE, EntryKind.ASSESSMENT)

    def apply(self, entry: Entry) -> None:
        if not self.applies(entry):
            return
        payload = entry.payload
        if entry.kind is EntryKind.TUTOR_NOTE:
            self.notes.append(
                TutorNote(
                    seq=entry.seq,
                    tutor_id=entry.actor_id,
                    at=entry.at,
                    scope_kind=payload["scope_kind"],
                    scope_id=payload["scope_id"],
                    text=payload["text"],
                    tutor_role_tag=payload.get("tutor_role_tag"),
                )
            )
        else:
            self.assessments.append(
                AssessmentRecord(
                    seq=entry.seq,
                    tutor_id=entry.actor_id,
                    student_id=payload["student_id"],
                    at=entry.at,
                    ratings=dict(payload["ratings"]),
                    comment=payload.get("comment", ""),
                )
            )


def compute_indicators(
    course: Course,
    dashboard: GroupDashboard,
    monitor: GroupMonitor,
    window_from: datetime,
    window_to: datetime,
) -> TeamworkIndicators:
    """Fold the six scores from projection state AS OF window_to.

    Callers hand in state that contains no effects later than window_to (the
    live projection when window_to is now, a bounded replay fold otherwise);
    task attributes are read as current under that contract.
    """
    if window_from >= window_to:
        raise ValidationError("window start must precede window end", field="window")
    group = dashboard.group
    members = group.member_ids

    # TO: working-time balance. Members without logs count as zeros.
    hours = {m: 0.0 for m in members}
    for log in dashboard.time_logs:
        day = log.occurred_on
        if window_from.date() <= day <= window_to.date() and log.actor_id in hours:
            hours[log.actor_id] += log.hours
    total_hours = sum(hours.values())
    TO = None if total_hours <= 0 else 1.0 - gini(list(hours.values()))

    # Tasks as of the window end (confirmed effects only).
    tasks = [t for t in dashboard.tasks.values() if t.created_at is not None and t.created_at <= window_to]

    # TL: leader-assigned share of tasks whose plan overlaps the window.
    active = [
        t for t in tasks
        if t.planned_start <= window_to.date() and t.planned_end >= window_from.date()
    ]
    TL = None if not active else sum(1 for t in active if t.assigned_by_leader) / len(active)

    # MO: open tasks with a confirmed update inside the window.
    open_tasks = [t for t in tasks if not (t.completed_at is not None and t.completed_at <= window_to)]
    if open_tasks:
        monitored = sum(
            1
            for t in open_tasks
            if t.last_confirmed_update_at is not None and window_from <= t.last_confirmed_update_at <= window_to
        )
        MO = monitored / len(open_tasks)
    else:
        MO = None

    # FE: tutor notes plus leader confirmation batches, per member.
    if members:
        notes_in_window = sum(1 for n in monitor.notes if window_from <= n.at <= window_to)
        confirmations_in_window = sum(1 for c in dashboard.confirmations if window_from <= c.at <= window_to)
        FE = min(1.0, (notes_in_window + confirmations_in_window) / len(members))
    else:
        FE = None

    # BA: completed-in-window tasks backed by at least two distinct workers.
    completed = [t for t in tasks if t.completed_at is not None and window_from <= t.completed_at <= window_to]
    if completed:
        backed = 0
        for t in completed:
            workers = {
                log.actor_id
                for log in dashboard.time_logs
                if log.task_id == t.id and log.confirmed_at <= window_to
            }
            if len(workers) >= 2:
                backed += 1
        BA = backed / len(completed)
    else:
        BA = None

    # CO: on-time submissions among deliverables falling due in the window.
    due = [d for d in course.deliverables() if window_from.date() <= d.due_date <= window_to.date()]
    if due:
        on_time = 0
        for template in due:
            submitted = dashboard.submissions.get(template.id)
            if submitted is not None and submitted <= template.due_date:
                on_time += 1
        CO = on_time / len(due)
    else:
        CO = None

    return TeamworkIndicators(
        group_id=group.id,
        window_from=window_from,
        window_to=window_to,
        TO=TO,
        TL=TL,
        MO=MO,
        FE=FE,
        BA=BA,
        CO=CO,
    )


@dataclass(frozen=True)
class ActivitySummary:
    actor_id: str
    window_from: datetime
    window_to: datetime
    counts_by_kind: dict[str, int]
    hours_total: float
    last_active: datetime | None

    def to_dict(self) -> dict:
        return {
            "actor_id": self.actor_id,
            "window_from": dt_to_iso(self.window_from),
            "window_to": dt_to_iso(self.window_to),
            "counts_by_kind": dict(sorted(self.counts_by_kind.items())),
            "hours_total": self.hours_total,
            "last_active": dt_to_iso(self.last_active) if self.last_active else None,
        }


def student_activity(entries: list[Entry], actor_id: str, window_from: datetime, window_to: datetime) -> ActivitySummary:
    """Counts and sums per kind over the subject's entries in the window."""
    if window_from >= window_to:
        raise ValidationError("window start must precede window end", field="window")
    counts: dict[str, int] = {}
    hours = 0.0
    last_active: datetime | None = None
    for entry in entries:
        if entry.actor_id != actor_id or not window_from <= entry.at <= window_to:
            continue
        counts[entry.kind.value] = counts.get(entry.kind.value, 0) + 1
        if entry.kind is EntryKind.TIME_LOG and not entry.is_tombstone():
            hours += float(entry.payload["hours"])
        if last_active is None or entry.at > last_active:
            last_active = entry.at
    return ActivitySummary(actor_id, window_from, window_to, counts, hours, last_active)


def validate_note(course: Course, tutor_id: str, payload: dict) -> str:
    """Scope checks for a tutor note; returns the group id the note lands in."""
    tutor = course.require_actor(tutor_id)
    scope_kind, scope_id = payload["scope_kind"], payload["scope_id"]
    if scope_kind == "group":
        group = course.require_group(scope_id)
    else:
        group = course.group_of_student(scope_id)
        if group is None:
            raise NotFoundError(f"student {scope_id!r} belongs to no group")
    if group.id not in tutor.tutored_groups():
        raise AuthorizationError(
            f"note scope {scope_id!r} is outside {tutor_id}'s assigned groups",
            rule_id="tutors-write-monitor-notes",
        )
    return group.id


def validate_assessment(course: Course, tutor_id: str, payload: dict) -> str:
    """Scope and referential checks for an assessment; returns the group id."""
    tutor = course.require_actor(tutor_id)
    student_id = payload["student_id"]
    group = course.group_of_student(student_id)
    if group is None:
        raise NotFoundError(f"student {student_id!r} belongs to no group")
    if group.id not in tutor.tutored_groups():
        raise AuthorizationError(
            f"{tutor_id} does not tutor {student_id}'s group", rule_id="tutors-record-assessments"
        )
    for cid in payload["ratings"]:
        if cid not in course.competencies:
            raise NotFoundError(f"unknown competency {cid!r}")
    return group.id
