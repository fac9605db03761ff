"""Group project dashboard: tasks, working time, mood, deliverable delays.

Data flows student-proposed -> leader-confirmed: proposals sit pending (they
never touch the numeric view), a leader confirmation batch applies them
atomically in seq order. Confirmed effects become visible at the
confirmation entry's timestamp, so compute_view(t) is a pure function of the
entries with at <= t plus the deliverable calendar.

Timing conventions for window queries, pinned here for the indicator layer:
time logs are windowed by their actor-asserted occurred_on date, moods by
their own entry timestamp, task updates and completions by the confirmation
timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

from .canon import dt_to_iso, iso_to_date
from .domain import Course, ProjectGroup
from .errors import NotFoundError, ValidationError
from .events import Entry, EntryKind

MOOD_WINDOW_DAYS = 14

PROPOSABLE_KINDS = {
    EntryKind.TIME_LOG,
    EntryKind.TASK_UPDATE,
    EntryKind.MOOD_ENTRY,
    EntryKind.DELIVERABLE_SUBMISSION,
}


@dataclass
class TaskState:
    id: str
    group_id: str
    title: str
    assignee_ids: set[str]
    planned_start: date
    planned_end: date
    effort_estimate: float
    depends_on: set[str]
    assigned_by_leader: bool
    pct_complete: int = 0
    created_at: datetime | None = None
    completed_at: datetime | None = None  # latest confirmed transition to 100
    last_confirmed_update_at: datetime | None = None


@dataclass(frozen=True)
class ConfirmedTimeLog:
    seq: int
    actor_id: str
    hours: float
    occurred_on: date
    task_id: str | None
    confirmed_at: datetime


@dataclass(frozen=True)
class ConfirmedMood:
    seq: int
    actor_id: str
    at: datetime
    motivation: int
    satisfaction: int
    client_relationship: int


@dataclass(frozen=True)
class ConfirmationRecord:
    seq: int
    at: datetime
    leader_id: str
    confirmed_seqs: tuple[int, ...]


@dataclass(frozen=True)
class DeliverableStatus:
    deliverable_id: str
    due_date: date
    submitted_on: date | None
    delay_days: int

    def to_dict(self) -> dict:
        return {
            "deliverable_id": self.deliverable_id,
            "due_date": self.due_date.isoformat(),
            "submitted_on": self.submitted_on.isoformat() if self.submitted_on else None,
            "delay_days": self.delay_days,
        }


@dataclass(frozen=True)
class ProjectDashboardView:
    group_id: str
    as_of: datetime
    gantt_progress_pct: float
    working_time_by_member: dict[str, float]
    frame_of_mind: dict[str, float | None]
    deliverables: tuple[DeliverableStatus, ...]
    pending_confirmations: int

    def to_dict(self) -> dict:
        return {
            "group_id": self.group_id,
            "as_of": dt_to_iso(self.as_of),
            "gantt_progress_pct": self.gantt_progress_pct,
            "working_time_by_member": dict(sorted(self.working_time_by_member.items())),
            "frame_of_mind": dict(sorted(self.frame_of_mind.items())),
            "deliverables": [d.to_dict() for d in sorted(self.deliverables, key=lambda d: d.deliverable_id)],
            "pending_confirmations": self.pending_confirmations,
        }


class GroupDashboard:
    """Projection of one group's dashboard; feed entries in seq order."""

    def __init__(self, group: ProjectGroup):
        self.group = group
        self.pending: dict[int, Entry] = {}
        self.tasks: dict[str, TaskState] = {}
        self.time_logs: list[ConfirmedTimeLog] = []
        self.moods: list[ConfirmedMood] = []
        self.submissions: dict[str, date] = {}  # first confirmed submission wins
        self.confirmations: list[ConfirmationRecord] = []
        self.confirmed_seqs: set[int] = set()

    # -- feeding the projection --

    def applies(self, entry: Entry) -> bool:
        if entry.group_id != self.group.id:
            return False
        if entry.kind in PROPOSABLE_KINDS:
            return True
        return entry.kind is EntryKind.LEADER_CONFIRMATION and entry.payload.get("scope") == "dashboard"

    def apply(self, entry: Entry) -> None:
        if not self.applies(entry):
            return
        if entry.is_tombstone():
            self.pending.pop(entry.payload["tombstone_of"], None)
            return
        if entry.kind in PROPOSABLE_KINDS:
            self.pending[entry.seq] = entry
            return
        # leader confirmation batch: effects land at the confirmation time
        seqs = sorted(entry.payload["confirmed_seqs"])
        for seq in seqs:
            proposal = self.pending.pop(seq, None)
            if proposal is None:
                raise ValidationError(f"confirmation references seq {seq} which is not pending", field="confirmed_seqs")
            self._apply_confirmed(proposal, entry.at)
            self.confirmed_seqs.add(seq)
        self.confirmations.append(
            ConfirmationRecord(entry.seq, entry.at, entry.actor_id, tuple(seqs))
        )

    def _apply_confirmed(self, proposal: Entry, confirmed_at: datetime) -> None:
        payload = proposal.payload
        if proposal.kind is EntryKind.TIME_LOG:
            self.time_logs.append(
                ConfirmedTimeLog(
                    seq=proposal.seq,
                    actor_id=proposal.actor_id,
                    hours=float(payload["hours"]),
                    occurred_on=iso_to_date(payload["occurred_on"]),
                    task_id=payload.get("task_id"),
                    confirmed_at=confirmed_at,
                )
            )
        elif proposal.kind is EntryKind.MOOD_ENTRY:
            self.moods.append(
                ConfirmedMood(
                    seq=proposal.seq,
                    actor_id=proposal.actor_id,
                    at=proposal.at,
                    motivation=payload["motivation"],
                    satisfaction=payload["satisfaction"],
                    client_relationship=payload["client_relationship"],
                )
            )
        elif proposal.kind is EntryKind.DELIVERABLE_SUBMISSION:
            self.submissions.setdefault(payload["deliverable_id"], iso_to_date(payload["submitted_on"]))
        elif proposal.kind is EntryKind.TASK_UPDATE:
            self._apply_task_update(proposal, confirmed_at)

    def _apply_task_update(self, proposal: Entry, confirmed_at: datetime) -> None:
        payload = proposal.payload
        task_id = payload["task_id"]
        if payload["op"] == "create":
            if task_id in self.tasks:
                raise ValidationError(f"task {task_id} already exists", field="task_id")
            task = TaskState(
                id=task_id,
                group_id=self.group.id,
                title=payload["title"],
                assignee_ids=set(payload.get("assignee_ids") or []),
                planned_start=iso_to_date(payload["planned_start"]),
                planned_end=iso_to_date(payload["planned_end"]),
                effort_estimate=float(payload["effort_estimate"]),
                depends_on=set(payload.get("depends_on") or []),
                assigned_by_leader=proposal.actor_id == self.group.leader_id,
                pct_complete=int(payload.get("pct_complete", 0)),
                created_at=confirmed_at,
                last_confirmed_update_at=confirmed_at,
            )
            self._check_dependencies(task_id, task.depends_on, creating=task)
            self.tasks[task_id] = task
            if task.pct_complete == 100:
                task.completed_at = confirmed_at
            return

        task = self.tasks.get(task_id)
        if task is None:
            raise ValidationError(f"update references unknown task {task_id}", field="task_id")
        if "pct_complete" in payload:
            new_pct = int(payload["pct_complete"])
            correction = bool(payload.get("correction")) and proposal.actor_id == self.group.leader_id
            if new_pct < task.pct_complete and not correction:
                raise ValidationError(
                    f"task {task_id} progress may not drop {task.pct_complete}->{new_pct} without a leader correction",
                    field="pct_complete",
                )
            was_complete = task.pct_complete == 100
            task.pct_complete = new_pct
            if new_pct == 100 and not was_complete:
                task.completed_at = confirmed_at
            elif new_pct < 100 and was_complete:
                task.completed_at = None
        if "title" in payload:
            task.title = payload["title"]
        if "planned_start" in payload:
            task.planned_start = iso_to_date(payload["planned_start"])
        if "planned_end" in payload:
            task.planned_end = iso_to_date(payload["planned_end"])
        if "effort_estimate" in payload:
            task.effort_estimate = float(payload["effort_estimate"])
        if "assignee_ids" in payload and payload["assignee_ids"] is not None:
            task.assignee_ids = set(payload["assignee_ids"])
        if "depends_on" in payload and payload["depends_on"] is not None:
            new_deps = set(payload["depends_on"])
            self._check_dependencies(task_id, new_deps)
            task.depends_on = new_deps
        task.last_confirmed_update_at = confirmed_at

    def _check_dependencies(self, task_id: str, deps: set[str], creating: TaskState | None = None) -> None:
        known = set(self.tasks)
        if creating is not None:
            known.add(task_id)
        missing = deps - known
        if missing:
            raise ValidationError(f"task {task_id} depends on unknown tasks {sorted(missing)}", field="depends_on")
        if task_id in deps:
            raise ValidationError(f"task {task_id} cannot depend on itself", field="depends_on")
        # finish-to-start edges must stay acyclic
        graph = {tid: set(t.depends_on) for tid, t in self.tasks.items()}
        graph[task_id] = set(deps)
        if _has_cycle(graph):
            raise ValidationError(f"dependencies of task {task_id} introduce a cycle", field="depends_on")

    # -- queries --

    def compute_view(self, course: Course, as_of: datetime) -> ProjectDashboardView:
        total_effort = sum(t.effort_estimate for t in self.tasks.values())
        if total_effort > 0:
            gantt = sum(t.pct_complete * t.effort_estimate for t in self.tasks.values()) / total_effort
        else:
            gantt = 0.0

        working_time = {member: 0.0 for member in self.group.member_ids}
        for log in self.time_logs:
            working_time[log.actor_id] = working_time.get(log.actor_id, 0.0) + log.hours

        window_start = as_of - timedelta(days=MOOD_WINDOW_DAYS)
        latest_mood: dict[str, ConfirmedMood] = {}
        for mood in self.moods:
            if window_start < mood.at <= as_of:
                held = latest_mood.get(mood.actor_id)
                if held is None or (mood.at, mood.seq) > (held.at, held.seq):
                    latest_mood[mood.actor_id] = mood
        if latest_mood:
            n = len(latest_mood)
            frame = {
                "motivation": sum(m.motivation for m in latest_mood.values()) / n,
                "satisfaction": sum(m.satisfaction for m in latest_mood.values()) / n,
                "client_relationship": sum(m.client_relationship for m in latest_mood.values()) / n,
            }
        else:
            frame = {"motivation": None, "satisfaction": None, "client_relationship": None}

        statuses = []
        for template in course.deliverables():
            submitted = self.submissions.get(template.id)
            reference = submitted if submitted is not None else as_of.date()
            delay = max(0, (reference - template.due_date).days)
            statuses.append(DeliverableStatus(template.id, template.due_date, submitted, delay))

        return ProjectDashboardView(
            group_id=self.group.id,
            as_of=as_of,
            gantt_progress_pct=gantt,
            working_time_by_member=working_time,
            frame_of_mind=frame,
            deliverables=tuple(statuses),
            pending_confirmations=len(self.pending),
        )

    def gantt_rows(self) -> list[tuple[str, date, date, int, tuple[str, ...]]]:
        """Export shape: (task, start, end, pct, depends_on)."""
        rows = []
        for task in sorted(self.tasks.values(), key=lambda t: (t.planned_start, t.id)):
            rows.append((task.id, task.planned_start, task.planned_end, task.pct_complete, tuple(sorted(task.depends_on))))
        return rows


def _has_cycle(graph: dict[str, set[str]]) -> bool:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {node: WHITE for node in graph}

    def visit(node: str) -> bool:
        color[node] = GREY
        for dep in graph.get(node, ()):
            if dep not in color:
                continue
            if color[dep] == GREY:
                return True
            if color[dep] == WHITE and visit(dep):
                return True
        color[node] = BLACK
        return False

    return any(color[node] == WHITE and visit(node) for node in graph)


# --- validation ahead of append --------------------------------------------

def validate_proposal(course: Course, group: ProjectGroup, actor_id: str, kind: EntryKind, payload: dict) -> None:
    """Semantic checks for a dashboard proposal (schema checks live in events)."""
    if kind not in PROPOSABLE_KINDS:
        raise ValidationError(f"kind {kind.value} is not a dashboard proposal", field="kind")
    if actor_id not in group.member_ids:
        raise ValidationError(f"{actor_id} is not a member of group {group.id}", field="actor_id")
    if kind is EntryKind.TIME_LOG and "tombstone_of" not in payload:
        occurred = iso_to_date(payload["occurred_on"], field="occurred_on")
        if not course.start_date <= occurred <= course.end_date:
            raise ValidationError(
                f"occurred_on {occurred.isoformat()} outside course dates", field="occurred_on"
            )
    if kind is EntryKind.DELIVERABLE_SUBMISSION:
        known = {d.id for d in course.deliverables()}
        if payload["deliverable_id"] not in known:
            raise NotFoundError(f"unknown deliverable {payload['deliverable_id']!r}")


def validate_confirmation(state: GroupDashboard, leader_id: str, seqs: list[int]) -> None:
    """Reject a confirmation batch unless every seq applies cleanly.

    Batches are atomic: semantic conflicts (unknown task, decreasing pct
    without correction, duplicate create, dependency cycle) reject the whole
    batch before anything is appended.
    """
    if not seqs:
        raise ValidationError("nothing to confirm", field="confirmed_seqs")
    if len(set(seqs)) != len(seqs):
        raise ValidationError("duplicate seqs in confirmation", field="confirmed_seqs")
    for seq in seqs:
        if seq in state.confirmed_seqs:
            raise ValidationError(f"seq {seq} is already confirmed", field="confirmed_seqs")
        if seq not in state.pending:
            raise ValidationError(f"seq {seq} is not a pending proposal of group {state.group.id}", field="confirmed_seqs")
    # dry-run the batch on a scratch copy to surface task-semantic conflicts
    scratch = GroupDashboard(state.group)
    scratch.tasks = {
        tid: TaskState(
            id=t.id,
            group_id=t.group_id,
            title=t.title,
            assignee_ids=set(t.assignee_ids),
            planned_start=t.planned_start,
            planned_end=t.planned_end,
            effort_estimate=t.effort_estimate,
            depends_on=set(t.depends_on),
            assigned_by_leader=t.assigned_by_leader,
            pct_complete=t.pct_complete,
            created_at=t.created_at,
            completed_at=t.completed_at,
            last_confirmed_update_at=t.last_confirmed_update_at,
        )
        for tid, t in state.tasks.items()
    }
    probe_time = datetime.now().astimezone()
    for seq in sorted(seqs):
        proposal = state.pending[seq]
        scratch._apply_confirmed(proposal, probe_time)
