"""Course, actors, roles, phases, groups and competencies.

Everything else in the package references these types. A course is built in
two steps: create_course() materializes the calendar and the competency
referential from a definition document, enroll() installs the roster and
checks the per-group role invariants.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Iterable

from .canon import iso_to_date
from .errors import NotFoundError, StateError, ValidationError

COURSE_SCHEMA_VERSION = 1


class RoleKind(str, Enum):
    STUDENT = "student"
    PROJECT_LEADER = "project_leader"
    TECHNICAL_TUTOR = "technical_tutor"
    MANAGEMENT_TUTOR = "management_tutor"
    TECHNICAL_MANAGER = "technical_manager"
    MANAGEMENT_MANAGER = "management_manager"
    TEACHER = "teacher"
    DIRECTOR = "director"


TUTOR_ROLES = {RoleKind.TECHNICAL_TUTOR, RoleKind.MANAGEMENT_TUTOR}
MANAGER_ROLES = {RoleKind.TECHNICAL_MANAGER, RoleKind.MANAGEMENT_MANAGER}


class TutorRoleTag(str, Enum):
    """Closed taxonomy of the postures a tutor can take toward a group."""

    SOCIAL_CATALYST = "social_catalyst"
    INTELLECTUAL_CATALYST = "intellectual_catalyst"
    INDIVIDUALISER = "individualiser"
    AUTONOMISER = "autonomiser"
    RELATIONAL_COACH = "relational_coach"
    EDUCATIONALIST = "educationalist"
    CONTENT_EXPERT = "content_expert"
    EVALUATOR = "evaluator"
    QUALIMETROR = "qualimetror"


TUTOR_ROLE_TAG_LABELS = {
    TutorRoleTag.SOCIAL_CATALYST: "social catalyst",
    TutorRoleTag.INTELLECTUAL_CATALYST: "intellectual catalyst",
    TutorRoleTag.INDIVIDUALISER: "individualiser",
    TutorRoleTag.AUTONOMISER: "autonomiser",
    TutorRoleTag.RELATIONAL_COACH: "relational coach",
    TutorRoleTag.EDUCATIONALIST: "educationalist",
    TutorRoleTag.CONTENT_EXPERT: "content expert",
    TutorRoleTag.EVALUATOR: "evaluator",
    TutorRoleTag.QUALIMETROR: "qualimetror",
}


class KolbPhase(str, Enum):
    """Experiential-learning phase tags carried as artifact metadata only."""

    CONCRETE_EXPERIENCE = "concrete_experience"
    REFLECTIVE_OBSERVATION = "reflective_observation"
    ABSTRACT_CONCEPTUALISATION = "abstract_conceptualisation"
    ACTIVE_EXPERIMENTATION = "active_experimentation"


class CourseLifecycle(str, Enum):
    SETUP = "setup"
    RUNNING = "running"
    CLOSED = "closed"


class CourseState(str, Enum):
    """Calendar-derived state used to gate writes (see course_state_at)."""

    SETUP = "setup"
    PHASE1 = "phase1"
    PHASE2 = "phase2"
    PHASE3 = "phase3"
    PHASE4 = "phase4"
    CLOSED = "closed"


PHASE_STATES = (CourseState.PHASE1, CourseState.PHASE2, CourseState.PHASE3, CourseState.PHASE4)


@dataclass(frozen=True)
class Competency:
    id: str
    label: str
    kind: str  # "hard" | "soft"


# Referential seeded into every course: the instructional targets of the
# course, four hard and four soft.
SEED_COMPETENCIES = (
    Competency("hard.gantt_planning", "plan the project (Gantt chart)", "hard"),
    Competency("hard.project_management", "project management", "hard"),
    Competency("hard.resource_management", "managing resources", "hard"),
    Competency("hard.quality_control", "controlling quality", "hard"),
    Competency("soft.collaboration_communication", "collaboration and communication", "soft"),
    Competency("soft.empathy", "empathy", "soft"),
    Competency("soft.consideration", "consideration of others", "soft"),
    Competency("soft.leadership", "leadership", "soft"),
)


@dataclass(frozen=True)
class DeliverableTemplate:
    id: str
    label: str
    due_date: date


@dataclass(frozen=True)
class Phase:
    index: int
    label: str
    start_date: date
    end_date: date
    expected_deliverables: tuple[DeliverableTemplate, ...] = ()


@dataclass(frozen=True)
class RoleBinding:
    kind: RoleKind
    group_id: str | None = None  # None for course-scoped roles


@dataclass
class Actor:
    id: str
    display_name: str
    roles: set[RoleBinding] = field(default_factory=set)

    def has_role(self, kind: RoleKind, group_id: str | None = None) -> bool:
        if group_id is None:
            return any(b.kind is kind for b in self.roles)
        return RoleBinding(kind, group_id) in self.roles

    def tutored_groups(self) -> set[str]:
        return {b.group_id for b in self.roles if b.kind in TUTOR_ROLES and b.group_id}

    def student_groups(self) -> set[str]:
        return {b.group_id for b in self.roles if b.kind is RoleKind.STUDENT and b.group_id}

    def is_tutoring_team(self) -> bool:
        return any(
            b.kind in TUTOR_ROLES or b.kind in MANAGER_ROLES or b.kind in (RoleKind.TEACHER, RoleKind.DIRECTOR)
            for b in self.roles
        )


@dataclass
class ProjectGroup:
    id: str
    course_id: str
    name: str
    member_ids: list[str]
    leader_id: str
    technical_tutor_id: str
    management_tutor_id: str
    client_label: str = ""

    @property
    def tutor_ids(self) -> tuple[str, str]:
        return (self.technical_tutor_id, self.management_tutor_id)


@dataclass
class Course:
    id: str
    name: str
    start_date: date
    end_date: date
    phases: tuple[Phase, ...]
    lifecycle: CourseLifecycle = CourseLifecycle.SETUP
    closed_at: datetime | None = None
    closing_presentation_date: date | None = None
    tutor_contracts_enabled: bool = False
    competencies: dict[str, Competency] = field(default_factory=dict)
    actors: dict[str, Actor] = field(default_factory=dict)
    groups: dict[str, ProjectGroup] = field(default_factory=dict)

    def group_of_student(self, actor_id: str) -> ProjectGroup | None:
        actor = self.actors.get(actor_id)
        if actor is None:
            return None
        for gid in actor.student_groups():
            group = self.groups.get(gid)
            if group:
                return group
        return None

    def require_group(self, group_id: str) -> ProjectGroup:
        group = self.groups.get(group_id)
        if group is None:
            raise NotFoundError(f"unknown group {group_id!r}")
        return group

    def require_actor(self, actor_id: str) -> Actor:
        actor = self.actors.get(actor_id)
        if actor is None:
            raise NotFoundError(f"unknown actor {actor_id!r}")
        return actor

    def deliverables(self) -> list[DeliverableTemplate]:
        out: list[DeliverableTemplate] = []
        for phase in self.phases:
            out.extend(phase.expected_deliverables)
        return out


def create_course(definition: dict) -> Course:
    """Materialize a Course from a definition document.

    The document is the on-disk schema (schema_version 1): dates as ISO
    strings, exactly four phase definitions covering [start_date, end_date]
    contiguously. The competency referential is seeded here.
    """
    if not isinstance(definition, dict):
        raise ValidationError("course definition must be an object", field="definition")
    version = definition.get("schema_version")
    if version != COURSE_SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported schema_version {version!r} (expected {COURSE_SCHEMA_VERSION})",
            field="schema_version",
        )
    course_id = definition.get("id")
    if not course_id or not isinstance(course_id, str):
        raise ValidationError("course id is required", field="id")
    name = definition.get("name") or course_id
    start = iso_to_date(definition.get("start_date"), field="start_date")
    end = iso_to_date(definition.get("end_date"), field="end_date")
    if start >= end:
        raise ValidationError("start_date must precede end_date", field="start_date")

    raw_phases = definition.get("phases")
    if not isinstance(raw_phases, list) or len(raw_phases) != 4:
        raise ValidationError("exactly 4 phases are required", field="phases")

    phases: list[Phase] = []
    for position, raw in enumerate(raw_phases, start=1):
        if not isinstance(raw, dict):
            raise ValidationError(f"phase {position} must be an object", field=f"phases[{position}]")
        index = raw.get("index")
        if index != position:
            raise ValidationError(
                f"phase at position {position} has index {index!r}; phases must be ordered 1..4",
                field=f"phases[{position}].index",
            )
        p_start = iso_to_date(raw.get("start_date"), field=f"phases[{position}].start_date")
        p_end = iso_to_date(raw.get("end_date"), field=f"phases[{position}].end_date")
        if p_start >= p_end:
            raise ValidationError(
                f"phase {position} start must precede its end", field=f"phases[{position}].start_date"
            )
        deliverables = []
        for d in raw.get("deliverables", []):
            deliverables.append(
                DeliverableTemplate(
                    id=_require_str(d, "id", f"phases[{position}].deliverables"),
                    label=_require_str(d, "label", f"phases[{position}].deliverables"),
                    due_date=iso_to_date(d.get("due_date"), field=f"phases[{position}].deliverables.due_date"),
                )
            )
        phases.append(
            Phase(
                index=position,
                label=raw.get("label", f"phase {position}"),
                start_date=p_start,
                end_date=p_end,
                expected_deliverables=tuple(deliverables),
            )
        )

    # Phases must tile the course interval: no gaps, no overlaps.
    if phases[0].start_date != start:
        raise ValidationError("phase 1 must start on the course start_date", field="phases[1].start_date")
    if phases[-1].end_date != end:
        raise ValidationError("phase 4 must end on the course end_date", field="phases[4].end_date")
    for prev, nxt in zip(phases, phases[1:]):
        if nxt.start_date <= prev.end_date:
            raise ValidationError(
                f"phase {nxt.index} overlaps phase {prev.index}", field=f"phases[{nxt.index}].start_date"
            )
        if nxt.start_date != prev.end_date + timedelta(days=1):
            raise ValidationError(
                f"gap between phase {prev.index} and phase {nxt.index}",
                field=f"phases[{nxt.index}].start_date",
            )

    dupes = _duplicate_ids(d.id for p in phases for d in p.expected_deliverables)
    if dupes:
        raise ValidationError(f"duplicate deliverable ids: {sorted(dupes)}", field="phases.deliverables")

    closing = definition.get("closing_presentation_date")
    course = Course(
        id=course_id,
        name=name,
        start_date=start,
        end_date=end,
        phases=tuple(phases),
        closing_presentation_date=iso_to_date(closing, field="closing_presentation_date") if closing else None,
        tutor_contracts_enabled=bool(definition.get("tutor_contracts", False)),
        competencies={c.id: c for c in SEED_COMPETENCIES},
    )
    return course


def _require_str(obj: dict, key: str, context: str) -> str:
    value = obj.get(key)
    if not value or not isinstance(value, str):
        raise ValidationError(f"{context}.{key} is required", field=f"{context}.{key}")
    return value


def _duplicate_ids(ids: Iterable[str]) -> set[str]:
    seen: set[str] = set()
    dupes: set[str] = set()
    for i in ids:
        if i in seen:
            dupes.add(i)
        seen.add(i)
    return dupes


@dataclass(frozen=True)
class RosterRow:
    actor_id: str
    display_name: str
    role: RoleKind
    group_id: str | None


def parse_roster_rows(text: str) -> list[RosterRow]:
    """Parse the delimiter-separated roster format: id, name, role, group.

    A header row naming those columns is accepted and skipped. The group
    column is empty for course-scoped roles.
    """
    rows: list[RosterRow] = []
    reader = csv.reader(io.StringIO(text))
    for lineno, raw in enumerate(reader, start=1):
        if not raw or all(not cell.strip() for cell in raw):
            continue
        cells = [cell.strip() for cell in raw]
        if lineno == 1 and cells[0].lower() in ("id", "actor_id"):
            continue
        if len(cells) < 3:
            raise ValidationError(f"roster line {lineno}: expected id,name,role[,group]", field="roster")
        actor_id, name, role_raw = cells[0], cells[1], cells[2]
        group = cells[3] if len(cells) > 3 and cells[3] else None
        try:
            role = RoleKind(role_raw)
        except ValueError:
            raise ValidationError(f"roster line {lineno}: unknown role {role_raw!r}", field="roster.role")
        if not actor_id:
            raise ValidationError(f"roster line {lineno}: empty actor id", field="roster.id")
        rows.append(RosterRow(actor_id, name or actor_id, role, group))
    return rows


def enroll(course: Course, roster: list[RosterRow]) -> Course:
    """Install the roster onto a course in setup and transition it to running.

    A project_leader row implies a student binding in the same group. Group
    invariants checked here: exactly one leader and one tutor of each kind
    per group, leader among the members, at least two members.
    """
    if course.lifecycle is not CourseLifecycle.SETUP:
        raise StateError(f"course {course.id} is {course.lifecycle.value}; roster changes need setup")

    actors: dict[str, Actor] = {}
    group_students: dict[str, list[str]] = {}
    group_leaders: dict[str, list[str]] = {}
    group_tutors: dict[str, dict[RoleKind, list[str]]] = {}

    def actor_for(row: RosterRow) -> Actor:
        actor = actors.get(row.actor_id)
        if actor is None:
            actor = Actor(id=row.actor_id, display_name=row.display_name)
            actors[row.actor_id] = actor
        return actor

    for row in roster:
        actor = actor_for(row)
        if row.role in (RoleKind.STUDENT, RoleKind.PROJECT_LEADER) or row.role in TUTOR_ROLES:
            if not row.group_id:
                raise ValidationError(
                    f"{row.role.value} binding for {row.actor_id} requires a group", field="roster.group"
                )
        if row.role is RoleKind.STUDENT:
            actor.roles.add(RoleBinding(RoleKind.STUDENT, row.group_id))
            members = group_students.setdefault(row.group_id, [])
            if row.actor_id not in members:
                members.append(row.actor_id)
        elif row.role is RoleKind.PROJECT_LEADER:
            actor.roles.add(RoleBinding(RoleKind.PROJECT_LEADER, row.group_id))
            actor.roles.add(RoleBinding(RoleKind.STUDENT, row.group_id))
            members = group_students.setdefault(row.group_id, [])
            if row.actor_id not in members:
                members.append(row.actor_id)
            group_leaders.setdefault(row.group_id, []).append(row.actor_id)
        elif row.role in TUTOR_ROLES:
            actor.roles.add(RoleBinding(row.role, row.group_id))
            group_tutors.setdefault(row.group_id, {}).setdefault(row.role, []).append(row.actor_id)
        else:
            actor.roles.add(RoleBinding(row.role, None))

    group_ids = sorted(set(group_students) | set(group_tutors) | set(group_leaders))
    groups: dict[str, ProjectGroup] = {}
    for gid in group_ids:
        members = group_students.get(gid, [])
        leaders = group_leaders.get(gid, [])
        tutors = group_tutors.get(gid, {})
        technical = tutors.get(RoleKind.TECHNICAL_TUTOR, [])
        management = tutors.get(RoleKind.MANAGEMENT_TUTOR, [])
        if len(leaders) != 1:
            raise ValidationError(f"group {gid} must have exactly one leader, has {len(leaders)}", field="roster")
        if len(technical) != 1 or len(management) != 1:
            raise ValidationError(
                f"group {gid} must have exactly one technical and one management tutor",
                field="roster",
            )
        if len(members) < 2:
            raise ValidationError(f"group {gid} needs at least 2 members, has {len(members)}", field="roster")
        leader = leaders[0]
        if leader not in members:
            raise ValidationError(f"group {gid} leader {leader} is not a member", field="roster")
        groups[gid] = ProjectGroup(
            id=gid,
            course_id=course.id,
            name=gid,
            member_ids=members,
            leader_id=leader,
            technical_tutor_id=technical[0],
            management_tutor_id=management[0],
        )

    course.actors = actors
    course.groups = groups
    course.lifecycle = CourseLifecycle.RUNNING
    return course


def close_course(course: Course, at: datetime) -> Course:
    if course.lifecycle is CourseLifecycle.CLOSED:
        raise StateError(f"course {course.id} already closed")
    course.lifecycle = CourseLifecycle.CLOSED
    course.closed_at = at
    return course


def course_state_at(course: Course, at: datetime | date) -> CourseState:
    """Calendar state of the course at a given moment.

    Pure in (course calendar, explicit close action, at). Monotone
    non-decreasing in `at` for a fixed course history.
    """
    when_date = at.date() if isinstance(at, datetime) else at
    if course.closed_at is not None:
        if isinstance(at, datetime):
            if at >= course.closed_at:
                return CourseState.CLOSED
        elif when_date >= course.closed_at.date():
            return CourseState.CLOSED
    if when_date < course.start_date:
        return CourseState.SETUP
    for phase, state in zip(course.phases, PHASE_STATES):
        if phase.start_date <= when_date <= phase.end_date:
            return state
    # Past the calendar without an explicit close: still winding down phase 4.
    return CourseState.PHASE4
