"""Role-relation permission matrix consulted before every read and write.

The matrix is total: every (relation, resource kind, action, course state)
tuple has exactly one decision, materialized from an ordered rule list and
dumpable as a stable delimiter-separated table for golden-file diffing.

authorize() grants a request iff ANY relation the caller holds toward the
resource is allowed; a denial names the rule row that blocked the most
specific relation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .domain import (
    Actor,
    Course,
    CourseState,
    MANAGER_ROLES,
    RoleKind,
)
from .errors import AuthorizationError, ValidationError


class Relation(str, Enum):
    SELF = "self"
    GROUP_LEADER = "group_leader"
    GROUP_MEMBER = "group_member"
    ASSIGNED_TUTOR = "assigned_tutor"
    OTHER_TUTOR = "other_tutor"
    MANAGER = "manager"
    TEACHER = "teacher"
    DIRECTOR = "director"
    OTHER_STUDENT = "other_student"


class ResourceKind(str, Enum):
    STUDENT_DASHBOARD = "student_dashboard"
    GROUP_DASHBOARD = "group_dashboard"
    TUTOR_DASHBOARD = "tutor_dashboard"
    STUDENT_BLOG = "student_blog"
    GROUP_BLOG = "group_blog"
    FORUM = "forum"
    TAXONOMY = "taxonomy"
    CONTRACT = "contract"
    SCHEDULE = "schedule"
    ASSESSMENT = "assessment"
    ACTIVITY_SUMMARY = "activity_summary"


class Action(str, Enum):
    READ = "read"
    WRITE = "write"
    CONFIRM = "confirm"
    MODERATE = "moderate"
    PROPOSE = "propose"


@dataclass(frozen=True)
class ResourceRef:
    """A policy-relevant resource: its kind plus owner scope.

    Exactly one of owner_actor_id / owner_group_id is set for actor- and
    group-scoped kinds; both None means course scope (forum, taxonomy,
    schedule and course-wide items).
    """

    kind: ResourceKind
    owner_actor_id: str | None = None
    owner_group_id: str | None = None

    def __post_init__(self):
        if self.owner_actor_id is not None and self.owner_group_id is not None:
            raise ValidationError("resource cannot be both actor- and group-scoped", field="resource")


@dataclass(frozen=True)
class Principal:
    actor_id: str
    actor: Actor


@dataclass(frozen=True)
class Decision:
    allowed: bool
    rule_id: str
    relation: Relation | None = None

    def __bool__(self) -> bool:
        return self.allowed


ALL_STATES = tuple(CourseState)
RUNNING_STATES = (CourseState.PHASE1, CourseState.PHASE2, CourseState.PHASE3, CourseState.PHASE4)
DEFAULT_DENY = "default-deny"


@dataclass(frozen=True)
class PolicyRule:
    id: str
    effect: str  # "allow" | "deny"
    relations: tuple[Relation, ...]
    kinds: tuple[ResourceKind, ...]
    actions: tuple[Action, ...]
    states: tuple[CourseState, ...]


def _rule(
    rule_id: str,
    effect: str,
    relations: Iterable[Relation],
    kinds: Iterable[ResourceKind],
    actions: Iterable[Action],
    states: Iterable[CourseState] = ALL_STATES,
) -> PolicyRule:
    return PolicyRule(rule_id, effect, tuple(relations), tuple(kinds), tuple(actions), tuple(states))


TUTOR_TEAM = (Relation.ASSIGNED_TUTOR, Relation.OTHER_TUTOR, Relation.MANAGER, Relation.TEACHER, Relation.DIRECTOR)

# Ordered rule list; later rules override earlier ones when they overlap, and
# explicit denies close the list so their ids surface in the dump.
POLICY_RULES: tuple[PolicyRule, ...] = (
    _rule(
        "self-reads-own-data",
        "allow",
        [Relation.SELF],
        [ResourceKind.STUDENT_DASHBOARD, ResourceKind.STUDENT_BLOG, ResourceKind.CONTRACT],
        [Action.READ],
    ),
    _rule(
        "owner-writes-journal",
        "allow",
        [Relation.SELF],
        [ResourceKind.STUDENT_DASHBOARD],
        [Action.WRITE],
        RUNNING_STATES,
    ),
    _rule(
        "owner-writes-blog",
        "allow",
        [Relation.SELF],
        [ResourceKind.STUDENT_BLOG],
        [Action.WRITE],
        RUNNING_STATES,
    ),
    _rule(
        "contract-created-at-start",
        "allow",
        [Relation.SELF],
        [ResourceKind.CONTRACT],
        [Action.WRITE],
        [CourseState.SETUP, CourseState.PHASE1],
    ),
    _rule(
        "contract-revised-after-close",
        "allow",
        [Relation.SELF],
        [ResourceKind.CONTRACT],
        [Action.WRITE],
        [CourseState.CLOSED],
    ),
    _rule(
        "group-reads-own-surfaces",
        "allow",
        [Relation.GROUP_MEMBER, Relation.GROUP_LEADER],
        [ResourceKind.GROUP_DASHBOARD, ResourceKind.GROUP_BLOG],
        [Action.READ],
    ),
    _rule(
        "group-mates-read-student-blogs",
        "allow",
        [Relation.GROUP_MEMBER, Relation.GROUP_LEADER],
        [ResourceKind.STUDENT_BLOG],
        [Action.READ],
    ),
    _rule(
        "members-propose-dashboard-data",
        "allow",
        [Relation.GROUP_MEMBER, Relation.GROUP_LEADER],
        [ResourceKind.GROUP_DASHBOARD],
        [Action.PROPOSE],
        RUNNING_STATES,
    ),
    _rule(
        "members-submit-group-posts",
        "allow",
        [Relation.GROUP_MEMBER, Relation.GROUP_LEADER],
        [ResourceKind.GROUP_BLOG],
        [Action.WRITE],
        RUNNING_STATES,
    ),
    _rule(
        "leader-confirms-dashboard-data",
        "allow",
        [Relation.GROUP_LEADER],
        [ResourceKind.GROUP_DASHBOARD],
        [Action.CONFIRM],
        RUNNING_STATES,
    ),
    _rule(
        "leader-maintains-task-plan",
        "allow",
        [Relation.GROUP_LEADER],
        [ResourceKind.GROUP_DASHBOARD],
        [Action.WRITE],
        RUNNING_STATES,
    ),
    _rule(
        "leader-moderates-group-blog",
        "allow",
        [Relation.GROUP_LEADER],
        [ResourceKind.GROUP_BLOG],
        [Action.MODERATE],
        RUNNING_STATES,
    ),
    _rule(
        "tutors-read-monitored-surfaces",
        "allow",
        [Relation.ASSIGNED_TUTOR],
        [
            ResourceKind.STUDENT_DASHBOARD,
            ResourceKind.GROUP_DASHBOARD,
            ResourceKind.STUDENT_BLOG,
            ResourceKind.GROUP_BLOG,
            ResourceKind.TUTOR_DASHBOARD,
            ResourceKind.ASSESSMENT,
            ResourceKind.ACTIVITY_SUMMARY,
            ResourceKind.CONTRACT,
        ],
        [Action.READ],
    ),
    _rule(
        "tutors-write-monitor-notes",
        "allow",
        [Relation.ASSIGNED_TUTOR],
        [ResourceKind.TUTOR_DASHBOARD],
        [Action.WRITE],
        RUNNING_STATES + (CourseState.CLOSED,),
    ),
    _rule(
        "tutors-record-assessments",
        "allow",
        [Relation.ASSIGNED_TUTOR],
        [ResourceKind.ASSESSMENT],
        [Action.WRITE],
        RUNNING_STATES + (CourseState.CLOSED,),
    ),
    _rule(
        "tutoring-team-forum-read",
        "allow",
        TUTOR_TEAM,
        [ResourceKind.FORUM],
        [Action.READ],
    ),
    _rule(
        "tutoring-team-forum-write",
        "allow",
        TUTOR_TEAM,
        [ResourceKind.FORUM],
        [Action.WRITE],
        RUNNING_STATES + (CourseState.CLOSED,),
    ),
    _rule(
        "tutoring-team-taxonomy-read",
        "allow",
        TUTOR_TEAM,
        [ResourceKind.TAXONOMY],
        [Action.READ],
    ),
    _rule(
        "tutors-propose-taxonomy-subjects",
        "allow",
        [Relation.ASSIGNED_TUTOR, Relation.OTHER_TUTOR],
        [ResourceKind.TAXONOMY],
        [Action.PROPOSE],
        RUNNING_STATES + (CourseState.CLOSED,),
    ),
    _rule(
        "managers-moderate-taxonomy",
        "allow",
        [Relation.MANAGER, Relation.DIRECTOR],
        [ResourceKind.TAXONOMY],
        [Action.MODERATE],
        RUNNING_STATES + (CourseState.CLOSED,),
    ),
    _rule(
        "oversight-reads-everything",
        "allow",
        [Relation.MANAGER, Relation.DIRECTOR],
        tuple(ResourceKind),
        [Action.READ],
    ),
    _rule(
        "teacher-reads-course-surfaces",
        "allow",
        [Relation.TEACHER],
        [ResourceKind.GROUP_DASHBOARD, ResourceKind.SCHEDULE],
        [Action.READ],
    ),
    _rule(
        "schedule-read-all",
        "allow",
        tuple(Relation),
        [ResourceKind.SCHEDULE],
        [Action.READ],
    ),
    _rule(
        "schedule-coordination-writes",
        "allow",
        [Relation.ASSIGNED_TUTOR, Relation.MANAGER, Relation.DIRECTOR],
        [ResourceKind.SCHEDULE],
        [Action.WRITE],
        (CourseState.SETUP,) + RUNNING_STATES,
    ),
    # Explicit denies: these mirror the platform's headline privacy rules so
    # the dump carries their ids on every matching row.
    _rule(
        "leader-denied-member-journals",
        "deny",
        [Relation.GROUP_LEADER, Relation.GROUP_MEMBER, Relation.OTHER_STUDENT],
        [ResourceKind.STUDENT_DASHBOARD],
        [Action.READ, Action.WRITE],
    ),
    _rule(
        "contract-frozen-while-running",
        "deny",
        [Relation.SELF],
        [ResourceKind.CONTRACT],
        [Action.WRITE],
        [CourseState.PHASE2, CourseState.PHASE3, CourseState.PHASE4],
    ),
)


class PolicyMatrix:
    """Materialized total function over the four policy dimensions."""

    def __init__(self, rules: tuple[PolicyRule, ...] = POLICY_RULES):
        self.rules = rules
        self._table: dict[tuple[Relation, ResourceKind, Action, CourseState], tuple[bool, str]] = {}
        for relation in Relation:
            for kind in ResourceKind:
                for action in Action:
                    for state in CourseState:
                        self._table[(relation, kind, action, state)] = (False, DEFAULT_DENY)
        for rule in rules:
            allowed = rule.effect == "allow"
            for relation in rule.relations:
                for kind in rule.kinds:
                    for action in rule.actions:
                        for state in rule.states:
                            self._table[(relation, kind, action, state)] = (allowed, rule.id)

    def lookup(self, relation: Relation, kind: ResourceKind, action: Action, state: CourseState) -> tuple[bool, str]:
        return self._table[(relation, kind, action, state)]

    def dump(self) -> str:
        """Complete enumeration in stable order, one row per tuple."""
        lines = ["relation\tresource\taction\tstate\tdecision\trule"]
        for relation in Relation:
            for kind in ResourceKind:
                for action in Action:
                    for state in CourseState:
                        allowed, rule_id = self._table[(relation, kind, action, state)]
                        lines.append(
                            "\t".join(
                                [
                                    relation.value,
                                    kind.value,
                                    action.value,
                                    state.value,
                                    "allow" if allowed else "deny",
                                    rule_id,
                                ]
                            )
                        )
        return "\n".join(lines) + "\n"

    def rule_ids(self) -> list[str]:
        return [r.id for r in self.rules]


_MATRIX = PolicyMatrix()


def policy_matrix() -> PolicyMatrix:
    return _MATRIX


def dump_matrix() -> str:
    return _MATRIX.dump()


def relations_of(principal: Principal, resource: ResourceRef, course: Course) -> set[Relation]:
    """Every relation the caller holds toward the resource's owner scope."""
    actor = principal.actor
    relations: set[Relation] = set()

    for binding in actor.roles:
        if binding.kind in MANAGER_ROLES:
            relations.add(Relation.MANAGER)
        elif binding.kind is RoleKind.TEACHER:
            relations.add(Relation.TEACHER)
        elif binding.kind is RoleKind.DIRECTOR:
            relations.add(Relation.DIRECTOR)

    tutored = actor.tutored_groups()
    student_groups = actor.student_groups()

    if resource.owner_actor_id is not None:
        if resource.owner_actor_id == principal.actor_id:
            relations.add(Relation.SELF)
        owner_group = course.group_of_student(resource.owner_actor_id)
        if owner_group is not None:
            _add_group_relations(
                relations,
                principal.actor_id,
                owner_group.id,
                course,
                tutored,
                student_groups,
                exclude_membership=resource.owner_actor_id == principal.actor_id,
            )
        # Owner outside any group (e.g. a tutor's own contract): only self
        # and the course-wide oversight roles apply.
    elif resource.owner_group_id is not None:
        _add_group_relations(
            relations, principal.actor_id, resource.owner_group_id, course, tutored, student_groups
        )
    else:
        # Course-scoped resource: tutors act as course tutoring-team members,
        # students as generic students.
        if tutored:
            relations.add(Relation.ASSIGNED_TUTOR)
        if student_groups:
            relations.add(Relation.OTHER_STUDENT)

    return relations


def _add_group_relations(
    relations: set[Relation],
    caller_id: str,
    group_id: str,
    course: Course,
    tutored: set[str],
    student_groups: set[str],
    exclude_membership: bool = False,
) -> None:
    group = course.groups.get(group_id)
    if group is not None and not exclude_membership:
        if caller_id == group.leader_id:
            relations.add(Relation.GROUP_LEADER)
        if caller_id in group.member_ids:
            relations.add(Relation.GROUP_MEMBER)
    if group_id in tutored:
        relations.add(Relation.ASSIGNED_TUTOR)
    elif tutored:
        relations.add(Relation.OTHER_TUTOR)
    if student_groups and group_id not in student_groups:
        relations.add(Relation.OTHER_STUDENT)


# Denial reasons are reported for the most specific relation the caller held.
_RELATION_SPECIFICITY = (
    Relation.SELF,
    Relation.GROUP_LEADER,
    Relation.GROUP_MEMBER,
    Relation.ASSIGNED_TUTOR,
    Relation.OTHER_TUTOR,
    Relation.MANAGER,
    Relation.TEACHER,
    Relation.DIRECTOR,
    Relation.OTHER_STUDENT,
)


def authorize(
    principal: Principal,
    action: Action,
    resource: ResourceRef,
    state: CourseState,
    course: Course,
) -> Decision:
    """Pure decision over (caller relations, resource kind, action, state)."""
    matrix = policy_matrix()
    relations = relations_of(principal, resource, course)
    for relation in _RELATION_SPECIFICITY:
        if relation not in relations:
            continue
        allowed, rule_id = matrix.lookup(relation, resource.kind, action, state)
        if allowed:
            return Decision(True, rule_id, relation)
    for relation in _RELATION_SPECIFICITY:
        if relation in relations:
            _, rule_id = matrix.lookup(relation, resource.kind, action, state)
            return Decision(False, rule_id, relation)
    return Decision(False, DEFAULT_DENY, None)


def require(
    principal: Principal,
    action: Action,
    resource: ResourceRef,
    state: CourseState,
    course: Course,
) -> Decision:
    decision = authorize(principal, action, resource, state, course)
    if not decision.allowed:
        raise AuthorizationError(
            f"{principal.actor_id} may not {action.value} {resource.kind.value} (rule {decision.rule_id})",
            rule_id=decision.rule_id,
        )
    return decision
