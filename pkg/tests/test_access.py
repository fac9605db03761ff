from pathlib import Path

import pytest

from meshat.access import (
    Action,
    Decision,
    Principal,
    Relation,
    ResourceKind,
    ResourceRef,
    authorize,
    dump_matrix,
    policy_matrix,
    relations_of,
)
from meshat.domain import CourseState
from meshat.errors import ValidationError

GOLDEN = Path(__file__).parent / "data" / "policy_matrix.golden.tsv"


def principal(course, actor_id):
    return Principal(actor_id, course.actors[actor_id])


def decide(course, actor_id, action, resource, state=CourseState.PHASE3):
    return authorize(principal(course, actor_id), action, resource, state, course)


def test_dump_is_deterministic_and_matches_golden():
    text = dump_matrix()
    assert text == dump_matrix()
    assert text == GOLDEN.read_text(encoding="utf-8")


def test_dump_enumerates_the_full_cartesian_product():
    lines = dump_matrix().splitlines()
    expected = len(Relation) * len(ResourceKind) * len(Action) * len(CourseState)
    assert len(lines) - 1 == expected  # header excluded
    seen = set()
    for line in lines[1:]:
        cells = line.split("\t")
        assert len(cells) == 6
        assert cells[4] in ("allow", "deny")
        seen.add(tuple(cells[:4]))
    assert len(seen) == expected  # total function: each tuple exactly once


def test_every_declared_rule_id_appears_in_the_dump():
    text = dump_matrix()
    for rule_id in policy_matrix().rule_ids():
        assert f"\t{rule_id}" in text, rule_id


# -- the five verbatim platform rules, instantiated over the fixture roster --

def test_leader_denied_on_every_member_journal(course):
    pairs = 0
    for group in course.groups.values():
        for member in group.member_ids:
            if member == group.leader_id:
                continue
            decision = decide(
                course, group.leader_id, Action.READ,
                ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id=member),
            )
            assert not decision.allowed
            assert decision.rule_id == "leader-denied-member-journals"
            pairs += 1
    assert pairs == 12 * 7


def test_students_write_their_own_blog_and_journal(course):
    for group in course.groups.values():
        for member in group.member_ids:
            blog = decide(course, member, Action.WRITE, ResourceRef(ResourceKind.STUDENT_BLOG, owner_actor_id=member))
            journal = decide(course, member, Action.WRITE, ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id=member))
            assert blog.allowed and blog.rule_id == "owner-writes-blog"
            assert journal.allowed and journal.rule_id == "owner-writes-journal"


def test_assigned_tutors_read_group_dashboards(course):
    for group in course.groups.values():
        for tutor in group.tutor_ids:
            decision = decide(course, tutor, Action.READ, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id=group.id))
            assert decision.allowed
            assert decision.rule_id == "tutors-read-monitored-surfaces"


def test_everyone_reads_the_schedule(course):
    for actor_id in course.actors:
        for state in CourseState:
            decision = decide(course, actor_id, Action.READ, ResourceRef(ResourceKind.SCHEDULE), state)
            assert decision.allowed, (actor_id, state)


def test_contract_writes_frozen_mid_course(course):
    some_student = "s005"
    resource = ResourceRef(ResourceKind.CONTRACT, owner_actor_id=some_student)
    for state in (CourseState.PHASE2, CourseState.PHASE3, CourseState.PHASE4):
        decision = decide(course, some_student, Action.WRITE, resource, state)
        assert not decision.allowed
        assert decision.rule_id == "contract-frozen-while-running"
    assert decide(course, some_student, Action.WRITE, resource, CourseState.PHASE1).allowed
    assert decide(course, some_student, Action.WRITE, resource, CourseState.CLOSED).allowed


# -- relation resolution ----------------------------------------------------

def test_relations_of_leader_toward_member_journal(course):
    group = course.groups["G01"]
    member = [m for m in group.member_ids if m != group.leader_id][0]
    rels = relations_of(
        principal(course, group.leader_id),
        ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id=member),
        course,
    )
    assert Relation.GROUP_LEADER in rels
    assert Relation.GROUP_MEMBER in rels
    assert Relation.SELF not in rels


def test_relations_of_foreign_tutor(course):
    rels = relations_of(
        principal(course, "t-tech-G02"),
        ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id="G01"),
        course,
    )
    assert rels == {Relation.OTHER_TUTOR}


def test_foreign_tutor_denied_on_group_dashboard(course):
    decision = decide(course, "t-tech-G02", Action.READ, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id="G01"))
    assert not decision.allowed


def test_other_group_students_cannot_read_student_blogs(course):
    decision = decide(course, "s009", Action.READ, ResourceRef(ResourceKind.STUDENT_BLOG, owner_actor_id="s001"))
    assert not decision.allowed  # s009 is in G02, s001 in G01


def test_group_members_read_each_others_blogs(course):
    decision = decide(course, "s002", Action.READ, ResourceRef(ResourceKind.STUDENT_BLOG, owner_actor_id="s003"))
    assert decision.allowed


def test_students_denied_forum_and_taxonomy(course):
    for action in (Action.READ, Action.WRITE):
        assert not decide(course, "s001", action, ResourceRef(ResourceKind.FORUM)).allowed
    assert not decide(course, "s001", Action.PROPOSE, ResourceRef(ResourceKind.TAXONOMY)).allowed


def test_tutoring_team_uses_forum(course):
    for actor_id in ("t-tech-G01", "t-mgmt-G05", "m-tech", "teach1", "dir1"):
        assert decide(course, actor_id, Action.READ, ResourceRef(ResourceKind.FORUM)).allowed
        assert decide(course, actor_id, Action.WRITE, ResourceRef(ResourceKind.FORUM)).allowed


def test_managers_read_everything_write_little(course):
    for kind in ResourceKind:
        resource = ResourceRef(
            kind,
            owner_actor_id="s001" if kind in (ResourceKind.STUDENT_DASHBOARD, ResourceKind.STUDENT_BLOG,
                                              ResourceKind.CONTRACT, ResourceKind.ACTIVITY_SUMMARY) else None,
            owner_group_id="G01" if kind in (ResourceKind.GROUP_DASHBOARD, ResourceKind.GROUP_BLOG,
                                             ResourceKind.TUTOR_DASHBOARD, ResourceKind.ASSESSMENT) else None,
        )
        assert decide(course, "m-tech", Action.READ, resource).allowed, kind
    assert not decide(course, "m-tech", Action.WRITE, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id="G01")).allowed
    assert not decide(course, "m-tech", Action.WRITE, ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id="s001")).allowed
    assert decide(course, "m-tech", Action.MODERATE, ResourceRef(ResourceKind.TAXONOMY)).allowed


def test_teacher_reads_only_course_surfaces(course):
    assert decide(course, "teach1", Action.READ, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id="G01")).allowed
    assert decide(course, "teach1", Action.READ, ResourceRef(ResourceKind.SCHEDULE)).allowed
    assert not decide(course, "teach1", Action.READ, ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id="s001")).allowed
    assert not decide(course, "teach1", Action.READ, ResourceRef(ResourceKind.STUDENT_BLOG, owner_actor_id="s001")).allowed


def test_tutor_contract_readable_by_holder_and_managers_only(course):
    resource = ResourceRef(ResourceKind.CONTRACT, owner_actor_id="t-tech-G01")
    assert decide(course, "t-tech-G01", Action.READ, resource).allowed
    assert decide(course, "m-mgmt", Action.READ, resource).allowed
    assert decide(course, "dir1", Action.READ, resource).allowed
    assert not decide(course, "t-mgmt-G01", Action.READ, resource).allowed
    assert not decide(course, "s001", Action.READ, resource).allowed


def test_purity_same_inputs_same_decision(course):
    resource = ResourceRef(ResourceKind.GROUP_BLOG, owner_group_id="G03")
    first = decide(course, "s017", Action.WRITE, resource)
    second = decide(course, "s017", Action.WRITE, resource)
    assert first == second


def test_totality_no_error_on_any_well_formed_input(course):
    for actor_id in ("s001", "t-tech-G01", "m-tech", "teach1", "dir1"):
        for kind in ResourceKind:
            for action in Action:
                for state in CourseState:
                    decision = decide(course, actor_id, action, ResourceRef(kind), state)
                    assert isinstance(decision, Decision)


def test_malformed_resource_ref_is_the_only_error():
    with pytest.raises(ValidationError):
        ResourceRef(ResourceKind.CONTRACT, owner_actor_id="a", owner_group_id="g")


def test_deny_by_default_for_unknown_combinations(course):
    decision = decide(course, "s001", Action.MODERATE, ResourceRef(ResourceKind.SCHEDULE))
    assert not decision.allowed
    assert decision.rule_id == "default-deny"
