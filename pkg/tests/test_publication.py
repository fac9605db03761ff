import random

import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.stateful import RuleBasedStateMachine, initialize, invariant, rule

from meshat.domain import create_course, enroll, parse_roster_rows
from meshat.errors import AuthorizationError, NotFoundError, StateError, ValidationError
from meshat.fixtures import reference_course_definition, reference_roster_csv
from meshat.publication import ROOT_CALENDAR, ROOT_LABELS, ROOT_PROGRESS, ROOT_ROLES, Taxonomy


# -- blogs -------------------------------------------------------------------

def test_student_post_publishes_immediately(small_store):
    post = small_store.post_student_blog("s002", "s002", "first retrospective")
    assert post.state == "published"
    feed = small_store.student_blog_feed("s003", "s002")  # group mate reads
    assert [p.seq for p in feed] == [post.seq]


def test_student_cannot_post_to_another_students_blog(small_store):
    with pytest.raises(AuthorizationError):
        small_store.post_student_blog("s002", "s003", "hijack")


def test_other_group_student_cannot_read_student_blog(small_store):
    small_store.post_student_blog("s002", "s002", "private-ish")
    with pytest.raises(AuthorizationError):
        small_store.student_blog_feed("s005", "s002")  # s005 is in G02


def test_group_post_waits_for_the_leader(small_store):
    post = small_store.post_group_blog("s003", "G01", "draft announcement")
    assert post.state == "submitted"
    assert small_store.group_blog_feed("t-tech-G01", "G01") == []
    pending = small_store.pending_group_posts("s001", "G01")
    assert [p.seq for p in pending] == [post.seq]


def test_outsider_cannot_post_to_group_blog(small_store):
    with pytest.raises(AuthorizationError):
        small_store.post_group_blog("s005", "G01", "intrusion")


def test_empty_body_is_rejected(small_store):
    with pytest.raises(ValidationError):
        small_store.post_group_blog("s003", "G01", "   ")


def test_leader_publishes_group_post(small_store):
    post = small_store.post_group_blog("s003", "G01", "sprint summary")
    published = small_store.moderate_group_post("s001", "G01", post.seq, "published")
    assert published.state == "published"
    assert [p.seq for p in small_store.group_blog_feed("t-tech-G01", "G01")] == [post.seq]


def test_leader_rejects_group_post(small_store):
    post = small_store.post_group_blog("s003", "G01", "too spicy")
    rejected = small_store.moderate_group_post("s001", "G01", post.seq, "rejected")
    assert rejected.state == "rejected"
    assert small_store.group_blog_feed("s001", "G01") == []
    # visible to author and leader in the unpublished listing, not to others
    author_view = small_store.group_blog_feed("s003", "G01", published_only=False)
    assert [p.seq for p in author_view] == [post.seq]
    other_view = small_store.group_blog_feed("s004", "G01", published_only=False)
    assert other_view == []


def test_non_leader_cannot_moderate(small_store):
    post = small_store.post_group_blog("s003", "G01", "waiting")
    with pytest.raises(AuthorizationError):
        small_store.moderate_group_post("s003", "G01", post.seq, "published")
    with pytest.raises(AuthorizationError):
        small_store.moderate_group_post("t-tech-G01", "G01", post.seq, "published")


def test_moderating_twice_is_a_state_error(small_store):
    post = small_store.post_group_blog("s003", "G01", "once only")
    small_store.moderate_group_post("s001", "G01", post.seq, "published")
    with pytest.raises(StateError):
        small_store.moderate_group_post("s001", "G01", post.seq, "published")


def test_published_feed_never_leaks_unapproved_posts(tmp_path):
    from randomlog import build_random_course

    store, clock = build_random_course(tmp_path, seed=17, max_entries=400)
    approved = {
        e.payload["post_seq"]
        for e in store.log.entries
        if e.kind.value == "leader_confirmation" and e.payload.get("scope") == "blog"
        and e.payload["decision"] == "published"
    }
    for gid, group in store.course.groups.items():
        feed = store.group_blog_feed(group.leader_id, gid)
        for post in feed:
            assert post.state == "published"
            assert post.seq in approved


# -- taxonomy ----------------------------------------------------------------

def make_course():
    course = create_course(reference_course_definition())
    enroll(course, parse_roster_rows(reference_roster_csv(n_groups=2, students_per_group=4)))
    return course


def test_seeded_taxonomy_has_three_roots_with_fixed_labels():
    tax = Taxonomy.seeded(make_course())
    roots = {r.id: r.label for r in tax.roots()}
    assert roots == ROOT_LABELS
    role_children = {n.label for n in tax.children(ROOT_ROLES)}
    assert "social catalyst" in role_children
    assert "qualimetror" in role_children
    assert len(role_children) == 9
    assert len(tax.children(ROOT_CALENDAR)) == 4
    assert len(tax.children(ROOT_PROGRESS)) == 2


def test_propose_creates_provisional_immediately_usable_node(small_store):
    node = small_store.propose_subject("t-tech-G01", ROOT_ROLES, "dashboard coaching")
    assert node["status"] == "provisional"
    discussion = small_store.start_discussion("t-mgmt-G02", "using dashboards", "thoughts?", [node["id"]])
    assert node["id"] in discussion.tags


def test_duplicate_sibling_label_is_rejected(small_store):
    small_store.propose_subject("t-tech-G01", ROOT_ROLES, "dashboard coaching")
    with pytest.raises(ValidationError):
        small_store.propose_subject("t-mgmt-G01", ROOT_ROLES, "Dashboard Coaching")  # case-insensitive


def test_fourth_root_is_impossible(small_store):
    with pytest.raises(NotFoundError):
        small_store.propose_subject("t-tech-G01", "no-such-parent", "fourth root")
    # moderation ops cannot touch roots either
    with pytest.raises(ValidationError):
        small_store.moderate_taxonomy("m-tech", {"op": "rename", "node_id": ROOT_ROLES, "label": "other"})
    with pytest.raises(ValidationError):
        small_store.moderate_taxonomy("m-tech", {"op": "merge", "node_id": ROOT_ROLES, "into_id": ROOT_CALENDAR})


def test_student_cannot_propose_or_discuss(small_store):
    with pytest.raises(AuthorizationError):
        small_store.propose_subject("s001", ROOT_ROLES, "students corner")
    with pytest.raises(AuthorizationError):
        small_store.start_discussion("s001", "hi", "there", [ROOT_ROLES])
    with pytest.raises(AuthorizationError):
        small_store.search_forum("s001")


def test_manager_establishes_and_renames(small_store):
    node = small_store.propose_subject("t-tech-G01", ROOT_ROLES, "dashboard coaching")
    small_store.moderate_taxonomy("m-tech", {"op": "establish", "node_id": node["id"]})
    assert [n for n in small_store.taxonomy_nodes("m-tech") if n["id"] == node["id"]][0]["status"] == "established"
    small_store.moderate_taxonomy("m-tech", {"op": "rename", "node_id": node["id"], "label": "dashboard mentoring"})
    assert [n for n in small_store.taxonomy_nodes("m-tech") if n["id"] == node["id"]][0]["label"] == "dashboard mentoring"


def test_merge_retags_discussions_and_removes_node(small_store):
    a = small_store.propose_subject("t-tech-G01", ROOT_ROLES, "gantt help")
    b = small_store.propose_subject("t-tech-G01", ROOT_ROLES, "planning help")
    d1 = small_store.start_discussion("t-tech-G01", "gantt question", "how?", [a["id"]])
    d2 = small_store.start_discussion("t-mgmt-G01", "both", "hm", [a["id"], b["id"]])
    before = {d1.id: set(d1.tags), d2.id: set(d2.tags)}
    small_store.moderate_taxonomy("m-tech", {"op": "merge", "node_id": a["id"], "into_id": b["id"]})
    tax_ids = {n["id"] for n in small_store.taxonomy_nodes("m-tech")}
    assert a["id"] not in tax_ids
    # retag oracle: tag sets unchanged modulo a -> b
    for did, tags in before.items():
        expected = {b["id"] if t == a["id"] else t for t in tags}
        assert set(small_store.projection.publication.discussions[did].tags) == expected
    # every tag still resolves
    for d in small_store.projection.publication.discussions.values():
        for t in d.tags:
            assert t in tax_ids


def test_merge_restricted_to_siblings(small_store):
    node = small_store.propose_subject("t-tech-G01", ROOT_ROLES, "offshoot")
    other = small_store.propose_subject("t-tech-G01", ROOT_CALENDAR, "kickoff week")
    with pytest.raises(ValidationError):
        small_store.moderate_taxonomy("m-tech", {"op": "merge", "node_id": node["id"], "into_id": other["id"]})


# -- forum search ---------------------------------------------------------------

def seeded_forum(store):
    t1 = store.propose_subject("t-tech-G01", ROOT_ROLES, "rubric design")
    d1 = store.start_discussion("t-tech-G01", "grading rubric", "evaluator craft", [f"{ROOT_ROLES}.evaluator"])
    d2 = store.start_discussion("t-mgmt-G01", "phase two pacing", "calendar crunch", [f"{ROOT_CALENDAR}.phase-2"])
    d3 = store.start_discussion("t-tech-G02", "G02 blockers", "progress stuck", [f"{ROOT_PROGRESS}.g02", t1["id"]])
    return t1, d1, d2, d3


def test_search_by_root_includes_descendant_tags(small_store):
    _, d1, d2, d3 = seeded_forum(small_store)
    hits = small_store.search_forum("m-tech", tags=[ROOT_CALENDAR])
    assert [d.id for d in hits] == [d2.id]
    hits = small_store.search_forum("m-tech", tags=[ROOT_ROLES])
    assert {d.id for d in hits} == {d1.id, d3.id}


def test_search_conjunction_and_text(small_store):
    t1, d1, d2, d3 = seeded_forum(small_store)
    hits = small_store.search_forum("m-tech", tags=[ROOT_ROLES, ROOT_PROGRESS])
    assert [d.id for d in hits] == [d3.id]
    assert small_store.search_forum("m-tech", text="no such phrase") == []
    hits = small_store.search_forum("m-tech", text="CALENDAR crunch")
    assert [d.id for d in hits] == [d2.id]


def test_search_newest_first_and_matches_linear_scan(small_store):
    seeded_forum(small_store)
    small_store.reply_discussion("t-tech-G01", "d" + str(2), "more")  # seq ids are deterministic
    pub = small_store.projection.publication
    for tags, text in [(None, None), ([ROOT_ROLES], None), (None, "progress"), ([ROOT_ROLES], "craft")]:
        got = [d.id for d in small_store.search_forum("m-tech", tags=tags, text=text)]
        # linear scan oracle
        expected = []
        for d in pub.discussions.values():
            ok = True
            if tags:
                for tag in tags:
                    subtree = pub.taxonomy.subtree_ids(tag)
                    if not (d.tags & subtree):
                        ok = False
            if ok and text:
                needle = text.casefold()
                corpus = [d.title.casefold()] + [m.text.casefold() for m in d.messages]
                if not any(needle in c for c in corpus):
                    ok = False
            if ok:
                expected.append(d)
        expected = [d.id for d in sorted(expected, key=lambda d: d.seq, reverse=True)]
        assert got == expected


def test_unresolvable_tag_is_rejected(small_store):
    with pytest.raises(NotFoundError):
        small_store.start_discussion("t-tech-G01", "bad", "tags", ["ghost-node"])


# -- outline export/import --------------------------------------------------------

def test_outline_round_trip(small_store):
    small_store.propose_subject("t-tech-G01", ROOT_ROLES, "dashboard coaching")
    outline = small_store.export("taxonomy")
    rebuilt = Taxonomy.from_outline(outline)
    assert rebuilt.to_outline() == outline
    assert "dashboard coaching [provisional]" in outline


def test_outline_rejects_malformed_text():
    with pytest.raises(ValidationError):
        Taxonomy.from_outline("roles and tasks [established]\n    too deep [provisional]\n")
    with pytest.raises(ValidationError):
        Taxonomy.from_outline("just one root [established]\n")


# -- taxonomy state-machine fuzz ------------------------------------------------

class TaxonomyMachine(RuleBasedStateMachine):
    def __init__(self):
        super().__init__()
        self.tax = Taxonomy.seeded(make_course())
        self.discussion_tags: list[set[str]] = []
        self.counter = 0

    def _non_root_ids(self):
        return [n.id for n in self.tax.nodes.values() if n.parent_id is not None]

    @rule(data=st.data())
    def propose(self, data):
        parent = data.draw(st.sampled_from(sorted(self.tax.nodes)))
        self.counter += 1
        label = f"subject {data.draw(st.integers(0, 30))}"
        try:
            self.tax.propose(f"f{self.counter}", parent, label, "t-x")
        except ValidationError:
            pass

    @rule(data=st.data())
    def rename(self, data):
        candidates = self._non_root_ids()
        if not candidates:
            return
        node = data.draw(st.sampled_from(sorted(candidates)))
        try:
            self.tax.rename(node, f"label {data.draw(st.integers(0, 30))}")
        except ValidationError:
            pass

    @rule(data=st.data())
    def merge(self, data):
        candidates = self._non_root_ids()
        if len(candidates) < 2:
            return
        node = data.draw(st.sampled_from(sorted(candidates)))
        into = data.draw(st.sampled_from(sorted(candidates)))
        try:
            self.tax.merge(node, into)
            for tags in self.discussion_tags:
                if node in tags:
                    tags.discard(node)
                    tags.add(into)
        except ValidationError:
            pass

    @rule(data=st.data())
    def tag_discussion(self, data):
        node = data.draw(st.sampled_from(sorted(self.tax.nodes)))
        self.discussion_tags.append({node})

    @invariant()
    def three_fixed_roots(self):
        roots = {r.id: r.label for r in self.tax.roots()}
        assert roots == ROOT_LABELS

    @invariant()
    def acyclic_and_reachable(self):
        for node in self.tax.nodes.values():
            seen = set()
            cursor = node
            while cursor.parent_id is not None:
                assert cursor.id not in seen, "cycle"
                seen.add(cursor.id)
                cursor = self.tax.nodes[cursor.parent_id]
            assert cursor.parent_id is None

    @invariant()
    def sibling_labels_unique(self):
        by_parent = {}
        for node in self.tax.nodes.values():
            key = (node.parent_id, node.label.casefold())
            assert key not in by_parent, key
            by_parent[key] = node.id

    @invariant()
    def all_tags_resolve(self):
        for tags in self.discussion_tags:
            for tag in tags:
                assert tag in self.tax.nodes


TestTaxonomyFuzz = TaxonomyMachine.TestCase
TestTaxonomyFuzz.settings = settings(max_examples=25, stateful_step_count=40, deadline=None)
