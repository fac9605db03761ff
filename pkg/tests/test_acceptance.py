"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""

import json
import os
import random
import signal
import subprocess
import sys
import time
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from click.testing import CliRunner

from meshat.access import dump_matrix
from meshat.canon import canonical_json
from meshat.cli import main as cli_main
from meshat.clock import FixedClock
from meshat.domain import RoleKind, TUTOR_ROLES
from meshat.errors import AuthorizationError, CorruptLogError, StateError
from meshat.events import Entry, EntryKind, EventLog
from meshat.fixtures import reference_course_definition, reference_roster_csv
from meshat.publication import PublicationState, ROOT_LABELS, validate_taxonomy_change
from meshat.store import CourseStore, DataStore
from oracle import (
    assert_indicators_match,
    assert_views_match,
    gini_pairwise,
    oracle_dashboard_view,
    oracle_indicators,
)
from randomlog import build_random_course

HERE = Path(__file__).parent


def report(name: str, started: float, budget: float, detail: str = ""):
    elapsed = time.monotonic() - started
    assert elapsed < budget, f"{name} exceeded its {budget}s budget ({elapsed:.1f}s)"
    print(f"\nACCEPTANCE {name}: PASS ({elapsed:.2f}s{', ' + detail if detail else ''})")


def test_acceptance_reference_fixture(tmp_path):
    """init-course + import-roster reproduce the reference configuration."""
    started = time.monotonic()
    runner = CliRunner()
    fixture_dir = tmp_path / "fx"
    data_dir = tmp_path / "data"
    assert runner.invoke(cli_main, ["make-fixture", "--out", str(fixture_dir)]).exit_code == 0
    base = ["--data-dir", str(data_dir), "--fixed-clock", "2010-01-15T12:00:00+00:00"]
    init = runner.invoke(cli_main, base + ["init-course", str(fixture_dir / "course.json")])
    assert init.exit_code == 0, init.output
    imported = runner.invoke(cli_main, base + ["import-roster", str(fixture_dir / "roster.csv")])
    assert imported.exit_code == 0, imported.output
    assert "12 groups, 96 students, 24 tutors" in imported.output

    store = DataStore(data_dir).get("pco-2009")
    course = store.course
    assert len(course.groups) == 12
    students = [a for a in course.actors.values() if a.has_role(RoleKind.STUDENT)]
    assert len(students) == 96
    tutors = [a for a in course.actors.values() if a.tutored_groups()]
    assert len(tutors) == 24
    for group in course.groups.values():
        assert group.technical_tutor_id != group.management_tutor_id
        kinds = {
            b.kind
            for tid in group.tutor_ids
            for b in course.actors[tid].roles
            if b.group_id == group.id and b.kind in TUTOR_ROLES
        }
        assert kinds == TUTOR_ROLES  # one technical + one management each
    managers = [a for a in course.actors.values() if a.has_role(RoleKind.TECHNICAL_MANAGER) or a.has_role(RoleKind.MANAGEMENT_MANAGER)]
    assert len(managers) == 2
    assert sum(1 for a in course.actors.values() if a.has_role(RoleKind.TEACHER)) == 1
    assert sum(1 for a in course.actors.values() if a.has_role(RoleKind.DIRECTOR)) == 1
    assert len(course.phases) == 4
    assert course.start_date.isoformat() == "2009-11-01"  # November start
    assert course.end_date.isoformat() == "2010-04-15"  # to mid-April
    report("reference-fixture", started, budget=5.0)


def test_acceptance_permission_golden_file(course):
    """dump_matrix is byte-stable and the five platform rules hold roster-wide."""
    started = time.monotonic()
    first = dump_matrix()
    assert first == dump_matrix()
    assert first.encode() == (HERE / "data" / "policy_matrix.golden.tsv").read_bytes()

    from meshat.access import Action, Principal, ResourceKind, ResourceRef, authorize
    from meshat.domain import CourseState

    def decide(actor_id, action, resource, state=CourseState.PHASE3):
        return authorize(Principal(actor_id, course.actors[actor_id]), action, resource, state, course)

    leader_pairs = 0
    for group in course.groups.values():
        for member in group.member_ids:
            if member == group.leader_id:
                continue
            ref = ResourceRef(ResourceKind.STUDENT_DASHBOARD, owner_actor_id=member)
            assert not decide(group.leader_id, Action.READ, ref).allowed
            leader_pairs += 1
        for member in group.member_ids:
            assert decide(member, Action.WRITE, ResourceRef(ResourceKind.STUDENT_BLOG, owner_actor_id=member)).allowed
        for tutor in group.tutor_ids:
            assert decide(tutor, Action.READ, ResourceRef(ResourceKind.GROUP_DASHBOARD, owner_group_id=group.id)).allowed
    assert leader_pairs >= 12 * 7
    for actor_id in course.actors:
        assert decide(actor_id, Action.READ, ResourceRef(ResourceKind.SCHEDULE)).allowed
    for state in (CourseState.PHASE2, CourseState.PHASE3, CourseState.PHASE4):
        for group in course.groups.values():
            member = group.member_ids[1]
            assert not decide(member, Action.WRITE, ResourceRef(ResourceKind.CONTRACT, owner_actor_id=member), state).allowed
    report("permission-golden-file", started, budget=10.0, detail=f"{leader_pairs} leader-member pairs")


def test_acceptance_determinism_oracle(tmp_path):
    """1,000 seeded random logs: incremental views == from-scratch fold."""
    started = time.monotonic()
    rng = random.Random(20100415)
    logs = 0
    checked_against_bruteforce = 0
    for i in range(1000):
        size = rng.choice([20, 40, 60, 80, 120, 200, 350, 500])
        store, clock = build_random_course(tmp_path / f"log{i}", seed=10_000 + i, max_entries=size)
        now = clock.now()
        window_from = now - timedelta(days=rng.choice([7, 30, 90]))
        for gid in store.course.groups:
            live_view = store._dashboard(gid).compute_view(store.course, now).to_dict()
            fold_view = store._fold_dashboard(gid).compute_view(store.course, now).to_dict()
            assert live_view == fold_view, (i, gid)
            live_ind = store._indicators_unchecked(gid, window_from, now).scores()
            from meshat.monitor import compute_indicators

            fold_ind = compute_indicators(
                store.course, store._fold_dashboard(gid), store._fold_monitor(gid), window_from, now
            ).scores()
            for key, value in live_ind.items():
                if value is None:
                    assert fold_ind[key] is None, (i, gid, key)
                else:
                    assert abs(fold_ind[key] - value) <= 1e-9, (i, gid, key)
        if i % 10 == 0:
            records = [e.to_record() for e in store.log.entries]
            for gid in store.course.groups:
                view = store._dashboard(gid).compute_view(store.course, now).to_dict()
                assert_views_match(view, oracle_dashboard_view(records, store.course, gid, now))
                got = store._indicators_unchecked(gid, window_from, now).scores()
                assert_indicators_match(got, oracle_indicators(records, store.course, gid, window_from, now))
            checked_against_bruteforce += 1
        logs += 1
    report(
        "determinism-oracle",
        started,
        budget=60.0,
        detail=f"{logs} logs, {checked_against_bruteforce} brute-force cross-checks",
    )


def test_acceptance_indicator_bounds_and_anchors(tmp_path):
    """Bounds across a random corpus plus the TO anchors and scale invariance."""
    started = time.monotonic()

    def log_hours(store, pairs, factor=1.0):
        group = store.course.groups["G01"]
        seqs = [
            store.propose_dashboard_entry(
                actor, "G01", EntryKind.TIME_LOG, {"hours": h * factor, "occurred_on": "2010-01-10"}
            ).seq
            for actor, h in pairs
        ]
        store.confirm_dashboard_entries(group.leader_id, "G01", seqs)

    window = (datetime(2010, 1, 1, tzinfo=timezone.utc), datetime(2010, 1, 15, tzinfo=timezone.utc))

    # anchor: equal hours -> TO = 1.0
    store, _ = build_random_course(tmp_path / "equal", seed=1, max_entries=0)
    log_hours(store, [("s001", 10), ("s002", 10), ("s003", 10), ("s004", 10)])
    assert abs(store._indicators_unchecked("G01", *window).TO - 1.0) <= 1e-9

    # anchor: one worker of four -> Gini oracle 0.75 -> TO = 0.25
    assert abs(gini_pairwise([40, 0, 0, 0]) - 0.75) <= 1e-12
    store, _ = build_random_course(tmp_path / "solo", seed=2, max_entries=0)
    log_hours(store, [("s001", 40)])
    assert abs(store._indicators_unchecked("G01", *window).TO - 0.25) <= 1e-9

    # scale invariance under hours x c
    reference = None
    for c in (1.0, 0.5, 3.0, 10.0):
        store, _ = build_random_course(tmp_path / f"scale{c}", seed=3, max_entries=0)
        log_hours(store, [("s001", 8), ("s002", 2), ("s003", 5), ("s004", 1)], factor=c)
        to = store._indicators_unchecked("G01", *window).TO
        reference = to if reference is None else reference
        assert abs(to - reference) <= 1e-9, c

    # bounds across the random corpus
    scores_seen = 0
    for seed in range(40):
        store, clock = build_random_course(tmp_path / f"corpus{seed}", seed=seed + 500, max_entries=150)
        now = clock.now()
        for gid in store.course.groups:
            for days in (7, 45, 160):
                for key, value in store._indicators_unchecked(gid, now - timedelta(days=days), now).scores().items():
                    if value is not None:
                        assert 0.0 <= value <= 1.0, (seed, gid, key, value)
                        scores_seen += 1
    report("indicator-bounds-anchors", started, budget=60.0, detail=f"{scores_seen} non-null scores checked")


def test_acceptance_contract_immutability_fuzz(tmp_path):
    """100 rejected update attempts per holder mid-course; clean v2 after close."""
    started = time.monotonic()
    clock = FixedClock(datetime(2009, 11, 10, 9, 0, tzinfo=timezone.utc))
    data = DataStore(tmp_path / "contracts", clock=clock)
    store = data.init_course(reference_course_definition())
    store.import_roster(reference_roster_csv())  # the full 96-student roster
    course = store.course
    holders = sorted({m for g in course.groups.values() for m in g.member_ids})

    answers = ["goal", "method", "support", "now", "evidence", "audience"]
    digests = {}
    for holder in holders:
        digests[holder] = store.create_contract(holder, [f"{a} ({holder})" for a in answers]).digest()

    evidence = {}
    clock.set(datetime(2010, 1, 12, 10, 0, tzinfo=timezone.utc))
    for holder in holders:
        evidence[holder] = store.post_student_blog(holder, holder, f"reflection by {holder}").seq

    rng = random.Random(424242)
    phase_clocks = [
        datetime(2009, 11, 20, tzinfo=timezone.utc),
        datetime(2009, 12, 15, tzinfo=timezone.utc),
        datetime(2010, 2, 10, tzinfo=timezone.utc),
        datetime(2010, 4, 8, tzinfo=timezone.utc),
    ]
    attempts = 0
    for holder in holders:
        for _ in range(100):
            clock.set(phase_clocks[rng.randrange(4)])
            mutated = [a + str(rng.randint(0, 999)) for a in answers]
            with pytest.raises((AuthorizationError, StateError)):
                store.update_contract(holder, mutated, evidence_refs=[evidence[holder]] if rng.random() < 0.5 else [])
            attempts += 1
    for holder in holders:
        assert store.get_contract(holder, holder)[1].digest() == digests[holder]

    clock.set(datetime(2010, 4, 16, 9, 0, tzinfo=timezone.utc))
    store.close()
    for holder in holders:
        v2 = store.update_contract(holder, [f"{a} revised" for a in answers], evidence_refs=[evidence[holder]])
        assert v2.version == 2
        versions = store.get_contract(holder, holder)
        assert set(versions) == {1, 2}
        assert versions[1].digest() == digests[holder]  # v1 verbatim
        resolved = store.log.get(evidence[holder])
        assert resolved.kind is EntryKind.BLOG_POST
    report("contract-immutability", started, budget=10.0, detail=f"{attempts} rejected attempts, {len(holders)} holders")


def test_acceptance_taxonomy_fuzz(course):
    """10,000 random taxonomy mutations preserve every structural invariant."""
    started = time.monotonic()
    state = PublicationState(course)
    rng = random.Random(7001)
    seq = 0
    applied = 0
    discussions = []

    def synthetic(kind, payload, actor="t-tech-G01"):
        nonlocal seq
        seq += 1
        return Entry(
            seq=seq,
            at=datetime(2010, 1, 15, tzinfo=timezone.utc) + timedelta(seconds=seq),
            actor_id=actor,
            kind=kind,
            payload=payload,
        )

    def check_invariants():
        tax = state.taxonomy
        roots = {r.id: r.label for r in tax.roots()}
        assert roots == ROOT_LABELS
        labels = set()
        for node in tax.nodes.values():
            key = (node.parent_id, node.label.casefold())
            assert key not in labels
            labels.add(key)
            hops = 0
            cursor = node
            while cursor.parent_id is not None:
                cursor = tax.nodes[cursor.parent_id]  # KeyError would mean unreachable
                hops += 1
                assert hops <= len(tax.nodes), "cycle"
        for discussion in state.discussions.values():
            for tag in discussion.tags:
                assert tag in tax.nodes

    ops = 0
    while ops < 10_000:
        node_ids = sorted(state.taxonomy.nodes)
        op = rng.choices(["propose", "rename", "merge", "discussion"], weights=[40, 25, 25, 10])[0]
        try:
            if op == "propose":
                payload = {"op": "propose", "parent_id": rng.choice(node_ids), "label": f"subject {rng.randint(0, 2000)}"}
            elif op == "rename":
                payload = {"op": "rename", "node_id": rng.choice(node_ids), "label": f"label {rng.randint(0, 2000)}"}
            elif op == "merge":
                payload = {"op": "merge", "node_id": rng.choice(node_ids), "into_id": rng.choice(node_ids)}
            else:
                entry = synthetic(
                    EntryKind.FORUM_POST,
                    {"op": "start", "title": f"d{ops}", "text": "t", "tags": [rng.choice(node_ids)]},
                )
                state.apply(entry)
                ops += 1
                continue
            validate_taxonomy_change(state, payload)  # the store's dry-run gate
            state.apply(synthetic(EntryKind.TAXONOMY_PROPOSAL, payload))
            applied += 1
        except Exception as exc:
            from meshat.errors import MeshatError

            assert isinstance(exc, MeshatError), f"unexpected {type(exc).__name__}: {exc}"
        ops += 1
        if ops % 250 == 0:
            check_invariants()
    check_invariants()
    report("taxonomy-fuzz", started, budget=30.0, detail=f"{ops} ops, {applied} structural mutations applied")


def test_acceptance_publication_gating(tmp_path):
    """No published feed ever returns an unapproved group post."""
    started = time.monotonic()
    total_published = 0
    for seed in (201, 202, 203, 204):
        store, clock = build_random_course(tmp_path / str(seed), seed=seed, max_entries=300)
        approvals = {
            e.payload["post_seq"]: e
            for e in store.log.entries
            if e.kind is EntryKind.LEADER_CONFIRMATION
            and e.payload.get("scope") == "blog"
            and e.payload["decision"] == "published"
        }
        for gid, group in store.course.groups.items():
            for reader in [group.leader_id, group.member_ids[1], group.technical_tutor_id, "m-tech"]:
                feed = store.group_blog_feed(reader, gid)
                for post in feed:
                    assert post.state == "published"
                    confirmation = approvals.get(post.seq)
                    assert confirmation is not None, f"published post {post.seq} lacks a leader confirmation"
                    assert confirmation.actor_id == group.leader_id
                    total_published += 1
            # submitted/rejected posts never appear in the published feed
            for post in store.projection.publication.group_feed(gid, published_only=False):
                if post.state != "published":
                    assert post.seq not in {p.seq for p in store.group_blog_feed(group.leader_id, gid)}
    report("publication-gating", started, budget=30.0, detail=f"{total_published} published-feed hits audited")


def test_acceptance_durability_kill_mid_append(tmp_path):
    """SIGKILL the appending process 50 times; recovery always restores the acked prefix."""
    started = time.monotonic()
    clock = FixedClock(datetime(2010, 1, 15, 12, 0, tzinfo=timezone.utc))
    data_dir = tmp_path / "durable"
    data = DataStore(data_dir, clock=clock)
    store = data.init_course(reference_course_definition())
    store.import_roster(reference_roster_csv(n_groups=1, students_per_group=3))
    store.log.close()
    del store, data

    writer = HERE / "crash_writer.py"
    log_path = data_dir / "courses" / "pco-2009" / "events.log"
    env = dict(os.environ, PYTHONPATH=os.pathsep.join(sys.path))
    kills = 0
    torn_tails = 0
    last_acked = 0
    rng = random.Random(99)
    while kills < 50:
        proc = subprocess.Popen(
            [sys.executable, str(writer), str(data_dir)],
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            env=env,
            text=True,
        )
        acked_here = []
        deadline = time.monotonic() + 10
        want = rng.randint(1, 4)
        while len(acked_here) < want and time.monotonic() < deadline:
            line = proc.stdout.readline()
            if not line:
                break
            if line.startswith("ACK "):
                acked_here.append(int(line.split()[1]))
        time.sleep(rng.random() * 0.01)
        proc.kill()
        proc.wait()
        kills += 1
        if acked_here:
            assert acked_here[-1] > last_acked
            last_acked = acked_here[-1]

        # strict open only fails when the kill tore the final line
        try:
            strict = EventLog.open(log_path)
            strict.close()
        except CorruptLogError as exc:
            torn_tails += 1
            assert exc.last_good_seq >= last_acked

        recovered = EventLog.open(log_path, recover=True)
        seqs = [e.seq for e in recovered.entries]
        assert seqs == list(range(1, len(seqs) + 1)), "recovered log has holes"
        assert len(seqs) >= last_acked, f"acked entry lost: have {len(seqs)}, acked {last_acked}"
        recovered.close()

        # no view divergence: a reloaded store equals the brute-force oracle
        reloaded = CourseStore.load(data_dir / "courses" / "pco-2009", clock=clock, recover=True)
        records = [e.to_record() for e in reloaded.log.entries]
        view = reloaded._view_unchecked("G01", clock.now()).to_dict()
        assert_views_match(view, oracle_dashboard_view(records, reloaded.course, "G01", clock.now()))
        reloaded.log.close()

    assert last_acked > 0, "the writer never acknowledged anything"

    # A SIGKILL between buffered writes rarely tears a line on a local fs, so
    # finish the drill with a deterministic torn tail: the crash case the
    # recovery path exists for.
    blob = log_path.read_bytes()
    intact_seqs = len(EventLog.open(log_path).entries)
    log_path.write_bytes(blob[:-1000])
    with pytest.raises(CorruptLogError) as err:
        EventLog.open(log_path)
    assert err.value.last_good_seq == intact_seqs - 1
    recovered = EventLog.open(log_path, recover=True)
    assert [e.seq for e in recovered.entries] == list(range(1, intact_seqs))
    recovered.close()
    reloaded = CourseStore.load(data_dir / "courses" / "pco-2009", clock=clock, recover=True)
    records = [e.to_record() for e in reloaded.log.entries]
    view = reloaded._view_unchecked("G01", clock.now()).to_dict()
    assert_views_match(view, oracle_dashboard_view(records, reloaded.course, "G01", clock.now()))
    torn_tails += 1

    report(
        "durability-kill-mid-append",
        started,
        budget=120.0,
        detail=f"{kills} kills, {last_acked} acked entries, {torn_tails} torn tails trimmed",
    )
