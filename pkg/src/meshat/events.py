"""Append-only, replayable per-course event log.

One file per course: a header line (schema_version + course id), then one
canonical key-ordered JSON record per entry, UTF-8, LF terminators. Appends
are fsynced before they are acknowledged, so after a crash the log contains
every acknowledged entry plus at most one torn, never-acknowledged tail.

Strict open refuses any anomaly and names the last intact seq; recovery open
discards only an unterminated final line.
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from .canon import canonical_json, dt_to_iso, iso_to_date, iso_to_dt, sha256_hex
from .domain import CourseState, KolbPhase, TutorRoleTag
from .errors import CorruptLogError, StateError, ValidationError

LOG_SCHEMA_VERSION = 1


class EntryKind(str, Enum):
    TIME_LOG = "time_log"
    TASK_UPDATE = "task_update"
    MOOD_ENTRY = "mood_entry"
    DELIVERABLE_SUBMISSION = "deliverable_submission"
    METACOG_ENTRY = "metacog_entry"
    BLOG_POST = "blog_post"
    GROUP_POST_SUBMISSION = "group_post_submission"
    LEADER_CONFIRMATION = "leader_confirmation"
    TUTOR_NOTE = "tutor_note"
    ASSESSMENT = "assessment"
    FORUM_POST = "forum_post"
    TAXONOMY_PROPOSAL = "taxonomy_proposal"
    CONTRACT_REVISION = "contract_revision"
    SCHEDULE_CHANGE = "schedule_change"


_RUNNING = {CourseState.PHASE1, CourseState.PHASE2, CourseState.PHASE3, CourseState.PHASE4}

# Which calendar states accept which kinds. Contract revisions are legal only
# at the start (v1) and after close (v2); the tutoring team keeps writing
# notes, assessments and forum content after close.
KIND_VALID_STATES: dict[EntryKind, set[CourseState]] = {
    EntryKind.TIME_LOG: set(_RUNNING),
    EntryKind.TASK_UPDATE: set(_RUNNING),
    EntryKind.MOOD_ENTRY: set(_RUNNING),
    EntryKind.DELIVERABLE_SUBMISSION: set(_RUNNING),
    EntryKind.METACOG_ENTRY: set(_RUNNING),
    EntryKind.BLOG_POST: set(_RUNNING),
    EntryKind.GROUP_POST_SUBMISSION: set(_RUNNING),
    EntryKind.LEADER_CONFIRMATION: set(_RUNNING),
    EntryKind.TUTOR_NOTE: _RUNNING | {CourseState.CLOSED},
    EntryKind.ASSESSMENT: _RUNNING | {CourseState.CLOSED},
    EntryKind.FORUM_POST: _RUNNING | {CourseState.CLOSED},
    EntryKind.TAXONOMY_PROPOSAL: _RUNNING | {CourseState.CLOSED},
    EntryKind.CONTRACT_REVISION: {CourseState.SETUP, CourseState.PHASE1, CourseState.CLOSED},
    EntryKind.SCHEDULE_CHANGE: {CourseState.SETUP} | _RUNNING,
}

# Kinds whose still-pending proposals the author may retract with a
# {"tombstone_of": seq} payload.
RETRACTABLE_KINDS = {EntryKind.TIME_LOG, EntryKind.TASK_UPDATE, EntryKind.MOOD_ENTRY}


@dataclass(frozen=True)
class Entry:
    seq: int
    at: datetime
    actor_id: str
    kind: EntryKind
    payload: dict
    group_id: str | None = None
    kolb_tags: frozenset[KolbPhase] = frozenset()
    request_id: str | None = None

    def is_tombstone(self) -> bool:
        return "tombstone_of" in self.payload

    def to_record(self) -> dict:
        return {
            "seq": self.seq,
            "at": dt_to_iso(self.at),
            "actor_id": self.actor_id,
            "group_id": self.group_id,
            "kind": self.kind.value,
            "payload": self.payload,
            "kolb_tags": sorted(t.value for t in self.kolb_tags),
            "request_id": self.request_id,
        }

    def to_line(self) -> str:
        return canonical_json(self.to_record())

    @classmethod
    def from_record(cls, record: dict) -> "Entry":
        try:
            kind = EntryKind(record["kind"])
            tags = frozenset(KolbPhase(t) for t in record.get("kolb_tags", []))
            return cls(
                seq=int(record["seq"]),
                at=iso_to_dt(record["at"], field="at"),
                actor_id=record["actor_id"],
                kind=kind,
                payload=record["payload"],
                group_id=record.get("group_id"),
                kolb_tags=tags,
                request_id=record.get("request_id"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed entry record: {exc}", field="entry")


@dataclass(frozen=True)
class EntryDraft:
    actor_id: str
    kind: EntryKind
    payload: dict
    group_id: str | None = None
    kolb_tags: frozenset[KolbPhase] = frozenset()
    request_id: str | None = None


# --- payload schema validation -------------------------------------------

def _fail(kind: EntryKind, message: str, field_name: str) -> None:
    raise ValidationError(f"{kind.value}: {message}", field=field_name)


def _check_str(kind: EntryKind, payload: dict, key: str, required: bool = True, allow_empty: bool = False) -> None:
    value = payload.get(key)
    if value is None:
        if required:
            _fail(kind, f"{key} is required", key)
        return
    if not isinstance(value, str) or (not allow_empty and not value.strip()):
        _fail(kind, f"{key} must be a non-empty string", key)


def _check_int_range(kind: EntryKind, value, key: str, lo: int, hi: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not (lo <= value <= hi):
        _fail(kind, f"{key} must be an integer in {lo}..{hi}, got {value!r}", key)


def _check_str_list(kind: EntryKind, value, key: str) -> None:
    if not isinstance(value, list) or any(not isinstance(v, str) or not v for v in value):
        _fail(kind, f"{key} must be a list of non-empty strings", key)


def _validate_time_log(payload: dict) -> None:
    kind = EntryKind.TIME_LOG
    hours = payload.get("hours")
    if not isinstance(hours, (int, float)) or isinstance(hours, bool) or not math.isfinite(hours) or hours < 0:
        _fail(kind, f"hours must be a finite number >= 0, got {hours!r}", "hours")
    iso_to_date(payload.get("occurred_on"), field="occurred_on")
    if "task_id" in payload and payload["task_id"] is not None:
        _check_str(kind, payload, "task_id")


def _validate_task_update(payload: dict) -> None:
    kind = EntryKind.TASK_UPDATE
    _check_str(kind, payload, "task_id")
    op = payload.get("op")
    if op not in ("create", "update"):
        _fail(kind, f"op must be 'create' or 'update', got {op!r}", "op")
    if op == "create":
        _check_str(kind, payload, "title")
        iso_to_date(payload.get("planned_start"), field="planned_start")
        iso_to_date(payload.get("planned_end"), field="planned_end")
        if payload["planned_start"] > payload["planned_end"]:
            _fail(kind, "planned_start after planned_end", "planned_start")
        effort = payload.get("effort_estimate")
        if not isinstance(effort, (int, float)) or isinstance(effort, bool) or not math.isfinite(effort) or effort <= 0:
            _fail(kind, f"effort_estimate must be > 0, got {effort!r}", "effort_estimate")
    else:
        mutable = {"pct_complete", "title", "planned_start", "planned_end", "effort_estimate",
                   "assignee_ids", "depends_on", "correction"}
        if not mutable & set(payload.keys()):
            _fail(kind, "update changes nothing", "op")
    if "pct_complete" in payload:
        _check_int_range(kind, payload["pct_complete"], "pct_complete", 0, 100)
    if "planned_start" in payload and op == "update":
        iso_to_date(payload["planned_start"], field="planned_start")
    if "planned_end" in payload and op == "update":
        iso_to_date(payload["planned_end"], field="planned_end")
    if "effort_estimate" in payload and op == "update":
        effort = payload["effort_estimate"]
        if not isinstance(effort, (int, float)) or isinstance(effort, bool) or not math.isfinite(effort) or effort <= 0:
            _fail(kind, f"effort_estimate must be > 0, got {effort!r}", "effort_estimate")
    for key in ("assignee_ids", "depends_on"):
        if key in payload and payload[key] is not None:
            _check_str_list(kind, payload[key], key)
    if "correction" in payload and not isinstance(payload["correction"], bool):
        _fail(kind, "correction must be a boolean", "correction")


def _validate_mood_entry(payload: dict) -> None:
    kind = EntryKind.MOOD_ENTRY
    for axis in ("motivation", "satisfaction", "client_relationship"):
        _check_int_range(kind, payload.get(axis), axis, 1, 5)


def _validate_deliverable_submission(payload: dict) -> None:
    kind = EntryKind.DELIVERABLE_SUBMISSION
    _check_str(kind, payload, "deliverable_id")
    iso_to_date(payload.get("submitted_on"), field="submitted_on")


_SCALAR_FACETS = {
    "metacognition": ("feeling_of_knowing", "judgment_of_learning"),
    "motivation": ("self_efficacy", "task_value", "interest", "effort"),
}
_TEXT_FACETS = {
    "cognition": ("prior_knowledge_note", "plan"),
    "metacognition": ("content_evaluation",),
    "behaviour": ("help_seeking", "modified_conditions", "difficulty_handling"),
}
_LIST_FACETS = {"cognition": ("sub_goals", "strategies")}


def _validate_metacog_entry(payload: dict) -> None:
    kind = EntryKind.METACOG_ENTRY
    entry_type = payload.get("entry_type")
    if entry_type == "self_assessment":
        ratings = payload.get("ratings")
        if not isinstance(ratings, dict) or not ratings:
            _fail(kind, "ratings must be a non-empty map", "ratings")
        for cid, value in ratings.items():
            if not isinstance(cid, str) or not cid:
                _fail(kind, "rating keys must be competency ids", "ratings")
            _check_int_range(kind, value, f"ratings[{cid}]", 0, 4)
        return
    if entry_type != "facets":
        _fail(kind, f"entry_type must be 'facets' or 'self_assessment', got {entry_type!r}", "entry_type")
    non_empty = False
    for section, keys in _SCALAR_FACETS.items():
        block = payload.get(section) or {}
        if not isinstance(block, dict):
            _fail(kind, f"{section} must be an object", section)
        for key in keys:
            value = block.get(key)
            if value is not None:
                _check_int_range(kind, value, f"{section}.{key}", 0, 4)
                non_empty = True
    for section, keys in _TEXT_FACETS.items():
        block = payload.get(section) or {}
        if not isinstance(block, dict):
            _fail(kind, f"{section} must be an object", section)
        for key in keys:
            value = block.get(key)
            if value is not None:
                if not isinstance(value, str):
                    _fail(kind, f"{section}.{key} must be a string", f"{section}.{key}")
                if value.strip():
                    non_empty = True
    for section, keys in _LIST_FACETS.items():
        block = payload.get(section) or {}
        for key in keys:
            value = block.get(key)
            if value is not None:
                _check_str_list(kind, value, f"{section}.{key}")
                if value:
                    non_empty = True
    if not non_empty:
        _fail(kind, "entry must fill at least one facet", "entry")


def _validate_blog_post(payload: dict) -> None:
    _check_str(EntryKind.BLOG_POST, payload, "body")


def _validate_group_post_submission(payload: dict) -> None:
    _check_str(EntryKind.GROUP_POST_SUBMISSION, payload, "body")


def _validate_leader_confirmation(payload: dict) -> None:
    kind = EntryKind.LEADER_CONFIRMATION
    scope = payload.get("scope")
    if scope == "dashboard":
        seqs = payload.get("confirmed_seqs")
        if (
            not isinstance(seqs, list)
            or not seqs
            or any(not isinstance(s, int) or isinstance(s, bool) or s <= 0 for s in seqs)
        ):
            _fail(kind, "confirmed_seqs must be a non-empty list of entry seqs", "confirmed_seqs")
        if len(set(seqs)) != len(seqs):
            _fail(kind, "confirmed_seqs contains duplicates", "confirmed_seqs")
    elif scope == "blog":
        post_seq = payload.get("post_seq")
        if not isinstance(post_seq, int) or isinstance(post_seq, bool) or post_seq <= 0:
            _fail(kind, "post_seq must be an entry seq", "post_seq")
        if payload.get("decision") not in ("published", "rejected"):
            _fail(kind, "decision must be 'published' or 'rejected'", "decision")
    else:
        _fail(kind, f"scope must be 'dashboard' or 'blog', got {scope!r}", "scope")


def _validate_tutor_note(payload: dict) -> None:
    kind = EntryKind.TUTOR_NOTE
    if payload.get("scope_kind") not in ("group", "student"):
        _fail(kind, "scope_kind must be 'group' or 'student'", "scope_kind")
    _check_str(kind, payload, "scope_id")
    _check_str(kind, payload, "text")
    tag = payload.get("tutor_role_tag")
    if tag is not None:
        try:
            TutorRoleTag(tag)
        except ValueError:
            _fail(kind, f"unknown tutor_role_tag {tag!r}", "tutor_role_tag")


def _validate_assessment(payload: dict) -> None:
    kind = EntryKind.ASSESSMENT
    _check_str(kind, payload, "student_id")
    ratings = payload.get("ratings")
    if not isinstance(ratings, dict) or not ratings:
        _fail(kind, "ratings must be a non-empty map", "ratings")
    for cid, value in ratings.items():
        _check_int_range(kind, value, f"ratings[{cid}]", 0, 4)
    if "comment" in payload and not isinstance(payload["comment"], str):
        _fail(kind, "comment must be a string", "comment")


def _validate_forum_post(payload: dict) -> None:
    kind = EntryKind.FORUM_POST
    op = payload.get("op")
    if op == "start":
        _check_str(kind, payload, "title")
        _check_str(kind, payload, "text")
        tags = payload.get("tags")
        if not isinstance(tags, list) or not tags:
            _fail(kind, "tags must be a non-empty list of taxonomy node ids", "tags")
        _check_str_list(kind, tags, "tags")
    elif op == "reply":
        _check_str(kind, payload, "discussion_id")
        _check_str(kind, payload, "text")
    else:
        _fail(kind, f"op must be 'start' or 'reply', got {op!r}", "op")


def _validate_taxonomy_proposal(payload: dict) -> None:
    kind = EntryKind.TAXONOMY_PROPOSAL
    op = payload.get("op")
    if op == "propose":
        _check_str(kind, payload, "parent_id")
        _check_str(kind, payload, "label")
    elif op == "establish":
        _check_str(kind, payload, "node_id")
    elif op == "rename":
        _check_str(kind, payload, "node_id")
        _check_str(kind, payload, "label")
    elif op == "merge":
        _check_str(kind, payload, "node_id")
        _check_str(kind, payload, "into_id")
    else:
        _fail(kind, f"op must be propose/establish/rename/merge, got {op!r}", "op")


def _validate_contract_revision(payload: dict) -> None:
    kind = EntryKind.CONTRACT_REVISION
    version = payload.get("version")
    if version not in (1, 2):
        _fail(kind, f"version must be 1 or 2, got {version!r}", "version")
    answers = payload.get("answers")
    if not isinstance(answers, list) or len(answers) != 6:
        _fail(kind, "answers must be a list of 6 [question, answer] pairs", "answers")
    for pair in answers:
        if not isinstance(pair, list) or len(pair) != 2 or any(not isinstance(x, str) for x in pair):
            _fail(kind, "each answer must be a [question, answer] string pair", "answers")
    refs = payload.get("evidence_refs")
    if version == 1:
        if refs:
            _fail(kind, "version 1 carries no evidence refs", "evidence_refs")
    else:
        if refs is None:
            refs = []
        if not isinstance(refs, list) or any(not isinstance(r, int) or isinstance(r, bool) or r <= 0 for r in refs):
            _fail(kind, "evidence_refs must be a list of entry seqs", "evidence_refs")


def _validate_schedule_change(payload: dict) -> None:
    kind = EntryKind.SCHEDULE_CHANGE
    op = payload.get("op")
    if op not in ("add", "update", "remove"):
        _fail(kind, f"op must be add/update/remove, got {op!r}", "op")
    _check_str(kind, payload, "item_id")
    if op in ("add", "update"):
        if op == "add" or "title" in payload:
            _check_str(kind, payload, "title")
        if op == "add" or "starts_at" in payload:
            iso_to_dt(payload.get("starts_at"), field="starts_at")
        if op == "add" or "ends_at" in payload:
            iso_to_dt(payload.get("ends_at"), field="ends_at")
        if op == "add":
            scope = payload.get("scope")
            if scope not in ("course", "group"):
                _fail(kind, f"scope must be 'course' or 'group', got {scope!r}", "scope")
            if scope == "group":
                _check_str(kind, payload, "group_id")


_VALIDATORS: dict[EntryKind, Callable[[dict], None]] = {
    EntryKind.TIME_LOG: _validate_time_log,
    EntryKind.TASK_UPDATE: _validate_task_update,
    EntryKind.MOOD_ENTRY: _validate_mood_entry,
    EntryKind.DELIVERABLE_SUBMISSION: _validate_deliverable_submission,
    EntryKind.METACOG_ENTRY: _validate_metacog_entry,
    EntryKind.BLOG_POST: _validate_blog_post,
    EntryKind.GROUP_POST_SUBMISSION: _validate_group_post_submission,
    EntryKind.LEADER_CONFIRMATION: _validate_leader_confirmation,
    EntryKind.TUTOR_NOTE: _validate_tutor_note,
    EntryKind.ASSESSMENT: _validate_assessment,
    EntryKind.FORUM_POST: _validate_forum_post,
    EntryKind.TAXONOMY_PROPOSAL: _validate_taxonomy_proposal,
    EntryKind.CONTRACT_REVISION: _validate_contract_revision,
    EntryKind.SCHEDULE_CHANGE: _validate_schedule_change,
}


def validate_payload(kind: EntryKind, payload: dict) -> None:
    """Schema-level validation of a payload against its kind.

    Semantic checks that need course context (membership, referenced ids)
    belong to the owning module, not here.
    """
    if not isinstance(payload, dict):
        raise ValidationError(f"{kind.value}: payload must be an object", field="payload")
    if "tombstone_of" in payload:
        if kind not in RETRACTABLE_KINDS:
            raise ValidationError(f"{kind.value}: kind is not retractable", field="tombstone_of")
        target = payload["tombstone_of"]
        if not isinstance(target, int) or isinstance(target, bool) or target <= 0:
            raise ValidationError("tombstone_of must be an entry seq", field="tombstone_of")
        return
    _VALIDATORS[kind](payload)


# --- the log itself --------------------------------------------------------

class EventLog:
    """Per-course append-only log backed by one JSONL file."""

    def __init__(self, path: Path, course_id: str, entries: list[Entry], request_index: dict[str, int]):
        self.path = Path(path)
        self.course_id = course_id
        self._entries = entries
        self._request_index = request_index
        self._lock = threading.Lock()
        self._fh = open(self.path, "a", encoding="utf-8")

    # -- construction --

    @classmethod
    def create(cls, path: Path, course_id: str) -> "EventLog":
        path = Path(path)
        if path.exists():
            raise ValidationError(f"log already exists at {path}", field="path")
        path.parent.mkdir(parents=True, exist_ok=True)
        header = canonical_json({"course_id": course_id, "schema_version": LOG_SCHEMA_VERSION})
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return cls(path, course_id, [], {})

    @classmethod
    def open(cls, path: Path, recover: bool = False) -> "EventLog":
        """Load and validate a log file.

        recover=False: any anomaly raises CorruptLogError naming the last
        intact seq. recover=True: an unterminated or unparseable FINAL line
        (a torn write that was never acknowledged) is discarded; everything
        else still refuses.
        """
        path = Path(path)
        raw = path.read_bytes()
        lines = raw.split(b"\n")
        trailing_complete = len(lines) > 0 and lines[-1] == b""
        if trailing_complete:
            lines = lines[:-1]
        if not lines:
            raise CorruptLogError("log file is empty (missing header)", last_good_seq=0)

        import json as _json

        def parse_line(data: bytes) -> dict:
            return _json.loads(data.decode("utf-8"))

        try:
            header = parse_line(lines[0])
            course_id = header["course_id"]
            if header.get("schema_version") != LOG_SCHEMA_VERSION:
                raise ValueError(f"schema_version {header.get('schema_version')!r}")
        except (ValueError, KeyError, UnicodeDecodeError) as exc:
            raise CorruptLogError(f"bad header line: {exc}", last_good_seq=0)

        entries: list[Entry] = []
        request_index: dict[str, int] = {}
        truncate_at: int | None = None
        offset = len(lines[0]) + 1
        for i, line in enumerate(lines[1:], start=1):
            is_last = i == len(lines) - 1
            torn = is_last and not trailing_complete
            try:
                record = parse_line(line)
                entry = Entry.from_record(record)
                if entry.seq != len(entries) + 1:
                    raise ValidationError(
                        f"seq {entry.seq} out of order (expected {len(entries) + 1})", field="seq"
                    )
                validate_payload(entry.kind, entry.payload)
            except (ValueError, ValidationError, UnicodeDecodeError, KeyError) as exc:
                last_good = len(entries)
                if torn:
                    if recover:
                        truncate_at = offset
                        break
                    raise CorruptLogError(
                        f"truncated final line after seq {last_good}", last_good_seq=last_good
                    )
                raise CorruptLogError(f"invalid record at line {i + 1}: {exc}", last_good_seq=last_good)
            if torn and not recover:
                # Parsed fine but the terminator is missing: the write was cut.
                raise CorruptLogError(
                    f"unterminated final line after seq {len(entries)}", last_good_seq=len(entries)
                )
            if torn and recover:
                truncate_at = offset
                break
            entries.append(entry)
            if entry.request_id:
                request_index[entry.request_id] = entry.seq
            offset += len(line) + 1

        if truncate_at is not None:
            with open(path, "ab") as fh:
                fh.truncate(truncate_at)
                fh.flush()
                os.fsync(fh.fileno())

        return cls(path, course_id, entries, request_index)

    def close(self) -> None:
        self._fh.close()

    # -- writes --

    def append(self, draft: EntryDraft, state: CourseState, at: datetime) -> Entry:
        """Validate, persist (durable before acknowledgement) and return the entry.

        A draft resubmitted with a known request_id returns the original
        entry unchanged (idempotent appends).
        """
        with self._lock:
            if draft.request_id and draft.request_id in self._request_index:
                return self._entries[self._request_index[draft.request_id] - 1]
            if state not in KIND_VALID_STATES[draft.kind]:
                raise StateError(
                    f"entries of kind {draft.kind.value} are not accepted while the course is {state.value}"
                )
            validate_payload(draft.kind, draft.payload)
            if "tombstone_of" in draft.payload:
                self._check_tombstone(draft)
            entry = Entry(
                seq=len(self._entries) + 1,
                at=at,
                actor_id=draft.actor_id,
                kind=draft.kind,
                payload=draft.payload,
                group_id=draft.group_id,
                kolb_tags=draft.kolb_tags,
                request_id=draft.request_id,
            )
            line = entry.to_line()
            self._fh.write(line + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._entries.append(entry)
            if entry.request_id:
                self._request_index[entry.request_id] = entry.seq
            return entry

    def _check_tombstone(self, draft: EntryDraft) -> None:
        target_seq = draft.payload["tombstone_of"]
        if target_seq > len(self._entries):
            raise ValidationError(f"tombstone target seq {target_seq} does not exist", field="tombstone_of")
        target = self._entries[target_seq - 1]
        if target.kind is not draft.kind:
            raise ValidationError(
                f"tombstone kind {draft.kind.value} does not match target kind {target.kind.value}",
                field="tombstone_of",
            )
        if target.actor_id != draft.actor_id:
            raise ValidationError("only the author may retract an entry", field="tombstone_of")

    # -- reads --

    @property
    def entries(self) -> list[Entry]:
        return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def last_seq(self) -> int:
        return len(self._entries)

    def get(self, seq: int) -> Entry:
        if not 1 <= seq <= len(self._entries):
            raise ValidationError(f"no entry with seq {seq}", field="seq")
        return self._entries[seq - 1]

    def tombstoned_seqs(self) -> set[int]:
        return {e.payload["tombstone_of"] for e in self._entries if e.is_tombstone()}

    def replay(
        self,
        actor: str | None = None,
        group: str | None = None,
        kind: EntryKind | None = None,
        since: datetime | None = None,
        until: datetime | None = None,
        include_tombstoned: bool = False,
    ) -> list[Entry]:
        """Entries in seq order matching every given filter conjunct.

        By default retraction markers and their targets are hidden; tutors
        pass include_tombstoned=True to audit them.
        """
        hidden: set[int] = set()
        if not include_tombstoned:
            for e in self._entries:
                if e.is_tombstone():
                    hidden.add(e.seq)
                    hidden.add(e.payload["tombstone_of"])
        out = []
        for e in self._entries:
            if e.seq in hidden:
                continue
            if actor is not None and e.actor_id != actor:
                continue
            if group is not None and e.group_id != group:
                continue
            if kind is not None and e.kind is not kind:
                continue
            if since is not None and e.at < since:
                continue
            if until is not None and e.at > until:
                continue
            out.append(e)
        return out

    # -- export / digest --

    def export_text(self) -> str:
        header = canonical_json({"course_id": self.course_id, "schema_version": LOG_SCHEMA_VERSION})
        body = "".join(e.to_line() + "\n" for e in self._entries)
        return header + "\n" + body

    def digest(self, upto_seq: int | None = None) -> str:
        upto = len(self._entries) if upto_seq is None else upto_seq
        return sha256_hex("".join(self._entries[i].to_line() + "\n" for i in range(upto)))
