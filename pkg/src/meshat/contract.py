"""Versioned six-question learning contract with phase-gated immutability.

Version 1 is written once while the course starts (setup or first phase) and
is frozen for the whole run; a single revision (version 2) becomes possible
after the course closes and may cite log entries from the blogs or the forum
as evidence. Both versions are retained verbatim; digests make tampering
checks cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

from .canon import canonical_json, dt_to_iso, sha256_hex
from .domain import Course, CourseState, RoleKind, TUTOR_ROLES
from .errors import NotFoundError, StateError, ValidationError
from .events import Entry, EntryKind, EventLog

CONTRACT_QUESTIONS = (
    "What do I want to learn?",
    "How will I learn this?",
    "Who can give support?",
    "When can I start?",
    "How will I know that I have learned?",
    "How will others realise that I have learned?",
)

EVIDENCE_KINDS = {EntryKind.BLOG_POST, EntryKind.GROUP_POST_SUBMISSION, EntryKind.FORUM_POST}


@dataclass(frozen=True)
class LearningContract:
    holder_id: str
    version: int
    answers: tuple[tuple[str, str], ...]
    created_at: datetime
    seq: int
    evidence_refs: tuple[int, ...] = ()

    def digest(self) -> str:
        return sha256_hex(
            canonical_json(
                {
                    "holder_id": self.holder_id,
                    "version": self.version,
                    "answers": [list(pair) for pair in self.answers],
                }
            )
        )

    def to_dict(self) -> dict:
        return {
            "holder_id": self.holder_id,
            "version": self.version,
            "answers": [list(pair) for pair in self.answers],
            "created_at": dt_to_iso(self.created_at),
            "evidence_refs": list(self.evidence_refs),
            "digest": self.digest(),
        }

    def to_text(self) -> str:
        """Plain-text export with the six questions as headings."""
        blocks = [f"Learning contract of {self.holder_id} (version {self.version})", ""]
        for question, answer in self.answers:
            blocks.append(f"## {question}")
            blocks.append(answer)
            blocks.append("")
        if self.evidence_refs:
            blocks.append(f"Evidence entries: {', '.join(str(s) for s in self.evidence_refs)}")
            blocks.append("")
        return "\n".join(blocks)


class ContractRegistry:
    """Projection of every holder's contract versions."""

    def __init__(self):
        self.contracts: dict[str, dict[int, LearningContract]] = {}

    def applies(self, entry: Entry) -> bool:
        return entry.kind is EntryKind.CONTRACT_REVISION

    def apply(self, entry: Entry) -> None:
        if not self.applies(entry):
            return
        payload = entry.payload
        contract = LearningContract(
            holder_id=entry.actor_id,
            version=payload["version"],
            answers=tuple((q, a) for q, a in payload["answers"]),
            created_at=entry.at,
            seq=entry.seq,
            evidence_refs=tuple(payload.get("evidence_refs") or ()),
        )
        self.contracts.setdefault(entry.actor_id, {})[contract.version] = contract

    def of(self, holder_id: str) -> dict[int, LearningContract]:
        return dict(self.contracts.get(holder_id, {}))

    def current(self, holder_id: str) -> LearningContract:
        versions = self.contracts.get(holder_id)
        if not versions:
            raise NotFoundError(f"{holder_id} holds no learning contract")
        return versions[max(versions)]


def pair_answers(answers: list[str]) -> list[list[str]]:
    """Attach the six canonical questions, in order, to bare answer strings."""
    if not isinstance(answers, list) or len(answers) != len(CONTRACT_QUESTIONS):
        raise ValidationError(
            f"exactly {len(CONTRACT_QUESTIONS)} answers are required, got {len(answers) if isinstance(answers, list) else answers!r}",
            field="answers",
        )
    for i, answer in enumerate(answers):
        if not isinstance(answer, str) or not answer.strip():
            raise ValidationError(f"answer {i + 1} must be a non-empty string", field="answers")
    return [[question, answer] for question, answer in zip(CONTRACT_QUESTIONS, answers)]


def check_question_order(answers: list[list[str]]) -> None:
    questions = tuple(pair[0] for pair in answers)
    if questions != CONTRACT_QUESTIONS:
        raise ValidationError("answers must carry the six canonical questions in order", field="answers")


def validate_holder(course: Course, holder_id: str) -> None:
    holder = course.require_actor(holder_id)
    if holder.has_role(RoleKind.STUDENT):
        return
    if any(b.kind in TUTOR_ROLES for b in holder.roles):
        if not course.tutor_contracts_enabled:
            raise ValidationError("tutor contracts are disabled for this course", field="holder_id")
        return
    raise ValidationError(f"{holder_id} cannot hold a learning contract", field="holder_id")


def validate_create(registry: ContractRegistry, course: Course, holder_id: str, state: CourseState) -> None:
    validate_holder(course, holder_id)
    if state not in (CourseState.SETUP, CourseState.PHASE1):
        raise StateError(f"contracts are written at project start; course is {state.value}")
    if registry.contracts.get(holder_id):
        raise ValidationError(f"{holder_id} already holds a contract", field="holder_id")


def validate_revision(
    registry: ContractRegistry,
    log: EventLog,
    holder_id: str,
    state: CourseState,
    evidence_refs: list[int],
) -> None:
    versions = registry.contracts.get(holder_id)
    if not versions or 1 not in versions:
        raise NotFoundError(f"{holder_id} holds no contract to revise")
    if state is not CourseState.CLOSED:
        raise StateError("the contract cannot be modified while the course runs")
    if 2 in versions:
        raise ValidationError(f"{holder_id} already revised their contract", field="holder_id")
    for seq in evidence_refs:
        entry = log.get(seq)
        if entry.kind not in EVIDENCE_KINDS:
            raise ValidationError(
                f"evidence seq {seq} is a {entry.kind.value}, not a blog or forum entry",
                field="evidence_refs",
            )
