"""Student-owned reflexive journal: facet entries, self-assessments, timelines.

Entries cover four observation areas (cognition, metacognition, motivation,
behaviour); the scalar facets use a 0..4 scale. The timeline projection is
lossless: every scalar facet of every entry appears exactly once in its
series, so tutors and the student see the same trajectory the log holds.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime

from .canon import dt_to_iso
from .domain import Course, KolbPhase
from .errors import NotFoundError, ValidationError
from .events import Entry, EntryKind

# Scalar facet series keys, in export order.
SCALAR_FACETS = (
    ("metacognition", "feeling_of_knowing"),
    ("metacognition", "judgment_of_learning"),
    ("motivation", "self_efficacy"),
    ("motivation", "task_value"),
    ("motivation", "interest"),
    ("motivation", "effort"),
)

DEFAULT_KOLB_TAGS = frozenset({KolbPhase.REFLECTIVE_OBSERVATION})


@dataclass(frozen=True)
class TimelinePoint:
    at: datetime
    seq: int
    value: int


@dataclass
class ReflexiveTimeline:
    actor_id: str
    series: dict[str, list[TimelinePoint]] = field(default_factory=dict)
    competency_trajectories: dict[str, list[TimelinePoint]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "actor_id": self.actor_id,
            "series": {
                facet: [{"at": dt_to_iso(p.at), "seq": p.seq, "value": p.value} for p in points]
                for facet, points in sorted(self.series.items())
            },
            "competency_trajectories": {
                cid: [{"at": dt_to_iso(p.at), "seq": p.seq, "value": p.value} for p in points]
                for cid, points in sorted(self.competency_trajectories.items())
            },
        }

    def to_csv(self) -> str:
        """Delimiter-separated export: facet, timestamp, value."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["facet", "timestamp", "value"])
        for facet, points in sorted(self.series.items()):
            for p in points:
                writer.writerow([facet, dt_to_iso(p.at), p.value])
        for cid, points in sorted(self.competency_trajectories.items()):
            for p in points:
                writer.writerow([f"competency:{cid}", dt_to_iso(p.at), p.value])
        return buf.getvalue()


class StudentJournal:
    """Projection of one student's journal entries, fed in seq order."""

    def __init__(self, actor_id: str):
        self.actor_id = actor_id
        self.facet_entries: list[Entry] = []
        self.assessments: list[Entry] = []

    def applies(self, entry: Entry) -> bool:
        return entry.kind is EntryKind.METACOG_ENTRY and entry.actor_id == self.actor_id

    def apply(self, entry: Entry) -> None:
        if not self.applies(entry):
            return
        if entry.payload.get("entry_type") == "self_assessment":
            self.assessments.append(entry)
        else:
            self.facet_entries.append(entry)

    def latest_assessment(self) -> dict[str, int]:
        """Summary view: the most recent rating per competency."""
        summary: dict[str, int] = {}
        for entry in self.assessments:
            summary.update(entry.payload["ratings"])
        return summary

    def timeline(self) -> ReflexiveTimeline:
        timeline = ReflexiveTimeline(self.actor_id)
        for entry in self.facet_entries:
            for section, key in SCALAR_FACETS:
                value = (entry.payload.get(section) or {}).get(key)
                if value is not None:
                    timeline.series.setdefault(f"{section}.{key}", []).append(
                        TimelinePoint(entry.at, entry.seq, value)
                    )
        for entry in self.assessments:
            for cid, value in sorted(entry.payload["ratings"].items()):
                timeline.competency_trajectories.setdefault(cid, []).append(
                    TimelinePoint(entry.at, entry.seq, value)
                )
        return timeline


def validate_facet_entry(payload: dict) -> None:
    if payload.get("entry_type") != "facets":
        raise ValidationError("journal entry must carry entry_type=facets", field="entry_type")


def validate_self_assessment(course: Course, payload: dict) -> None:
    for cid in payload["ratings"]:
        if cid not in course.competencies:
            raise NotFoundError(f"unknown competency {cid!r}")


def journal_kolb_tags(supplied: frozenset[KolbPhase]) -> frozenset[KolbPhase]:
    """Journal entries default to the reflective-observation tag iff untagged."""
    return supplied if supplied else DEFAULT_KOLB_TAGS
