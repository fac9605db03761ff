"""The shared schedule: phase calendar, deliverable due dates, added items.

The fixed part derives from the course definition; coordination items are
added, updated or removed through schedule_change entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, time, timezone

from .canon import dt_to_iso, iso_to_dt
from .domain import Course
from .errors import NotFoundError, ValidationError
from .events import Entry, EntryKind


@dataclass
class ScheduleItem:
    id: str
    title: str
    starts_at: datetime
    ends_at: datetime
    scope: str  # "course" | "group"
    group_id: str | None
    source: str  # "phase" | "deliverable" | "milestone" | "added"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "starts_at": dt_to_iso(self.starts_at),
            "ends_at": dt_to_iso(self.ends_at),
            "scope": self.scope,
            "group_id": self.group_id,
            "source": self.source,
        }


def _day(d, end: bool = False) -> datetime:
    return datetime.combine(d, time(23, 59, 59) if end else time(0, 0), tzinfo=timezone.utc)


class ScheduleState:
    """Projection of added items; merge with the derived calendar on read."""

    def __init__(self):
        self.items: dict[str, ScheduleItem] = {}

    def applies(self, entry: Entry) -> bool:
        return entry.kind is EntryKind.SCHEDULE_CHANGE

    def apply(self, entry: Entry) -> None:
        if not self.applies(entry):
            return
        payload = entry.payload
        op, item_id = payload["op"], payload["item_id"]
        if op == "add":
            if item_id in self.items:
                raise ValidationError(f"schedule item {item_id!r} already exists", field="item_id")
            self.items[item_id] = ScheduleItem(
                id=item_id,
                title=payload["title"],
                starts_at=iso_to_dt(payload["starts_at"]),
                ends_at=iso_to_dt(payload["ends_at"]),
                scope=payload["scope"],
                group_id=payload.get("group_id"),
                source="added",
            )
        elif op == "update":
            item = self.items.get(item_id)
            if item is None:
                raise NotFoundError(f"unknown schedule item {item_id!r}")
            if "title" in payload:
                item.title = payload["title"]
            if "starts_at" in payload:
                item.starts_at = iso_to_dt(payload["starts_at"])
            if "ends_at" in payload:
                item.ends_at = iso_to_dt(payload["ends_at"])
        else:
            if item_id not in self.items:
                raise NotFoundError(f"unknown schedule item {item_id!r}")
            del self.items[item_id]

    def listing(self, course: Course, group_id: str | None = None) -> list[ScheduleItem]:
        """Derived calendar plus added items, start-ordered.

        group_id limits group-scoped items to that group; course-scoped
        items always show.
        """
        items: list[ScheduleItem] = []
        for phase in course.phases:
            items.append(
                ScheduleItem(
                    id=f"phase-{phase.index}",
                    title=phase.label,
                    starts_at=_day(phase.start_date),
                    ends_at=_day(phase.end_date, end=True),
                    scope="course",
                    group_id=None,
                    source="phase",
                )
            )
            for deliverable in phase.expected_deliverables:
                items.append(
                    ScheduleItem(
                        id=f"due-{deliverable.id}",
                        title=f"{deliverable.label} due",
                        starts_at=_day(deliverable.due_date),
                        ends_at=_day(deliverable.due_date, end=True),
                        scope="course",
                        group_id=None,
                        source="deliverable",
                    )
                )
        if course.closing_presentation_date:
            items.append(
                ScheduleItem(
                    id="closing-presentation",
                    title="closing presentation",
                    starts_at=_day(course.closing_presentation_date),
                    ends_at=_day(course.closing_presentation_date, end=True),
                    scope="course",
                    group_id=None,
                    source="milestone",
                )
            )
        for item in self.items.values():
            if item.scope == "group" and group_id is not None and item.group_id != group_id:
                continue
            items.append(item)
        return sorted(items, key=lambda i: (i.starts_at, i.id))
