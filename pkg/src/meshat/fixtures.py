"""Reference course fixture: the six-month, 12-group configuration.

Produces the course definition document and roster rows used throughout the
test suite and by `meshat make-fixture`: 12 groups of 8 students (the first
member of each group leads), one technical and one management tutor per
group, two managers, one teacher, one director. Calendar: four phases from
November 1st to April 15th.
"""

from __future__ import annotations

import io
import csv


def reference_course_definition(course_id: str = "pco-2009", year: int = 2009) -> dict:
    nov = f"{year}"
    nxt = f"{year + 1}"
    return {
        "schema_version": 1,
        "id": course_id,
        "name": "Collective Project",
        "start_date": f"{nov}-11-01",
        "end_date": f"{nxt}-04-15",
        "closing_presentation_date": f"{nxt}-04-20",
        "tutor_contracts": False,
        "phases": [
            {
                "index": 1,
                "label": "call for tender",
                "start_date": f"{nov}-11-01",
                "end_date": f"{nov}-11-30",
                "deliverables": [
                    {"id": "tender-answer", "label": "answer to the call for tender", "due_date": f"{nov}-11-30"},
                ],
            },
            {
                "index": 2,
                "label": "master plan",
                "start_date": f"{nov}-12-01",
                "end_date": f"{nov}-12-31",
                "deliverables": [
                    {"id": "master-plan", "label": "master plan", "due_date": f"{nov}-12-31"},
                    {"id": "dashboard-definition", "label": "project dashboard definition", "due_date": f"{nov}-12-31"},
                    {"id": "receipt-rules", "label": "rules of receipt", "due_date": f"{nov}-12-31"},
                ],
            },
            {
                "index": 3,
                "label": "development",
                "start_date": f"{nxt}-01-01",
                "end_date": f"{nxt}-03-31",
                "deliverables": [
                    {"id": "product-or-study", "label": "product or study", "due_date": f"{nxt}-03-31"},
                ],
            },
            {
                "index": 4,
                "label": "delivery",
                "start_date": f"{nxt}-04-01",
                "end_date": f"{nxt}-04-15",
                "deliverables": [
                    {"id": "technical-report", "label": "technical report", "due_date": f"{nxt}-04-15"},
                    {"id": "management-report", "label": "management report", "due_date": f"{nxt}-04-15"},
                ],
            },
        ],
    }


def reference_roster_rows(
    n_groups: int = 12, students_per_group: int = 8
) -> list[tuple[str, str, str, str]]:
    """Roster as (id, name, role, group) tuples, CSV-ready."""
    rows: list[tuple[str, str, str, str]] = []
    student_no = 0
    for g in range(1, n_groups + 1):
        gid = f"G{g:02d}"
        for m in range(students_per_group):
            student_no += 1
            sid = f"s{student_no:03d}"
            role = "project_leader" if m == 0 else "student"
            rows.append((sid, f"Student {student_no}", role, gid))
        rows.append((f"t-tech-{gid}", f"Technical tutor {gid}", "technical_tutor", gid))
        rows.append((f"t-mgmt-{gid}", f"Management tutor {gid}", "management_tutor", gid))
    rows.append(("m-tech", "Technical manager", "technical_manager", ""))
    rows.append(("m-mgmt", "Management manager", "management_manager", ""))
    rows.append(("teach1", "Teacher", "teacher", ""))
    rows.append(("dir1", "Director", "director", ""))
    return rows


def reference_roster_csv(n_groups: int = 12, students_per_group: int = 8) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "name", "role", "group"])
    writer.writerows(reference_roster_rows(n_groups, students_per_group))
    return buf.getvalue()
