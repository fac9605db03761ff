"""Offline group reports: figures rendered next to their delimited exports.

For each group the report directory receives the dashboard view (canonical
JSON), the Gantt/working-time/mood/indicator tables as CSV, and a PNG
rendering of each table. Figures are drawn with the Agg backend so reports
work headless.
"""

from __future__ import annotations

import csv
import io
from datetime import datetime
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates
import matplotlib.pyplot as plt

from .canon import canonical_json
from .monitor import INDICATOR_KEYS
from .store import CourseStore

MOOD_AXES = ("motivation", "satisfaction", "client_relationship")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def render_group_report(store: CourseStore, group_id: str, out_dir: Path, step_days: int = 7) -> list[Path]:
    """Produce every artifact for one group; returns the files written."""
    group = store.course.require_group(group_id)
    out = Path(out_dir) / group_id
    out.mkdir(parents=True, exist_ok=True)
    now = store.clock.now()
    dashboard = store._dashboard(group_id)
    view = store._view_unchecked(group_id, now)
    written: list[Path] = []

    view_path = out / "view.json"
    view_path.write_text(canonical_json(view.to_dict()) + "\n", encoding="utf-8")
    written.append(view_path)

    # Gantt: rows + bar rendering
    gantt_rows = dashboard.gantt_rows()
    gantt_csv = out / "gantt.csv"
    _write_csv(
        gantt_csv,
        ["task", "start", "end", "pct", "depends_on"],
        [[t, s.isoformat(), e.isoformat(), pct, ";".join(deps)] for t, s, e, pct, deps in gantt_rows],
    )
    written.append(gantt_csv)
    written.append(_render_gantt(gantt_rows, group_id, out / "gantt.png"))

    # Working time per member
    working = view.working_time_by_member
    wt_csv = out / "working_time.csv"
    _write_csv(wt_csv, ["member", "hours"], [[m, f"{h:.2f}"] for m, h in sorted(working.items())])
    written.append(wt_csv)
    written.append(_render_working_time(working, group_id, out / "working_time.png"))

    # Mood trend: confirmed entries over time
    moods = sorted(dashboard.moods, key=lambda m: (m.at, m.seq))
    mood_csv = out / "mood_trend.csv"
    _write_csv(
        mood_csv,
        ["timestamp", "member", *MOOD_AXES],
        [[m.at.isoformat(), m.actor_id, m.motivation, m.satisfaction, m.client_relationship] for m in moods],
    )
    written.append(mood_csv)
    written.append(_render_mood(moods, group_id, out / "mood_trend.png"))

    # Indicator history over rolling windows
    history = store._indicator_history_unchecked(group_id, step_days=step_days)
    ind_csv = out / "indicators.csv"
    _write_csv(ind_csv, ["group", "window_end", *INDICATOR_KEYS], [row.to_row() for row in history])
    written.append(ind_csv)
    written.append(_render_indicators(history, group_id, out / "indicators.png"))

    return written


def _render_gantt(rows, group_id: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(9, max(2.0, 0.5 * len(rows) + 1)))
    if rows:
        for i, (task, start, end, pct, _deps) in enumerate(rows):
            span = max((end - start).days, 1)
            ax.barh(i, span, left=mdates.date2num(start), height=0.6, color="#c5d5e8", edgecolor="#46627f")
            ax.barh(i, span * pct / 100.0, left=mdates.date2num(start), height=0.6, color="#46627f")
            ax.text(mdates.date2num(end) + 0.5, i, f"{pct}%", va="center", fontsize=8)
        ax.set_yticks(range(len(rows)))
        ax.set_yticklabels([r[0] for r in rows])
        ax.invert_yaxis()
        ax.xaxis.set_major_formatter(mdates.DateFormatter("%b %d"))
        ax.xaxis_date()
    else:
        ax.text(0.5, 0.5, "no tasks", ha="center", va="center")
        ax.set_axis_off()
    ax.set_title(f"{group_id} task plan and progress")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _render_working_time(working: dict[str, float], group_id: str, path: Path) -> Path:
    members = sorted(working)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(len(members)), [working[m] for m in members], color="#5a845a")
    ax.set_xticks(range(len(members)))
    ax.set_xticklabels(members, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("confirmed hours")
    ax.set_title(f"{group_id} working time by member")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _render_mood(moods, group_id: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 4))
    if moods:
        times = [m.at for m in moods]
        for axis, marker in zip(MOOD_AXES, ("o", "s", "^")):
            ax.plot(times, [getattr(m, axis) for m in moods], marker=marker, ms=4, lw=1, label=axis)
        ax.set_ylim(0.5, 5.5)
        ax.legend(fontsize=8)
        ax.xaxis.set_major_formatter(mdates.DateFormatter("%b %d"))
    else:
        ax.text(0.5, 0.5, "no confirmed mood entries", ha="center", va="center")
        ax.set_axis_off()
    ax.set_title(f"{group_id} frame of mind")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _render_indicators(history, group_id: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 4))
    if history:
        times = [row.window_to for row in history]
        for key in INDICATOR_KEYS:
            series = [getattr(row, key) for row in history]
            ax.plot(times, [v if v is not None else float("nan") for v in series], marker=".", lw=1, label=key)
        ax.set_ylim(-0.05, 1.05)
        ax.legend(fontsize=8, ncol=3)
        ax.xaxis.set_major_formatter(mdates.DateFormatter("%b %d"))
    else:
        ax.text(0.5, 0.5, "no windows elapsed", ha="center", va="center")
        ax.set_axis_off()
    ax.set_title(f"{group_id} teamwork indicators (rolling windows)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
