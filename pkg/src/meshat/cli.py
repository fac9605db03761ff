"""Administrative command line: course setup, exports, reports, serving.

Exit codes: 0 ok, 2 validation, 3 authorization, 4 log corruption. Errors
print one machine-parsable line to stderr: `error: <code> <type>: <message>`.
"""

from __future__ import annotations

import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from .canon import iso_to_dt
from .clock import FixedClock, SystemClock
from .errors import AuthorizationError, CorruptLogError, MeshatError, ValidationError
from .store import DataStore

EXIT_VALIDATION = 2
EXIT_AUTHORIZATION = 3
EXIT_CORRUPTION = 4


def _fail(exc: MeshatError) -> None:
    if isinstance(exc, CorruptLogError):
        code = EXIT_CORRUPTION
    elif isinstance(exc, AuthorizationError):
        code = EXIT_AUTHORIZATION
    else:
        code = EXIT_VALIDATION
    click.echo(f"error: {code} {type(exc).__name__}: {exc}", err=True)
    sys.exit(code)


def _open_data(ctx) -> DataStore:
    clock = FixedClock(iso_to_dt(ctx.obj["fixed_clock"])) if ctx.obj.get("fixed_clock") else SystemClock()
    return DataStore(ctx.obj["data_dir"], clock=clock, recover=ctx.obj.get("recover", False))


def _pick_course(data: DataStore, course_id: str | None):
    return data.get(course_id) if course_id else data.single()


@click.group()
@click.option(
    "--data-dir",
    envvar="MESHAT_DATA_DIR",
    default="./meshat-data",
    show_default=True,
    type=click.Path(path_type=Path),
    help="Directory holding courses and logs.",
)
@click.option("--fixed-clock", default=None, help="Freeze the clock at an ISO timestamp (testing only).")
@click.pass_context
def main(ctx, data_dir: Path, fixed_clock: str | None):
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = data_dir
    ctx.obj["fixed_clock"] = fixed_clock


@main.command("init-course")
@click.argument("definition_file", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def init_course(ctx, definition_file: Path):
    """Create a course from a definition document."""
    try:
        definition = json.loads(definition_file.read_text(encoding="utf-8"))
        data = _open_data(ctx)
        store = data.init_course(definition)
    except MeshatError as exc:
        _fail(exc)
    except json.JSONDecodeError as exc:
        _fail(ValidationError(f"definition is not valid JSON: {exc}", field="definition"))
    click.echo(f"course {store.course.id} created with {len(store.course.phases)} phases")


@main.command("import-roster")
@click.argument("roster_file", type=click.Path(exists=True, path_type=Path))
@click.option("--course", "course_id", default=None, help="Course id (defaults to the only course).")
@click.pass_context
def import_roster(ctx, roster_file: Path, course_id: str | None):
    """Enroll actors from delimiter-separated rows (id, name, role, group)."""
    try:
        data = _open_data(ctx)
        store = _pick_course(data, course_id)
        tallies = store.import_roster(roster_file.read_text(encoding="utf-8"))
        data.provision_credentials(store.course.id)
    except MeshatError as exc:
        _fail(exc)
    click.echo(
        "enrolled {groups} groups, {students} students, {tutors} tutors "
        "({actors} actors total) into {course_id}".format(**tallies)
    )


@main.command("export")
@click.option("--course", "course_id", default=None)
@click.option("--what", type=click.Choice(["log", "views", "matrix", "taxonomy", "forum"]), required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Write to a file instead of stdout.")
@click.pass_context
def export(ctx, course_id: str | None, what: str, out: Path | None):
    """Dump the log, materialized views, permission matrix or taxonomy."""
    try:
        data = _open_data(ctx)
        if what == "matrix":
            from .access import dump_matrix

            text = dump_matrix()
        else:
            text = _pick_course(data, course_id).export(what)
    except MeshatError as exc:
        _fail(exc)
    if out:
        out.write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command("close-course")
@click.argument("course_id")
@click.option("--at", "at_raw", default=None, help="Close timestamp (ISO); defaults to now.")
@click.pass_context
def close_course_cmd(ctx, course_id: str, at_raw: str | None):
    """Close a course, enabling end-of-course contract revisions."""
    try:
        data = _open_data(ctx)
        store = data.get(course_id)
        store.close(iso_to_dt(at_raw) if at_raw else None)
    except MeshatError as exc:
        _fail(exc)
    click.echo(f"course {course_id} closed")


@main.command("report")
@click.option("--course", "course_id", default=None)
@click.option("--group", "group_id", default=None, help="One group (defaults to every group).")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--step-days", default=7, show_default=True, help="Indicator window width in days.")
@click.pass_context
def report(ctx, course_id: str | None, group_id: str | None, out: Path, step_days: int):
    """Render dashboard figures (PNG) alongside the delimited exports."""
    try:
        from .report import render_group_report

        data = _open_data(ctx)
        store = _pick_course(data, course_id)
        groups = [group_id] if group_id else sorted(store.course.groups)
        if not groups:
            raise ValidationError("course has no groups yet", field="group")
        written = []
        for gid in groups:
            written.extend(render_group_report(store, gid, out, step_days=step_days))
    except MeshatError as exc:
        _fail(exc)
    click.echo(f"wrote {len(written)} report files under {out}")


@main.command("serve")
@click.option("--host", envvar="MESHAT_HOST", default="127.0.0.1", show_default=True)
@click.option("--port", envvar="MESHAT_PORT", default=8600, show_default=True, type=int)
@click.option("--recover", is_flag=True, help="Trim a torn final log line left by a crash.")
@click.option("--static", "static_dir", type=click.Path(path_type=Path), default=None, help="Serve a built UI from this directory.")
@click.pass_context
def serve_cmd(ctx, host: str, port: int, recover: bool, static_dir: Path | None):
    """Start the HTTP service over the data directory."""
    try:
        # fail fast on corrupt logs before binding the port
        DataStore(ctx.obj["data_dir"], recover=recover)
    except MeshatError as exc:
        _fail(exc)
    from .service import serve

    serve(ctx.obj["data_dir"], host, port, recover=recover, static_dir=static_dir)


@main.command("provision")
@click.option("--course", "course_id", default=None)
@click.pass_context
def provision(ctx, course_id: str | None):
    """Create login secrets for every enrolled actor; prints the file path."""
    try:
        data = _open_data(ctx)
        store = _pick_course(data, course_id)
        data.provision_credentials(store.course.id)
    except MeshatError as exc:
        _fail(exc)
    click.echo(str(data.credentials_path))


@main.command("make-fixture")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--groups", default=12, show_default=True, type=int)
@click.option("--students-per-group", default=8, show_default=True, type=int)
def make_fixture(out: Path, groups: int, students_per_group: int):
    """Write the reference course definition and roster files."""
    from .canon import canonical_json
    from .fixtures import reference_course_definition, reference_roster_csv

    out.mkdir(parents=True, exist_ok=True)
    (out / "course.json").write_text(canonical_json(reference_course_definition()) + "\n", encoding="utf-8")
    (out / "roster.csv").write_text(reference_roster_csv(groups, students_per_group), encoding="utf-8")
    click.echo(f"wrote {out / 'course.json'} and {out / 'roster.csv'}")


if __name__ == "__main__":
    main()
