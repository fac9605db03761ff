"""Canonical serialization helpers.

Every on-disk record and every exported view goes through canonical_json so
that replays, exports and golden files are byte-stable: keys sorted, no
whitespace, UTF-8, LF record terminators.
"""

from __future__ import annotations

import hashlib
import json
from datetime import date, datetime, timezone
from typing import Any

from .errors import ValidationError


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def dt_to_iso(at: datetime) -> str:
    if at.tzinfo is None:
        at = at.replace(tzinfo=timezone.utc)
    return at.astimezone(timezone.utc).isoformat(timespec="microseconds")


def iso_to_dt(raw: str, field: str = "timestamp") -> datetime:
    try:
        parsed = datetime.fromisoformat(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"invalid timestamp {raw!r}", field=field)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def date_to_iso(d: date) -> str:
    return d.isoformat()


def iso_to_date(raw: str, field: str = "date") -> date:
    try:
        return date.fromisoformat(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"invalid date {raw!r}", field=field)
