"""CSV table ingestion with declared headers."""
from __future__ import annotations

import csv
import io
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import DataError


def read_csv(source, required: Iterable[str], optional: Iterable[str] = ()) -> list[dict[str, str]]:
    """Read a CSV file into a list of row dicts, checking the header.

    ``source`` is a path or an open text stream. Every column in ``required``
    must be present; columns outside ``required``/``optional`` are rejected so
    that typos in hand-written tables surface early.
    """
    required = list(required)
    allowed = set(required) | set(optional)
    if isinstance(source, (str, Path)):
        name = str(source)
        try:
            with open(source, newline="", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataError(f"{name}: {exc.strerror or exc}") from None
    else:
        name = getattr(source, "name", "<stream>")
        text = source.read()
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{name}: missing column(s) {', '.join(missing)}")
    unknown = [c for c in header if c not in allowed]
    if unknown:
        raise DataError(f"{name}: unexpected column(s) {', '.join(unknown)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if None in row:
            raise DataError(f"{name}:{lineno}: too many fields")
        rows.append({k: (v or "").strip() for k, v in row.items()})
    return rows


def package_data(*parts: str) -> Path:
    """Path of a file shipped in ``nucshare/data``."""
    return Path(str(resources.files("nucshare").joinpath("/".join(("data",) + parts))))


def parse_float(value: str, what: str, default: float | None = None) -> float:
    if value == "":
        if default is None:
            raise DataError(f"{what}: value required")
        return default
    try:
        return float(value)
    except ValueError:
        raise DataError(f"{what}: not a number: {value!r}") from None


def parse_bool(value: str, what: str, default: bool = False) -> bool:
    v = value.strip().lower()
    if v == "":
        return default
    if v in ("1", "true", "yes", "y"):
        return True
    if v in ("0", "false", "no", "n"):
        return False
    raise DataError(f"{what}: not a boolean: {value!r}")
