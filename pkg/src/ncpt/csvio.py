"""CSV output with a provenance header, and the matching reader."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, TextIO

from . import __version__


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value != value:
            return "nan"
        # 12 significant digits, always with a decimal point
        return f"{value:.11e}"
    if isinstance(value, int):
        return str(value)
    return str(value)


def parse_value(text: str) -> Any:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _as_mapping(row: Any) -> Mapping[str, Any]:
    if isinstance(row, Mapping):
        return row
    if hasattr(row, "csv_row"):
        return row.csv_row()
    if dataclasses.is_dataclass(row):
        return dataclasses.asdict(row)
    raise TypeError(f"cannot write row of type {type(row).__name__}")


def config_hash(config: Mapping[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance_lines(command: str, config: Mapping[str, Any] | None = None, presets: Iterable[str] = ()) -> list[str]:
    lines = [f"ncpt {__version__} {command}"]
    if config is not None:
        lines.append(f"config_sha256: {config_hash(config)}")
        lines.append("config: " + json.dumps(config, sort_keys=True, default=str))
    presets = [p for p in presets if p]
    lines.append("presets: " + (",".join(presets) if presets else "none"))
    return lines


def write_csv(
    stream: TextIO,
    rows: Sequence[Any],
    columns: Sequence[str] | None = None,
    comments: Sequence[str] = (),
) -> None:
    mapped = [_as_mapping(r) for r in rows]
    if columns is None:
        if not mapped:
            raise ValueError("columns are required for an empty row list")
        columns = list(mapped[0])
    for i, m in enumerate(mapped):
        if list(m) != list(columns):
            raise ValueError(f"row {i} keys {list(m)} differ from columns {list(columns)}")
    for c in comments:
        for line in str(c).splitlines():
            stream.write(f"# {line}\r\n")
    writer = csv.writer(stream, lineterminator="\r\n")
    writer.writerow(columns)
    for m in mapped:
        writer.writerow([format_value(m[c]) for c in columns])


def emit_csv(
    rows: Sequence[Any],
    path: str | Path | None,
    columns: Sequence[str] | None = None,
    comments: Sequence[str] = (),
    stream: TextIO | None = None,
) -> str:
    """Write ``rows`` as RFC 4180 CSV to ``path`` (or ``stream``); returns the text."""
    buf = io.StringIO()
    write_csv(buf, rows, columns, comments)
    text = buf.getvalue()
    if path is not None:
        p = Path(path)
        try:
            with open(p, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write CSV to {p}: {exc.strerror}") from exc
    elif stream is not None:
        stream.write(text)
    return text


def read_csv(source: str | Path | TextIO) -> tuple[list[str], list[str], list[dict[str, Any]]]:
    """Return ``(comments, columns, rows)`` with numeric fields parsed."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    comments, body = [], []
    for line in io.StringIO(text, newline=""):
        if line.startswith("#"):
            comments.append(line[1:].strip())
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader, [])
    rows = [dict(zip(columns, (parse_value(v) for v in rec))) for rec in reader if rec]
    return comments, columns, rows


def csv_body(text: str) -> str:
    """CSV text without the ``#`` provenance lines."""
    return "".join(line for line in io.StringIO(text, newline="") if not line.startswith("#"))
