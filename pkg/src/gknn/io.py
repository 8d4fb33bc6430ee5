"""CSV and key-value file formats.

All outputs: comma delimiter, header row, LF line endings, ISO dates and
floats written with 12 significant digits.  Files are written to a
temporary sibling and renamed into place.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .tank import DailyClimate, TankConfig
from .upscaling import SCHEMAS, MonthlyQueryRecord, MonthlyTrainingRecord

__all__ = [
    "InputError",
    "fmt",
    "write_atomic",
    "write_csv",
    "write_kv",
    "read_kv",
    "file_digest",
    "read_daily_climate",
    "write_daily_climate",
    "read_tank_config",
    "read_monthly_training",
    "read_monthly_queries",
    "write_monthly_training",
    "write_monthly_queries",
    "read_yield_column",
    "training_header",
    "query_header",
]

DAILY_HEADER = ("date", "rain_mm", "temp_c")


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x == 0:
        return "0"
    return format(x, ".12g")


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    write_atomic(path, buf.getvalue())


def write_kv(path, items) -> None:
    lines = [f"{k}={v if isinstance(v, str) else fmt(v)}" for k, v in items]
    write_atomic(path, "\n".join(lines) + "\n")


def read_kv(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k] = v
    return out


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _rows(path):
    """Header and ``(line_number, row)`` pairs of a CSV file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = tuple(h.strip() for h in next(reader))
    except StopIteration:
        raise InputError(f"{path}: file is empty") from None
    rows = [(reader.line_num, row) for row in reader if row and any(c.strip() for c in row)]
    return header, rows


def _float(path, line, name, s):
    try:
        v = float(s)
    except ValueError:
        raise InputError(f"{path}:{line}: {name} is not a number: {s!r}") from None
    if not np.isfinite(v):
        raise InputError(f"{path}:{line}: {name} is not finite")
    return v


def read_daily_climate(path) -> DailyClimate:
    header, rows = _rows(path)
    if header != DAILY_HEADER:
        raise InputError(f"{path}: expected header {','.join(DAILY_HEADER)}, got {','.join(header)}")
    if not rows:
        raise InputError(f"{path}: no data rows")
    dates, rain, temp = [], [], []
    prev = None
    for line, row in rows:
        if len(row) != 3:
            raise InputError(f"{path}:{line}: expected 3 fields, got {len(row)}")
        try:
            d = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise InputError(f"{path}:{line}: bad date {row[0]!r}") from None
        if prev is not None and (d - prev).days != 1:
            raise InputError(f"{path}:{line}: calendar gap between {prev} and {d}")
        r = _float(path, line, "rain_mm", row[1])
        if r < 0:
            raise InputError(f"{path}:{line}: negative rainfall")
        dates.append(d)
        rain.append(r)
        temp.append(_float(path, line, "temp_c", row[2]))
        prev = d
    return DailyClimate(np.array(dates, dtype="datetime64[D]"), np.array(rain), np.array(temp))


def write_daily_climate(path, climate: DailyClimate) -> None:
    rows = ((str(d), r, t) for d, r, t in zip(climate.dates, climate.rainfall, climate.temperature))
    write_csv(path, DAILY_HEADER, rows)


def read_tank_config(path) -> TankConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    try:
        return TankConfig(**data)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def training_header(schema: str) -> tuple:
    label = () if schema == "bootstrap" else ("month_label",)
    return label + SCHEMAS[schema] + ("yield_l",)


def query_header(schema: str) -> tuple:
    return training_header(schema)[:-1]


def _schema_for(header, headers_by_schema, path):
    for schema in ("coombes", "knn", "bootstrap"):
        if header == headers_by_schema(schema):
            return schema
    raise InputError(f"{path}: unrecognised header {','.join(header)}")


def _label(path, line, s):
    try:
        v = int(s)
    except ValueError:
        raise InputError(f"{path}:{line}: month_label is not an integer: {s!r}") from None
    if not 1 <= v <= 12:
        raise InputError(f"{path}:{line}: month_label {v} outside 1..12")
    return v


def _parse_monthly(path, with_yield: bool):
    header, rows = _rows(path)
    schema = _schema_for(header, training_header if with_yield else query_header, path)
    if not rows:
        raise InputError(f"{path}: no data rows")
    names = header
    has_label = names[0] == "month_label"
    out = []
    for line, row in rows:
        if len(row) != len(names):
            raise InputError(f"{path}:{line}: expected {len(names)} fields, got {len(row)}")
        label = _label(path, line, row[0]) if has_label else None
        lo = 1 if has_label else 0
        hi = len(names) - 1 if with_yield else len(names)
        cv = tuple(_float(path, line, names[j], row[j]) for j in range(lo, hi))
        if with_yield:
            y = _float(path, line, "yield_l", row[-1])
            if y < 0:
                raise InputError(f"{path}:{line}: negative yield")
            out.append(MonthlyTrainingRecord(label, cv, y))
        else:
            out.append(MonthlyQueryRecord(label, cv))
    return schema, out


def read_monthly_training(path):
    """Returns ``(schema, records)``; the schema is recognised from the header."""
    return _parse_monthly(path, True)


def read_monthly_queries(path):
    return _parse_monthly(path, False)


def _monthly_rows(records, with_yield):
    for r in records:
        row = [] if r.month_label is None else [r.month_label]
        row.extend(r.climatic_variables)
        if with_yield:
            row.append(r.yield_l)
        yield row


def write_monthly_training(path, records, schema: str) -> None:
    write_csv(path, training_header(schema), _monthly_rows(records, True))


def write_monthly_queries(path, records, schema: str) -> None:
    write_csv(path, query_header(schema), _monthly_rows(records, False))


def read_yield_column(path) -> np.ndarray:
    """The ``yield_l`` column of any CSV that has one."""
    header, rows = _rows(path)
    if "yield_l" not in header:
        raise InputError(f"{path}: no yield_l column")
    j = header.index("yield_l")
    vals = []
    for line, row in rows:
        if len(row) != len(header):
            raise InputError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        vals.append(_float(path, line, "yield_l", row[j]))
    return np.array(vals)
