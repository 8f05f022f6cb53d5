"""
File formats: one-column signal files in, CSV and JSON out.

Numbers are written with 17 significant digits so that doubles survive a
write/read cycle unchanged.
"""
import csv
import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from core.exceptions import InputParseError
from models.algorithm import TRACE_COLUMNS, IterationTrace

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
HEADERS = ("y", "x", "true_x")


def format_number(value: Optional[float]) -> str:
    if value is None:
        return ""
    return format(float(value), ".17g")


def read_signal_file(path: PathLike) -> np.ndarray:
    """Read a plain-text (one value per line) or single-column CSV file.

    A first line naming the column ("y", "x" or "true_x") is skipped. Values
    must be finite and nonnegative.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8-sig") as handle:
            rows = [row for row in csv.reader(handle) if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise InputParseError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputParseError(f"{path} is not UTF-8 text: {exc}") from exc

    if rows and rows[0][0].strip().lower() in HEADERS:
        rows = rows[1:]
    if not rows:
        raise InputParseError(f"{path} contains no values")

    values: List[float] = []
    for line, row in enumerate(rows, start=1):
        if len(row) != 1:
            raise InputParseError(f"{path}: expected one column, got {len(row)} on data row {line}")
        try:
            value = float(row[0].strip())
        except ValueError as exc:
            raise InputParseError(f"{path}: {row[0]!r} on data row {line} is not a number") from exc
        if not math.isfinite(value) or value < 0:
            raise InputParseError(f"{path}: {value!r} on data row {line} is not a finite nonnegative number")
        values.append(value)
    logger.debug(f"read {len(values)} values from {path}")
    return np.array(values, dtype=np.float64)


def write_rows(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Optional[float]]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([cell if isinstance(cell, int) else format_number(cell) for cell in row])
    return path


def write_vector_csv(path: PathLike, values, column: str = "y") -> Path:
    return write_rows(path, [column], ([float(v)] for v in np.asarray(values, dtype=np.float64)))


def write_trace_csv(path: PathLike, trace: IterationTrace) -> Path:
    """One row per iterate, t = 0 included."""
    return write_rows(
        path,
        TRACE_COLUMNS,
        ([row[column] for column in TRACE_COLUMNS] for row in trace.rows()),
    )


def write_json(path: PathLike, document: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2, exclude_none=True))
    return path
