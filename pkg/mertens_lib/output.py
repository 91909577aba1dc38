"""
Result formats: JSON-lines event streams, single JSON results and CSV tables.

Integers at or above 2**53 are written as decimal strings so that readers
using doubles do not round them.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Sequence, Union

import mpmath
import numpy as np

from mertens_lib.errors import IntegrityError
from mertens_lib.utils import atomic_write_text

SAFE_INT = 1 << 53


def jsonable(value: Any) -> Any:
    """Convert numbers to JSON-safe values recursively."""
    if isinstance(value, (bool, type(None), str)):
        return value
    if isinstance(value, (int, np.integer)):
        value = int(value)
        return value if abs(value) < SAFE_INT else str(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, mpmath.mpf):
        return mpmath.nstr(value, 20)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return str(value)


def format_events(events: Iterable[Dict[str, Any]]) -> str:
    return "".join(json.dumps(jsonable(e), separators=(",", ":")) + "\n" for e in events)


def write_events(path: Union[str, Path], events: Iterable[Dict[str, Any]]) -> None:
    atomic_write_text(path, format_events(events))


def write_result(path: Union[str, Path], result: Dict[str, Any]) -> None:
    atomic_write_text(path, json.dumps(jsonable(result), indent=2) + "\n")


def format_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    atomic_write_text(path, format_csv(header, rows))


def read_events(path: Union[str, Path]) -> Iterator[Dict[str, Any]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"event file {path} not found")
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise IntegrityError(f"{path}:{lineno}: {exc}") from exc
