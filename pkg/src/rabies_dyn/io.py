"""Plot-ready CSV tables and TOML reports, each opened by a provenance line.

Every file starts with ``# rabies-dyn <version> seed=<s> mode=<m>``. Floats
are written with 17 significant digits, so reading a table back gives the
exact values that were written.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import tomli_w

from .config import parse_toml

__version__ = "0.1.0"

_HEADER = re.compile(r"^# rabies-dyn (\S+) seed=(\S+) mode=(\S+)(?: (.*))?$")
_INT = re.compile(r"^[+-]?\d+$")


@dataclass(frozen=True)
class Provenance:
    seed: int | None = None
    mode: str = "none"
    note: str = ""
    version: str = __version__

    def line(self) -> str:
        seed = "none" if self.seed is None else str(self.seed)
        out = f"# rabies-dyn {self.version} seed={seed} mode={self.mode}"
        return f"{out} {self.note}" if self.note else out

    @classmethod
    def parse(cls, line: str) -> "Provenance":
        m = _HEADER.match(line.rstrip("\n"))
        if not m:
            raise ValueError(f"not a provenance line: {line!r}")
        version, seed, mode, note = m.groups()
        return cls(None if seed == "none" else int(seed), mode, note or "", version)


def format_value(v: Any) -> str:
    kind = getattr(getattr(v, "dtype", None), "kind", "")
    if isinstance(v, bool) or kind == "b":
        return "true" if v else "false"
    if isinstance(v, int) or kind in ("i", "u"):
        return str(int(v))
    if isinstance(v, float) or kind == "f":
        text = f"{float(v):.17g}"
        # Keep floats distinguishable from ints on the way back in.
        return text if any(ch in text for ch in ".eni") else text + ".0"
    return str(v)


def parse_value(s: str) -> Any:
    if s == "true":
        return True
    if s == "false":
        return False
    if _INT.match(s):
        return int(s)
    try:
        return float(s)
    except ValueError:
        return s


def write_table(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                prov: Provenance) -> None:
    buf = io.StringIO()
    buf.write(prov.line() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row length does not match the header")
        w.writerow([format_value(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


@dataclass(frozen=True)
class Table:
    provenance: Provenance
    columns: tuple[str, ...]
    rows: list[list[Any]]

    def column(self, name: str) -> list[Any]:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]


def read_table(path: str | Path) -> Table:
    text = Path(path).read_text(encoding="utf-8")
    first, _, rest = text.partition("\n")
    prov = Provenance.parse(first)
    reader = csv.reader(io.StringIO(rest))
    columns = tuple(next(reader))
    rows = [[parse_value(c) for c in r] for r in reader]
    return Table(prov, columns, rows)


def _toml_safe(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _toml_safe(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_toml_safe(v) for v in obj]
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float) or hasattr(obj, "dtype"):
        return float(obj)
    return obj


def write_report(path: str | Path, report: dict, prov: Provenance) -> None:
    """Write a nested dict as TOML. ``None`` entries are dropped."""
    body = tomli_w.dumps(_toml_safe(report))
    Path(path).write_text(prov.line() + "\n" + body, encoding="utf-8", newline="")


def read_report(path: str | Path) -> tuple[Provenance, dict]:
    text = Path(path).read_text(encoding="utf-8")
    first, _, rest = text.partition("\n")
    return Provenance.parse(first), parse_toml(rest)


def floats_equal(a: float, b: float) -> bool:
    """Equality that treats NaN as equal to NaN (for round-trip checks)."""
    return a == b or (isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b))
