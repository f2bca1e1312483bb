"""Deterministic text reports and CSV exports."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Report", "Section", "fmt", "fmt17", "write_csv", "csv_text"]


def _num(v, digits):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{digits}g}"


def fmt(v, digits: int = 12) -> str:
    """Render a value with ``digits`` significant digits; other types via ``str``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _num(v, digits)
    if v is None:
        return "none"
    if isinstance(v, (tuple, list, np.ndarray)):
        return "[" + ", ".join(fmt(x, digits) for x in v) + "]"
    return str(v)


def fmt17(v) -> str:
    return fmt(v, 17)


@dataclass
class Section:
    title: str
    items: list = field(default_factory=list)
    tables: list = field(default_factory=list)

    def add(self, key: str, value) -> "Section":
        self.items.append((key, value))
        return self

    def table(self, header, rows) -> "Section":
        self.tables.append((list(header), [list(r) for r in rows]))
        return self


@dataclass
class Report:
    """Ordered sections of key/value pairs and comma-delimited tables."""

    command: str
    sections: list = field(default_factory=list)

    def section(self, title: str) -> Section:
        s = Section(title)
        self.sections.append(s)
        return s

    def render(self) -> str:
        out = [f"# ultrajet {self.command}"]
        for s in self.sections:
            out.append(f"[{s.title}]")
            out.extend(f"{k} = {fmt(v)}" for k, v in s.items)
            for header, rows in s.tables:
                out.append("--- " + ",".join(header))
                out.extend(",".join(fmt(x) for x in row) for row in rows)
                out.append("---")
        return "\n".join(out) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt17(x) for x in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(csv_text(header, rows))
