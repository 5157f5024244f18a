"""Line-oriented run reports.

Layout: a fixed header of ``key: value`` lines, a blank line, then sections
introduced by ``## name`` holding either ``key = value`` lines or a
whitespace-aligned table.  Only the ``timestamp`` header line varies between
identical runs.
"""
from __future__ import annotations

import datetime as _dt

import numpy as np

REPORT_VERSION = 1


def fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (bool, np.bool_)):
        return "yes" if x else "no"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0.0:
            return "0"
        return f"{x:.12g}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt(v) for v in np.asarray(x, dtype=object).ravel()) + "]"
    return str(x)


class Report:
    def __init__(self, command: str, seed: int, config_hash: str, tool_version: str):
        self.header = {
            "report-version": str(REPORT_VERSION),
            "tool": f"intercurve {tool_version}",
            "command": command,
            "seed": str(seed),
            "config-hash": config_hash,
        }
        self.sections: list[tuple[str, list[str]]] = []
        self.status = "pass"
        self.exit_code = 0

    def fields(self, name, items):
        self.sections.append((name, [f"{k} = {fmt(v)}" for k, v in items]))

    def table(self, name, columns, rows):
        cells = [list(columns)] + [[fmt(v) for v in row] for row in rows]
        widths = [max(len(r[k]) for r in cells) for k in range(len(columns))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
        self.sections.append((name, lines))

    def notes(self, name, lines):
        self.sections.append((name, list(lines)))

    def finish(self, status, exit_code):
        self.status, self.exit_code = status, exit_code

    def render(self, timestamp=None) -> str:
        timestamp = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        out = [f"{k}: {v}" for k, v in self.header.items()]
        out.append(f"timestamp: {timestamp}")
        out.append(f"status: {self.status}")
        out.append(f"exit-code: {self.exit_code}")
        for name, lines in self.sections:
            out.append("")
            out.append(f"## {name}")
            out.extend(lines)
        return "\n".join(out) + "\n"


def strip_timestamp(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if not line.startswith("timestamp: "))
