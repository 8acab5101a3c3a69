"""Deterministic construction and rendering of verification reports.

A report is a tree of plain JSON types.  Exact quantities are rendered as
rational strings, set/tuple payloads become sorted lists, and wall-clock
timings live outside the canonical payload so that rendered bytes are
stable across runs and thread counts.
"""
from __future__ import annotations

import json
from fractions import Fraction

from .domain import format_rational, structure_digest

_STATUSES = ("pass", "fail", "skipped", "info")


def plain(obj):
    """Copy obj into plain JSON types; Fractions become rational strings."""
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((plain(v) for v in obj), key=repr)
    if isinstance(obj, float):
        # floats are advisory; canonical numbers travel as rational strings
        return repr(obj)
    if isinstance(obj, bytes):
        return obj.hex()
    if hasattr(obj, "item"):         # numpy scalars
        return plain(obj.item())
    if hasattr(obj, "tolist"):       # numpy arrays
        return plain(obj.tolist())
    return str(obj)


class ReportBuilder:
    """Accumulates per-check records and renders the final report."""

    def __init__(self, command, structure=None):
        self.command = command
        self.checks = []
        self.timings = {}
        self.header = {}
        if structure is not None:
            self.header["structure"] = structure_digest(structure)
            self.header["worlds"] = structure.n
            if structure.delta:
                self.header["delta"] = format_rational(structure.delta)

    def add(self, name, status, seconds=None, **payload):
        if status not in _STATUSES:
            raise ValueError("bad status %r" % (status,))
        rec = {"check": name, "status": status}
        if payload:
            rec["detail"] = plain(payload)
        self.checks.append(rec)
        if seconds is not None:
            self.timings[name] = seconds
        return rec

    def finish(self, verdict):
        rep = dict(self.header)
        rep["command"] = self.command
        rep["checks"] = self.checks
        rep["verdict"] = verdict
        return rep


def to_json(report, timings=None):
    rep = report
    if timings:
        rep = dict(report)
        rep["timings"] = {k: round(float(v), 3) for k, v in timings.items()}
    return json.dumps(rep, indent=2, sort_keys=True) + "\n"


def canonical_bytes(report):
    """The bytes the determinism contract is stated over."""
    return to_json(report).encode()


def _short(v, limit=240):
    s = v if isinstance(v, str) else json.dumps(v, sort_keys=True)
    if len(s) > limit:
        s = s[:limit - 3] + "..."
    return s


def to_text(report, timings=None):
    lines = ["command: %s" % report.get("command", "")]
    for k in ("structure", "worlds", "delta"):
        if k in report:
            lines.append("%s: %s" % (k, report[k]))
    width = max((len(c["check"]) for c in report.get("checks", ())), default=0)
    for c in report.get("checks", ()):
        stamp = ""
        if timings and c["check"] in timings:
            stamp = "  [%.2fs]" % timings[c["check"]]
        lines.append("  %-*s  %s%s" % (width, c["check"], c["status"], stamp))
        det = c.get("detail")
        if det:
            for key in sorted(det):
                lines.append("      %s: %s" % (key, _short(det[key])))
    lines.append("verdict: %s" % report.get("verdict", ""))
    return "\n".join(lines) + "\n"
