"""Check records, reports and their text/JSON forms."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..submanifold import INDETERMINATE_FACTOR

__all__ = ["CheckRecord", "CheckReport", "VERDICTS", "recompute_verdict"]

VERDICTS = ("pass", "fail", "indeterminate", "skipped", "error", "info")

# band:  pass ≤ tol < indeterminate ≤ 10·tol < fail
# bound: pass ≤ tol < fail (one-sided inequalities)
# flag:  values["ok"] is True / False / None
# none:  verdict is whatever was stored (skipped, error, info)
RULES = ("band", "bound", "flag", "none")


def _plain(x):
    """Convert numpy scalars/arrays and tuples to JSON-friendly python values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def recompute_verdict(rule: str, residual, tolerance, values: dict, stored: str) -> str:
    if rule == "band":
        if residual is None or tolerance is None or (isinstance(residual, float) and math.isnan(residual)):
            return "error"
        if residual <= tolerance:
            return "pass"
        if residual > INDETERMINATE_FACTOR * tolerance:
            return "fail"
        return "indeterminate"
    if rule == "bound":
        if residual is None or tolerance is None or (isinstance(residual, float) and math.isnan(residual)):
            return "error"
        return "pass" if residual <= tolerance else "fail"
    if rule == "flag":
        ok = values.get("ok")
        return "indeterminate" if ok is None else ("pass" if ok else "fail")
    return stored


@dataclass
class CheckRecord:
    name: str
    anchor: str
    point: list | None
    values: dict
    residual: float | None
    tolerance: float | None
    rule: str
    verdict: str = ""
    message: str = ""

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        self.values = _plain(self.values)
        self.point = _plain(self.point)
        self.residual = None if self.residual is None else float(self.residual)
        self.tolerance = None if self.tolerance is None else float(self.tolerance)
        if self.rule != "none":
            self.verdict = recompute_verdict(self.rule, self.residual, self.tolerance, self.values, self.verdict)
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "point": self.point,
            "values": self.values,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "rule": self.rule,
            "verdict": self.verdict,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CheckRecord":
        return cls(d["name"], d["anchor"], d["point"], d["values"], d["residual"], d["tolerance"],
                   d["rule"], d["verdict"], d.get("message", ""))


@dataclass
class CheckReport:
    scenario: str
    seed: int
    records: list[CheckRecord] = field(default_factory=list)
    version: str = __version__

    @property
    def summary(self) -> dict:
        counts = {v: 0 for v in VERDICTS}
        for r in self.records:
            counts[r.verdict] += 1
        return counts

    @property
    def ok(self) -> bool:
        s = self.summary
        return s["fail"] == 0 and s["error"] == 0

    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def verdicts(self, name: str) -> list[str]:
        return [r.verdict for r in self.records if r.name == name]

    def as_dict(self) -> dict:
        return {
            "engine": "dwarp",
            "version": self.version,
            "scenario": self.scenario,
            "seed": self.seed,
            "summary": self.summary,
            "records": [r.as_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CheckReport":
        d = json.loads(text)
        rep = cls(d["scenario"], d["seed"], [CheckRecord.from_dict(r) for r in d["records"]], d["version"])
        if rep.summary != d["summary"]:
            raise ValueError("summary does not match records")
        return rep

    _QUALIFIERS = ("map", "dwp", "warp", "index", "block", "form", "operator", "identity", "ambient_term",
                   "flag", "relation", "property")

    def _qualifier(self, r: CheckRecord) -> str:
        parts = [f"{k}={r.values[k]}" for k in self._QUALIFIERS if k in r.values and k not in ("relation", "property")]
        for k in ("relation", "property"):
            if k in r.values:
                parts.append(str(r.values[k]))
        return ", ".join(parts)

    def to_text(self) -> str:
        lines = [f"scenario {self.scenario}  seed {self.seed}  dwarp {self.version}"]
        width = max((len(r.name) for r in self.records), default=10)
        for r in self.records:
            res = "" if r.residual is None else f"residual {r.residual:.3e}"
            tol = "" if r.tolerance is None else f"tol {r.tolerance:.1e}"
            tail = "  ".join(x for x in (res, tol, r.message) if x)
            what = self._qualifier(r) or r.anchor
            lines.append(f"  {r.verdict.upper():<13} {r.name:<{width}}  {what}" + (f"  [{tail}]" if tail else ""))
        s = self.summary
        lines.append("summary: " + ", ".join(f"{k} {v}" for k, v in s.items() if v))
        return "\n".join(lines) + "\n"
