"""Verification reports: per-check verdicts with residuals rendered as canonical text."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

PASS = "pass"
FAIL = "fail"
NOT_CHECKED = "not-checked"

REPORT_VERSION = 1


def _text(value) -> str:
    if hasattr(value, "render"):
        return value.render()
    return str(value)


@dataclass
class Check:
    """One verified (or skipped) identity.

    ``residuals`` maps a label to a residual rendered as text; the check
    passes iff every residual is ``"0"``.  ``audits`` holds extra facts
    (weights, degrees) that are reported but do not affect the verdict
    unless recorded as residuals.
    """

    id: str
    residuals: Dict[str, str] = field(default_factory=dict)
    audits: Dict[str, str] = field(default_factory=dict)
    skipped: Optional[str] = None
    failure: Optional[str] = None

    @property
    def verdict(self) -> str:
        if self.skipped is not None:
            return NOT_CHECKED
        if self.failure is not None:
            return FAIL
        return PASS if all(r == "0" for r in self.residuals.values()) else FAIL

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def add(self, label: str, residual) -> "Check":
        self.residuals[label] = _text(residual)
        return self

    def audit(self, label: str, value) -> "Check":
        self.audits[label] = _text(value)
        return self

    def to_dict(self) -> dict:
        d = {"id": self.id, "verdict": self.verdict, "residuals": dict(self.residuals)}
        if self.audits:
            d["audits"] = dict(self.audits)
        if self.skipped is not None:
            d["reason"] = self.skipped
        if self.failure is not None:
            d["error"] = self.failure
        return d

    def render(self) -> str:
        lines = [f"[{self.verdict}] {self.id}"]
        if self.skipped is not None:
            lines.append(f"    reason: {self.skipped}")
        if self.failure is not None:
            lines.append(f"    error: {self.failure}")
        for k in sorted(self.residuals):
            v = self.residuals[k]
            if v != "0":
                lines.append(f"    {k}: {v}")
        for k in sorted(self.audits):
            lines.append(f"    {k} = {self.audits[k]}")
        return "\n".join(lines)


def not_checked(check_id: str, reason: str) -> Check:
    return Check(check_id, skipped=reason)


@dataclass
class Report:
    checks: List[Check] = field(default_factory=list)
    timing: Dict[str, float] = field(default_factory=dict)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            if prefix:
                c = Check(prefix + c.id, c.residuals, c.audits, c.skipped, c.failure)
            self.checks.append(c)

    @property
    def verdict(self) -> str:
        if any(c.verdict == FAIL for c in self.checks):
            return FAIL
        return PASS

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def __getitem__(self, check_id: str) -> Check:
        for c in self.checks:
            if c.id == check_id:
                return c
        raise KeyError(check_id)

    def residual(self, check_id: str, label: str) -> str:
        return self[check_id].residuals[label]

    def to_dict(self, with_timing: bool = False) -> dict:
        d = {"version": REPORT_VERSION, "checks": [c.to_dict() for c in self.checks]}
        if with_timing and self.timing:
            d["timing"] = dict(self.timing)
        return d

    def to_json(self, with_timing: bool = False) -> str:
        return json.dumps(self.to_dict(with_timing), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def render(self) -> str:
        body = "\n".join(c.render() for c in self.checks)
        n_pass = sum(c.verdict == PASS for c in self.checks)
        n_fail = sum(c.verdict == FAIL for c in self.checks)
        n_skip = sum(c.verdict == NOT_CHECKED for c in self.checks)
        tail = f"{n_pass} passed, {n_fail} failed, {n_skip} not checked"
        return (body + "\n" if body else "") + tail + "\n"
