"""Audit records: a measured quantity against a bound, with a verdict."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class AuditRow:
    name: str
    measured: float
    bound: float | None
    tolerance: float = 0.0
    passed: bool = True
    note: str = ""


@dataclass
class AuditReport:
    """Named collection of checks plus free-form metrics."""

    name: str
    rows: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def check(self, name: str, measured: float, bound: float | None, tolerance: float = 0.0,
              kind: str = "le", note: str = "") -> AuditRow:
        """Record ``measured <= bound + tolerance`` (``kind="le"``) or ``>=`` (``"ge"``)."""
        if bound is None:
            ok = math.isfinite(measured)
        elif kind == "le":
            ok = measured <= bound + tolerance
        elif kind == "ge":
            ok = measured >= bound - tolerance
        else:
            raise ValueError(f"unknown comparison {kind!r}")
        row = AuditRow(name, float(measured), None if bound is None else float(bound),
                       float(tolerance), bool(ok), note)
        self.rows.append(row)
        return row

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "rows": [asdict(r) for r in self.rows], "metrics": self.metrics}
