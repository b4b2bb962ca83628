from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass(frozen=True)
class Violation:
    clause: str
    message: str
    witness: Any = None

    def to_json(self) -> Dict[str, Any]:
        return {"clause": self.clause, "message": self.message, "witness": self.witness}


@dataclass
class CheckReport:
    """Outcome of one relation or accessibility check.

    A report is a list of violated clauses, each with a witness position or
    value. An empty list means every clause holds.
    """
    name: str = ""
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0

    def fail(self, clause: str, message: str, witness: Any = None) -> None:
        self.violations.append(Violation(clause, message, witness))

    def check(self, condition: bool, clause: str, message: str, witness: Any = None) -> bool:
        if not condition:
            self.fail(clause, message, witness)
        return condition

    def merge(self, other: "CheckReport", prefix: str = "") -> "CheckReport":
        for violation in other.violations:
            clause = prefix + violation.clause if prefix else violation.clause
            self.violations.append(Violation(clause, violation.message, violation.witness))
        return self

    def clauses(self) -> List[str]:
        return [v.clause for v in self.violations]

    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    def summary(self) -> str:
        if self.ok:
            return f"{self.name}: ok"
        parts = [f"[{v.clause}] {v.message}" for v in self.violations]
        return f"{self.name}: " + "; ".join(parts)

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.name, "ok": self.ok,
                "violations": [v.to_json() for v in self.violations]}


@dataclass
class SuiteReport:
    # Aggregate of many sampled instances of one property.
    name: str
    instances: int = 0
    vacuous: int = 0
    failures: List[Dict[str, Any]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return len(self.failures) == 0

    def record(self, report: CheckReport, sample: Any = None) -> None:
        self.instances += 1
        if not report.ok:
            self.failures.append({"sample": sample, "report": report.to_json()})

    def record_vacuous(self) -> None:
        self.instances += 1
        self.vacuous += 1

    def merge(self, other: "SuiteReport") -> "SuiteReport":
        self.instances += other.instances
        self.vacuous += other.vacuous
        self.failures.extend(other.failures)
        return self

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"name": self.name, "instances": self.instances,
                               "vacuous": self.vacuous, "failures": self.failures}
        out.update(self.details)
        return out
