"""Property reports produced by the certification checks."""

from __future__ import annotations

from dataclasses import dataclass, field

MAX_WITNESSES = 10


@dataclass
class PropertyReport:
    name: str
    checked: int = 0
    violations: int = 0
    witnesses: list[str] = field(default_factory=list)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, ok: bool, witness: str) -> None:
        self.checked += 1
        if not ok:
            self.violations += 1
            if len(self.witnesses) < MAX_WITNESSES:
                self.witnesses.append(witness)

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{self.name}: {status} ({self.checked} checked, {self.violations} violations)"]
        if self.note:
            lines.append(f"  note: {self.note}")
        lines.extend(f"  witness: {w}" for w in self.witnesses)
        return "\n".join(lines)


@dataclass
class CertificationReport:
    title: str
    properties: list[PropertyReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties)

    def get(self, name: str) -> PropertyReport:
        for p in self.properties:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_text(self) -> str:
        body = "\n".join(p.to_text() for p in self.properties)
        return f"# {self.title}\n{body}\n"
