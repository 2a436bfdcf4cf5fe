"""Named numerical checks serialised to JSON."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

PROVENANCE = ("PAPER", "TRIVIAL", "DERIVED")


@dataclass
class Check:
    name: str
    value: float
    reference: float
    tolerance: float
    provenance: str
    relative: bool = False
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCE:
            raise ValueError(f"bad provenance {self.provenance!r}")
        self.value = float(self.value)
        self.reference = float(self.reference)
        self.tolerance = float(self.tolerance)
        self.passed = evaluate(self.value, self.reference, self.tolerance, self.relative)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def evaluate(value: float, reference: float, tolerance: float, relative: bool) -> bool:
    if not (math.isfinite(value) and math.isfinite(reference)):
        return value == reference
    bound = tolerance * abs(reference) if relative else tolerance
    return abs(value - reference) <= bound


class VerificationReport:
    """Ordered collection of :class:`Check` records."""

    def __init__(self, checks=None) -> None:
        self.checks: list[Check] = list(checks or [])

    def add(self, name, value, reference, tolerance, provenance, relative=False) -> Check:
        c = Check(name, value, reference, tolerance, provenance, relative)
        self.checks.append(c)
        return c

    def bound(self, name, value, upper, provenance) -> Check:
        """Check ``0 <= value <= upper`` encoded as ``|value - 0| <= upper``."""
        return self.add(name, abs(value), 0.0, upper, provenance)

    def flag(self, name, ok: bool, provenance) -> Check:
        """Boolean property encoded as value 1/0 against reference 1."""
        return self.add(name, 1.0 if ok else 0.0, 1.0, 0.0, provenance)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.checks]

    @classmethod
    def from_list(cls, items) -> "VerificationReport":
        rep = cls()
        for d in items:
            rep.add(d["name"], d["value"], d["reference"], d["tolerance"],
                    d["provenance"], d.get("relative", False))
        return rep

    def to_json(self) -> str:
        return json.dumps(self.to_list(), indent=2, sort_keys=True)
