"""Three-valued condition verdicts and their CSV / text serialisation."""
from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

DEFAULT_TOLERANCE = 1e-9
# a few ulps: "|q - threshold| <= tol" is decided on the true values, not on
# the rounded difference
ROUNDING_SLACK = 4 * sys.float_info.epsilon

CSV_COLUMNS = ("name", "quantity", "threshold", "strict", "verdict", "margin")


class Verdict(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"

    def __str__(self) -> str:
        return self.value


def fmt(x) -> str:
    """Locale-free float formatting with 17 significant digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return str(x)


def _margin(quantity: float, threshold: float, relation: str) -> float:
    if relation in ("<", "<="):
        return threshold - quantity
    if relation in (">", ">="):
        return quantity - threshold
    if relation == "!=":
        return abs(quantity - threshold)
    raise ValueError(f"unknown relation {relation!r}")


@dataclass(frozen=True)
class ConditionEntry:
    """One inequality ``quantity <relation> threshold``.

    ``margin`` is positive when the inequality is satisfied.  Margins within
    ``tolerance`` of zero get the ``boundary`` verdict: inconclusive for
    ``<`` and ``>`` (equality cannot certify strictness), holds for ``<=``
    and ``>=``, fails for ``!=``.
    """

    name: str
    quantity: float
    threshold: float
    relation: str
    required: bool = True
    tolerance: float = DEFAULT_TOLERANCE
    boundary: Optional[Verdict] = None

    def __post_init__(self):
        if self.boundary is None:
            default = {"<": Verdict.INCONCLUSIVE, ">": Verdict.INCONCLUSIVE,
                       "<=": Verdict.HOLDS, ">=": Verdict.HOLDS, "!=": Verdict.FAILS}
            if self.relation not in default:
                raise ValueError(f"unknown relation {self.relation!r}")
            object.__setattr__(self, "boundary", default[self.relation])

    @property
    def strict(self) -> bool:
        return self.relation in ("<", ">", "!=")

    @property
    def margin(self) -> float:
        return _margin(self.quantity, self.threshold, self.relation)

    @property
    def band(self) -> float:
        """``tolerance`` plus the rounding error of forming the margin."""
        scale = max(abs(self.quantity), abs(self.threshold), 1.0)
        if math.isinf(scale):
            return self.tolerance
        return self.tolerance + ROUNDING_SLACK * scale

    @property
    def verdict(self) -> Verdict:
        m = self.margin
        if math.isnan(m):
            return Verdict.FAILS
        band = self.band
        if m > band:
            return Verdict.HOLDS
        if abs(m) <= band:
            return self.boundary
        return Verdict.FAILS

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


@dataclass
class ConditionReport:
    entries: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, name, quantity, threshold, relation, *, required=True,
            tolerance=DEFAULT_TOLERANCE, boundary=None) -> ConditionEntry:
        entry = ConditionEntry(name, float(quantity), float(threshold), relation,
                               required, tolerance, boundary)
        self.entries.append(entry)
        return entry

    def note(self, text: str) -> None:
        self.notes.append(text)

    def extend(self, other: "ConditionReport", *, required: Optional[bool] = None) -> None:
        for e in other.entries:
            if required is not None:
                e = ConditionEntry(e.name, e.quantity, e.threshold, e.relation,
                                   required and e.required, e.tolerance, e.boundary)
            self.entries.append(e)
        self.notes.extend(other.notes)

    def __getitem__(self, name: str) -> ConditionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(e.name == name for e in self.entries)

    def names(self) -> list:
        return [e.name for e in self.entries]

    @property
    def verdict(self) -> Verdict:
        """Conjunction over the required entries."""
        verdicts = [e.verdict for e in self.entries if e.required]
        if any(v is Verdict.FAILS for v in verdicts):
            return Verdict.FAILS
        if any(v is Verdict.INCONCLUSIVE for v in verdicts):
            return Verdict.INCONCLUSIVE
        return Verdict.HOLDS

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def rows(self) -> Iterable[tuple]:
        for e in self.entries:
            yield (e.name, fmt(e.quantity), fmt(e.threshold), fmt(e.strict),
                   str(e.verdict), fmt(e.margin))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_text(self) -> str:
        width = max([len(e.name) for e in self.entries] + [4])
        lines = []
        for e in self.entries:
            tag = "" if e.required else "  (informational)"
            lines.append(
                f"{e.name:<{width}}  {fmt(e.quantity)} {e.relation} {fmt(e.threshold)}"
                f"  -> {e.verdict} (margin {fmt(e.margin)}){tag}"
            )
        lines.append(f"{'overall':<{width}}  {self.verdict}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines) + "\n"
