"""Extract PPA metrics from plain-text synthesis report summaries.

The accepted grammar is line-oriented. A metric line is

    <key phrase> <number> <unit>

where the key phrase is one of "design area" / "total power" / "worst slack"
(case-insensitive) and the unit selects the conversion into the canonical
um^2 / W / ns. Each metric must appear exactly once per report; everything
else in the file is ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import PpaMetrics
from .errors import ParseError, ValidationError

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"

# metric name -> (key-phrase regex, {unit: multiplier into canonical units})
_METRICS: dict[str, tuple[re.Pattern, dict[str, float]]] = {
    "area": (
        re.compile(r"design\s+area", re.IGNORECASE),
        {"u^2": 1.0, "um^2": 1.0},
    ),
    "total_power": (
        re.compile(r"total\s+power", re.IGNORECASE),
        {"W": 1.0, "mW": 1e-3, "uW": 1e-6},
    ),
    "slack": (
        re.compile(r"worst\s+slack", re.IGNORECASE),
        {"ns": 1.0, "ps": 1e-3},
    ),
}

_VALUE_UNIT = re.compile(rf"\s*({_NUMBER})\s*(\S+)")


@dataclass(frozen=True)
class ReportDoc:
    """A synthesis report held in memory, tagged with where it came from."""

    raw_text: str
    source_name: str = "<string>"

    def __post_init__(self):
        if not self.raw_text:
            raise ValidationError("report text must be nonempty")


def parse_ppa(doc: ReportDoc) -> PpaMetrics:
    """Parse the three metric lines of a report into canonical units.

    Raises ParseError (with the line number) on malformed metric lines or
    duplicated metrics, and ValidationError when a metric is missing.
    """
    found: dict[str, float] = {}
    for lineno, line in enumerate(doc.raw_text.splitlines(), start=1):
        for name, (phrase, units) in _METRICS.items():
            match = phrase.search(line)
            if not match:
                continue
            if name in found:
                raise ParseError(f"duplicate metric: {name}", lineno)
            tail = _VALUE_UNIT.match(line, match.end())
            if not tail:
                raise ParseError(
                    f"malformed {name} line (expected '<number> <unit>')", lineno
                )
            value, unit = tail.group(1), tail.group(2)
            if unit not in units:
                raise ParseError(
                    f"unknown {name} unit {unit!r} (accepted: {sorted(units)})", lineno
                )
            found[name] = float(value) * units[unit]
    for name in _METRICS:
        if name not in found:
            raise ValidationError(f"missing metric: {name}")
    return PpaMetrics(
        area=found["area"],
        total_power=found["total_power"],
        slack=found["slack"],
    )


@dataclass(frozen=True)
class BatchItem:
    """Outcome for one file of a batch parse: metrics on success, else error text."""

    source: str
    metrics: PpaMetrics | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.metrics is not None


def parse_batch(paths: Sequence[str | Path]) -> list[BatchItem]:
    """Parse many report files; failures become per-file error records.

    Output order matches input order and a bad file never aborts the batch.
    """
    items = []
    for path in paths:
        source = str(path)
        try:
            text = Path(path).read_text(encoding="utf-8")
            metrics = parse_ppa(ReportDoc(raw_text=text, source_name=source))
            items.append(BatchItem(source=source, metrics=metrics))
        except (OSError, ValueError) as exc:
            items.append(BatchItem(source=source, error=str(exc)))
    return items
