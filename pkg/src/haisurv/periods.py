"""Month and contiguous month-range periods (``2007-07``, ``2007-01:2007-03``)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date

from .errors import InvalidPeriod

_MONTH_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})\s*$")

Month = tuple[int, int]


def _parse_month(text: str) -> Month:
    m = _MONTH_RE.match(text)
    if not m:
        raise InvalidPeriod(f"not a YYYY-MM month: {text!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise InvalidPeriod(f"month out of range: {text!r}")
    return year, month


def month_index(m: Month) -> int:
    return m[0] * 12 + (m[1] - 1)


def month_from_index(i: int) -> Month:
    return i // 12, i % 12 + 1


@dataclass(frozen=True, order=True)
class Period:
    """Inclusive range of calendar months. A single month has ``start == end``."""

    start: Month
    end: Month

    def __post_init__(self):
        if self.end < self.start:
            raise InvalidPeriod(f"period ends before it starts: {self.start} > {self.end}")

    @classmethod
    def parse(cls, text: str) -> Period:
        if not isinstance(text, str) or not text.strip():
            raise InvalidPeriod(f"empty period: {text!r}")
        if ":" in text:
            a, _, b = text.partition(":")
            return cls(_parse_month(a), _parse_month(b))
        m = _parse_month(text)
        return cls(m, m)

    @classmethod
    def month(cls, year: int, month: int) -> Period:
        return cls((year, month), (year, month))

    @classmethod
    def year(cls, year: int) -> Period:
        return cls((year, 1), (year, 12))

    @property
    def is_single_month(self) -> bool:
        return self.start == self.end

    def months(self) -> list[Month]:
        return [month_from_index(i) for i in range(month_index(self.start), month_index(self.end) + 1)]

    def __len__(self) -> int:
        return month_index(self.end) - month_index(self.start) + 1

    def contains(self, d: date | None) -> bool:
        if d is None:
            return False
        return self.start <= (d.year, d.month) <= self.end

    def overlaps(self, other: Period) -> bool:
        return not (self.end < other.start or other.end < self.start)

    def __str__(self) -> str:
        a = f"{self.start[0]:04d}-{self.start[1]:02d}"
        if self.is_single_month:
            return a
        return f"{a}:{self.end[0]:04d}-{self.end[1]:02d}"
