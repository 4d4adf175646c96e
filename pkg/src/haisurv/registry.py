"""Monthly HAI count reports from two reporting channels.

Reports CSV::

    hospital_id,period,count,channel
    H01,2007-01:2007-03,54,ASP
    H03,2007-04,11,CJAS
    H07,2007-05,,CJAS          <- empty count: report row present, value missing

An explicit ``0`` and a missing count add the same amount to every total but
are told apart by :func:`completeness`.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    DuplicateReport,
    EmptyMatrix,
    MalformedRow,
    OverlappingPeriods,
    UnknownChannel,
    UnknownHospital,
    UnresolvedConflicts,
)
from .periods import Month, Period

logger = logging.getLogger(__name__)

REPORTS_HEADER = ("hospital_id", "period", "count", "channel")


class Channel(enum.Enum):
    CJAS = "CJAS"  # county health-insurance branch
    ASP = "ASP"  # public health authority


class Status(enum.Enum):
    REGULAR = "regular"
    PARTIAL = "partial"
    ZERO_THEN_SILENT = "zero_then_silent"
    NEVER_REPORTED = "never_reported"


@dataclass(frozen=True)
class MonthlyReport:
    hospital_id: str
    period: Period
    count: int | None
    channel: Channel

    def __post_init__(self):
        if self.count is not None and self.count < 0:
            raise ValueError("count must be non-negative")


@dataclass
class Registry:
    reports: list[MonthlyReport] = field(default_factory=list)

    def __len__(self):
        return len(self.reports)

    @property
    def hospital_ids(self) -> list[str]:
        return sorted({r.hospital_id for r in self.reports})

    @property
    def periods(self) -> list[Period]:
        return sorted({r.period for r in self.reports})

    def for_hospital(self, hospital_id: str) -> list[MonthlyReport]:
        return sorted((r for r in self.reports if r.hospital_id == hospital_id),
                      key=lambda r: (r.period, r.channel.value))

    def channels_of(self, hospital_id: str) -> set[Channel]:
        return {r.channel for r in self.reports if r.hospital_id == hospital_id}

    def add(self, report: MonthlyReport, row: int = 0):
        for other in self.reports:
            if other.hospital_id != report.hospital_id or other.channel != report.channel:
                continue
            if other.period == report.period:
                raise DuplicateReport(row, f"second report for ({report.hospital_id}, {report.period}, "
                                           f"{report.channel.value})")
            if other.period.overlaps(report.period):
                raise DuplicateReport(row, f"{report.period} overlaps {other.period} for "
                                           f"({report.hospital_id}, {report.channel.value})")
        self.reports.append(report)


def ingest_reports(text: str) -> Registry:
    registry = Registry()
    reader = csv.reader(io.StringIO(text, newline=""))
    header = None
    for fields in reader:
        rowno = reader.line_num
        if not any(f.strip() for f in fields) or fields[0].lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in fields]
        if header is None:
            header = tuple(f.lower() for f in fields)
            if header != REPORTS_HEADER:
                raise MalformedRow(rowno, f"expected header {','.join(REPORTS_HEADER)}")
            continue
        if len(fields) != len(REPORTS_HEADER):
            raise MalformedRow(rowno, f"expected {len(REPORTS_HEADER)} fields, got {len(fields)}")
        hid, period_text, count_text, channel_text = fields
        if not hid:
            raise MalformedRow(rowno, "empty hospital_id")
        try:
            period = Period.parse(period_text)
        except ValueError as exc:
            raise MalformedRow(rowno, str(exc)) from None
        if count_text == "":
            count = None
        else:
            try:
                count = int(count_text)
            except ValueError:
                raise MalformedRow(rowno, f"count is not an integer: {count_text!r}") from None
            if count < 0:
                raise MalformedRow(rowno, f"negative count {count}")
        try:
            channel = Channel(channel_text.upper())
        except ValueError:
            raise UnknownChannel(rowno, f"channel must be CJAS or ASP, got {channel_text!r}") from None
        registry.add(MonthlyReport(hid, period, count, channel), rowno)
    return registry


@dataclass(frozen=True)
class ChannelConflict:
    hospital_id: str
    period: Period
    cjas_count: int
    asp_count: int

    def to_dict(self) -> dict:
        return {"hospital_id": self.hospital_id, "period": str(self.period),
                "cjas_count": self.cjas_count, "asp_count": self.asp_count}


def cross_validate(registry: Registry) -> list[ChannelConflict]:
    """Cells reported on both channels with two different non-missing counts."""
    cells: dict[tuple[str, Period], dict[Channel, int | None]] = {}
    for r in registry.reports:
        cells.setdefault((r.hospital_id, r.period), {})[r.channel] = r.count
    out = []
    for (hid, period), by_channel in sorted(cells.items()):
        cjas, asp = by_channel.get(Channel.CJAS), by_channel.get(Channel.ASP)
        if cjas is not None and asp is not None and cjas != asp:
            out.append(ChannelConflict(hid, period, cjas, asp))
    return out


@dataclass
class AggregateMatrix:
    rows: list[str]
    columns: list[Period]
    cells: dict[tuple[str, Period], int | None]
    notes: list[str] = field(default_factory=list)

    def cell(self, hospital_id: str, period: Period) -> int | None:
        return self.cells.get((hospital_id, period))

    @property
    def row_totals(self) -> dict[str, int]:
        return {h: sum(self.cells.get((h, p)) or 0 for p in self.columns) for h in self.rows}

    @property
    def column_totals(self) -> dict[Period, int]:
        return {p: sum(self.cells.get((h, p)) or 0 for h in self.rows) for p in self.columns}

    @property
    def grand_total(self) -> int:
        return sum(c for c in self.cells.values() if c is not None)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["hospital_id", *map(str, self.columns), "total"])
        totals = self.row_totals
        for h in self.rows:
            vals = [self.cells.get((h, p)) for p in self.columns]
            w.writerow([h, *("" if v is None else v for v in vals), totals[h]])
        col = self.column_totals
        w.writerow(["total", *(col[p] for p in self.columns), self.grand_total])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "columns": [str(p) for p in self.columns],
            "rows": {h: [self.cells.get((h, p)) for p in self.columns] for h in self.rows},
            "row_totals": self.row_totals,
            "column_totals": [self.column_totals[p] for p in self.columns],
            "grand_total": self.grand_total,
            "notes": self.notes,
        }


def aggregate(registry: Registry, strict: bool = False) -> AggregateMatrix:
    """Merge both channels into one hospital x period matrix.

    Disagreeing dual-channel counts raise :class:`UnresolvedConflicts` when
    ``strict``; otherwise the larger count is kept and a note is added.
    """
    conflicts = cross_validate(registry)
    if strict and conflicts:
        raise UnresolvedConflicts(conflicts)

    cells: dict[tuple[str, Period], int | None] = {}
    for r in registry.reports:
        key = (r.hospital_id, r.period)
        if key not in cells or cells[key] is None:
            cells[key] = r.count
        elif r.count is not None:
            cells[key] = max(cells[key], r.count)

    # a hospital's cells must not double count months through different period shapes
    by_hospital: dict[str, list[Period]] = {}
    for hid, period in cells:
        by_hospital.setdefault(hid, []).append(period)
    for hid, periods in by_hospital.items():
        periods.sort()
        for a, b in zip(periods, periods[1:]):
            if a.overlaps(b):
                raise OverlappingPeriods(f"{hid}: periods {a} and {b} overlap across channels")

    notes = [f"{c.hospital_id} {c.period}: CJAS {c.cjas_count} vs ASP {c.asp_count}, kept "
             f"{max(c.cjas_count, c.asp_count)}" for c in conflicts]
    for n in notes:
        logger.warning("channel conflict resolved by maximum: %s", n)
    return AggregateMatrix(rows=registry.hospital_ids, columns=registry.periods, cells=cells, notes=notes)


@dataclass
class CompletenessReport:
    status: dict[str, Status]

    @property
    def counts(self) -> dict[Status, int]:
        out = {s: 0 for s in Status}
        for s in self.status.values():
            out[s] += 1
        return out

    def hospitals_with(self, status: Status) -> list[str]:
        return sorted(h for h, s in self.status.items() if s is status)

    def to_dict(self) -> dict:
        return {
            "status": {h: self.status[h].value for h in sorted(self.status)},
            "counts": {s.value: n for s, n in self.counts.items()},
        }


def completeness(registry: Registry, all_hospitals=None) -> CompletenessReport:
    """Classify each hospital's reporting history.

    A report row with a missing count does not count as reporting. Coverage
    is judged month by month against every month the registry as a whole
    covers.
    """
    known = list(all_hospitals) if all_hospitals is not None else registry.hospital_ids
    unknown = set(registry.hospital_ids) - set(known)
    if unknown:
        raise UnknownHospital(unknown)

    registry_months: set[Month] = set()
    for r in registry.reports:
        registry_months.update(r.period.months())
    last_month = max(registry_months) if registry_months else None

    status = {}
    for hid in known:
        reported = [r for r in registry.reports if r.hospital_id == hid and r.count is not None]
        if not reported:
            status[hid] = Status.NEVER_REPORTED
            continue
        covered = {m for r in reported for m in r.period.months()}
        first, last = min(covered), max(covered)
        if all(r.count == 0 for r in reported) and last < last_month:
            status[hid] = Status.ZERO_THEN_SILENT
        elif all(m in covered for m in registry_months if m >= first):
            status[hid] = Status.REGULAR
        else:
            status[hid] = Status.PARTIAL
    return CompletenessReport(status)


@dataclass(frozen=True)
class Concentration:
    top_hospital: str
    total: int
    grand_total: int

    @property
    def share(self) -> Fraction:
        return Fraction(self.total, self.grand_total)

    def to_dict(self) -> dict:
        return {"top_hospital": self.top_hospital, "total": self.total, "grand_total": self.grand_total,
                "share": round(float(self.share), 4)}


def concentration(matrix: AggregateMatrix) -> Concentration:
    grand = matrix.grand_total
    if grand <= 0:
        raise EmptyMatrix("no HAI reported; concentration undefined")
    totals = matrix.row_totals
    top = min(totals, key=lambda h: (-totals[h], h))
    return Concentration(top, totals[top], grand)
