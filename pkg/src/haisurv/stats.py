"""Rates per 100 admissions, expected HAI counts and under-reporting ratios.

All arithmetic is :class:`~decimal.Decimal`. Rounding to whole cases happens
only in :func:`expected_hai` (half-up); ratios are kept exact and rendered to
four places.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation, localcontext
from importlib import resources

from .errors import EmptyReferenceSet, MalformedRow, MissingAdmissions, ZeroDenominator, ZeroExpected
from .markers import MarkerSummary
from .periods import Period

RATES_HEADER = ("label", "rate_per_100", "year", "source")
PROFILES_HEADER = ("hospital_id", "has_icu", "period", "admissions")

FOUR_PLACES = Decimal("0.0001")
_PREC = 40

_TRUE = {"y", "yes", "true", "1"}
_FALSE = {"n", "no", "false", "0"}


@dataclass(frozen=True)
class ReferenceRate:
    label: str
    rate_per_100: Decimal
    year: int
    source: str = ""

    def __post_init__(self):
        if self.rate_per_100 < 0:
            raise ValueError(f"negative reference rate for {self.label}")


@dataclass
class HospitalProfile:
    hospital_id: str
    has_icu: bool
    admissions: dict[Period, int] = field(default_factory=dict)

    def admissions_for(self, period: Period) -> int:
        """Admissions for ``period``, summing monthly figures when no exact entry exists."""
        if period in self.admissions:
            return self.admissions[period]
        monthly = {p.start: n for p, n in self.admissions.items() if p.is_single_month}
        months = period.months()
        if all(m in monthly for m in months):
            return sum(monthly[m] for m in months)
        raise MissingAdmissions(f"no admissions for {self.hospital_id} in {period}")


@dataclass(frozen=True)
class Estimate:
    scope: str
    period: Period
    reported: int
    marker_lower_bound: int | None
    expected_low: int
    expected_high: int
    expected_point: int
    underreporting_ratio: Decimal | None
    admissions: int
    reported_rate_per_100: Decimal
    primary_reference: str

    def to_dict(self) -> dict:
        ratio = self.underreporting_ratio
        return {
            "scope": self.scope,
            "period": str(self.period),
            "admissions": self.admissions,
            "reported": self.reported,
            "reported_rate_per_100": str(self.reported_rate_per_100.quantize(FOUR_PLACES, ROUND_HALF_UP)),
            "marker_lower_bound": self.marker_lower_bound,
            "expected_low": self.expected_low,
            "expected_point": self.expected_point,
            "expected_high": self.expected_high,
            "primary_reference": self.primary_reference,
            "underreporting_ratio": None if ratio is None else str(ratio.quantize(FOUR_PLACES, ROUND_HALF_UP)),
        }


def _dec(x) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


def rate_per_100(count, admissions) -> Decimal:
    if admissions <= 0:
        raise ZeroDenominator("admissions must be positive")
    if count < 0:
        raise ValueError("count must be non-negative")
    with localcontext() as ctx:
        ctx.prec = _PREC
        return Decimal(100) * _dec(count) / _dec(admissions)


def expected_hai(admissions, ref: ReferenceRate | Decimal) -> int:
    if admissions < 0:
        raise ValueError("admissions must be non-negative")
    rate = ref.rate_per_100 if isinstance(ref, ReferenceRate) else _dec(ref)
    with localcontext() as ctx:
        ctx.prec = _PREC
        exact = _dec(admissions) * rate / Decimal(100)
        return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def expected_range(admissions, refs) -> tuple[int, int]:
    refs = list(refs)
    if not refs:
        raise EmptyReferenceSet("no reference rates given")
    low = min(refs, key=lambda r: r.rate_per_100)
    high = max(refs, key=lambda r: r.rate_per_100)
    return expected_hai(admissions, low), expected_hai(admissions, high)


def underreporting_ratio(reported, expected_point) -> Decimal:
    """``reported / expected_point``; not clamped, so over-reporting shows as > 1."""
    if expected_point <= 0:
        raise ZeroExpected("expected count must be positive")
    if reported < 0:
        raise ValueError("reported must be non-negative")
    with localcontext() as ctx:
        ctx.prec = _PREC
        return _dec(reported) / _dec(expected_point)


def primary_reference(refs, label: str | None = None) -> ReferenceRate:
    """Reference named ``label``, else the most recent one (first listed wins a tie)."""
    refs = list(refs)
    if not refs:
        raise EmptyReferenceSet("no reference rates given")
    if label is not None:
        for r in refs:
            if r.label.casefold() == label.casefold():
                return r
        raise KeyError(f"no reference rate labelled {label!r}")
    latest = max(r.year for r in refs)
    return next(r for r in refs if r.year == latest)


def build_estimate(scope: str, period: Period, reported: int, marker_summary: MarkerSummary | None,
                   profile: HospitalProfile, refs, primary_label: str | None = None) -> Estimate:
    refs = list(refs)
    admissions = profile.admissions_for(period)
    low, high = expected_range(admissions, refs)
    primary = primary_reference(refs, primary_label)
    point = expected_hai(admissions, primary)
    return Estimate(
        scope=scope,
        period=period,
        reported=reported,
        marker_lower_bound=marker_summary.total_marker_isolates if marker_summary is not None else None,
        expected_low=low,
        expected_high=high,
        expected_point=point,
        underreporting_ratio=underreporting_ratio(reported, point) if point > 0 else None,
        admissions=admissions,
        reported_rate_per_100=rate_per_100(reported, admissions) if admissions > 0 else Decimal(0),
        primary_reference=primary.label,
    )


def _csv_rows(text: str, header: tuple[str, ...]):
    """Yield ``(row_number, fields)``, skipping blanks and ``#`` comment lines."""
    reader = csv.reader(io.StringIO(text, newline=""))
    seen_header = False
    for fields in reader:
        rowno = reader.line_num
        if not any(f.strip() for f in fields) or fields[0].lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in fields]
        if not seen_header:
            if tuple(f.lower() for f in fields) != header:
                raise MalformedRow(rowno, f"expected header {','.join(header)}")
            seen_header = True
            continue
        if len(fields) != len(header):
            raise MalformedRow(rowno, f"expected {len(header)} fields, got {len(fields)}")
        yield rowno, fields


def load_reference_rates(text: str) -> list[ReferenceRate]:
    out = []
    for rowno, (label, rate, year, source) in _csv_rows(text, RATES_HEADER):
        try:
            value = Decimal(rate.replace(",", "."))
            ref = ReferenceRate(label, value, int(year), source)
        except (InvalidOperation, ValueError) as exc:
            raise MalformedRow(rowno, str(exc) or f"bad rate {rate!r}") from None
        out.append(ref)
    return out


def default_reference_rates() -> list[ReferenceRate]:
    text = resources.files("haisurv").joinpath("data/reference_rates.csv").read_text(encoding="utf-8")
    return load_reference_rates(text)


def _parse_bool(text: str, rowno: int) -> bool:
    t = text.lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise MalformedRow(rowno, f"has_icu must be Y or N, got {text!r}")


def load_hospital_profiles(text: str) -> dict[str, HospitalProfile]:
    profiles: dict[str, HospitalProfile] = {}
    for rowno, (hid, icu, period_text, adm) in _csv_rows(text, PROFILES_HEADER):
        if not hid:
            raise MalformedRow(rowno, "empty hospital_id")
        has_icu = _parse_bool(icu, rowno)
        try:
            period = Period.parse(period_text)
            admissions = int(adm)
        except ValueError as exc:
            raise MalformedRow(rowno, str(exc)) from None
        if admissions < 0:
            raise MalformedRow(rowno, "admissions must be non-negative")
        prof = profiles.setdefault(hid, HospitalProfile(hid, has_icu))
        if prof.has_icu != has_icu:
            raise MalformedRow(rowno, f"has_icu for {hid} contradicts an earlier row")
        if period in prof.admissions:
            raise MalformedRow(rowno, f"admissions for {hid} {period} given twice")
        prof.admissions[period] = admissions
    return profiles


def derived_admissions() -> dict[str, HospitalProfile]:
    """Back-solved denominators used to reproduce the published Timis estimates."""
    text = resources.files("haisurv").joinpath("data/derived_admissions.csv").read_text(encoding="utf-8")
    return load_hospital_profiles(text)
