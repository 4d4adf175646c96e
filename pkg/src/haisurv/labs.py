"""Parsing of microbiology lab exports into per-isolate S/I/R profiles.

Export layout: one CSV row per result line, up to three rows per isolate
(one each for resistant, susceptible and intermediate drugs)::

    isolate_id,patient_id,date,specimen,organism,line_kind,antibiotics
    A17,P003,2007-07-02,urine,Escherichia coli,R,"AMP, CAZ; CIP"
    A17,P003,2007-07-02,urine,Escherichia coli,S,GEN/AMK
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import re
from dataclasses import dataclass, field
from datetime import date, datetime

from .antibiotics import Dictionary, MatchKind, fold, lookup_token
from .errors import EmptyInput, InvalidEncoding, MalformedCsv
from .periods import Period

logger = logging.getLogger(__name__)

LAB_HEADER = ("isolate_id", "patient_id", "date", "specimen", "organism", "line_kind", "antibiotics")

_SPLIT_RE = re.compile(r"[,;/\s]+")

STAPH_AUREUS_SPELLINGS = (
    "staphylococcus aureus",
    "s. aureus",
    "s aureus",
    "staph aureus",
    "staph. aureus",
)


class LineKind(enum.Enum):
    R = "R"
    S = "S"
    I = "I"  # noqa: E741


class Category(enum.Enum):
    R = "R"
    S = "S"
    I = "I"  # noqa: E741
    CONFLICT = "conflict"


class OrganismKind(enum.Enum):
    STAPH_AUREUS = "staph_aureus"
    OTHER = "other"
    UNKNOWN = "unknown"


class WarningKind(enum.Enum):
    UNKNOWN_TOKEN = "unknown_token"
    CONFLICT = "conflict"
    MISSING_LINE_KIND = "missing_line_kind"
    MALFORMED_DATE = "malformed_date"
    DUPLICATE_ROW = "duplicate_row"
    MALFORMED_ROW = "malformed_row"


@dataclass(frozen=True)
class Organism:
    raw: str
    kind: OrganismKind
    name: str = ""

    @property
    def is_staph_aureus(self) -> bool:
        return self.kind is OrganismKind.STAPH_AUREUS


@dataclass(frozen=True)
class LabRow:
    isolate_id: str
    patient_id: str
    collection_date: date | None
    specimen_text: str
    organism_text: str
    line_kind: LineKind
    antibiotics_text: str
    row_number: int = field(default=0, compare=False)


@dataclass
class IsolateRecord:
    isolate_id: str
    patient_id: str
    collection_date: date | None
    organism: Organism
    profile: dict[str, Category] = field(default_factory=dict)
    explicit_flags: frozenset[str] = frozenset()
    unknown_tokens: list[tuple[str, LineKind]] = field(default_factory=list)
    specimen: str = ""

    def codes_with(self, category: Category) -> set[str]:
        return {c for c, cat in self.profile.items() if cat is category}

    def is_resistant(self, code: str) -> bool:
        return self.profile.get(code) is Category.R

    def to_dict(self) -> dict:
        return {
            "isolate_id": self.isolate_id,
            "patient_id": self.patient_id,
            "collection_date": self.collection_date.isoformat() if self.collection_date else None,
            "specimen": self.specimen,
            "organism": {"raw": self.organism.raw, "normalized": self.organism.kind.value, "name": self.organism.name},
            "profile": {c: self.profile[c].value for c in sorted(self.profile)},
            "explicit_flags": sorted(self.explicit_flags),
            "unknown_tokens": [[t, k.value] for t, k in self.unknown_tokens],
        }


@dataclass(frozen=True, order=True)
class ParseWarning:
    row_number: int
    kind: WarningKind = field(compare=False)
    detail: str = field(compare=False)

    def to_dict(self) -> dict:
        return {"row": self.row_number, "kind": self.kind.value, "detail": self.detail}


@dataclass
class ParseDiagnostics:
    warnings: list[ParseWarning] = field(default_factory=list)

    def add(self, row, kind, detail):
        self.warnings.append(ParseWarning(row, kind, detail))

    def of_kind(self, kind: WarningKind) -> list[ParseWarning]:
        return [w for w in self.warnings if w.kind is kind]

    def sort(self):
        self.warnings.sort(key=lambda w: (w.row_number, w.kind.value, w.detail))

    def __len__(self):
        return len(self.warnings)

    def to_list(self) -> list[dict]:
        return [w.to_dict() for w in self.warnings]


def tokenize_resistance_string(text: str) -> list[str]:
    """Split on commas, semicolons, slashes and whitespace; drop empties."""
    return [t for t in _SPLIT_RE.split(text or "") if t]


def normalize_organism(text: str) -> Organism:
    raw = text or ""
    key = " ".join(fold(raw).split())
    if not key:
        return Organism(raw, OrganismKind.UNKNOWN)
    for spelling in STAPH_AUREUS_SPELLINGS:
        if key == spelling or (key.startswith(spelling) and not key[len(spelling)].isalnum()):
            return Organism(raw, OrganismKind.STAPH_AUREUS, "Staphylococcus aureus")
    return Organism(raw, OrganismKind.OTHER, raw.strip())


def parse_date(text: str) -> date | None:
    """ISO ``YYYY-MM-DD`` or Romanian ``DD.MM.YYYY``; ``None`` otherwise."""
    text = (text or "").strip()
    for fmt in ("%Y-%m-%d", "%d.%m.%Y"):
        try:
            return datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    return None


def _decode(data) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidEncoding(exc.start, exc.reason) from None
    return data


def read_lab_rows(data, *, strict: bool = False) -> tuple[list[LabRow], ParseDiagnostics]:
    """Read the export into :class:`LabRow` objects without resolving tokens.

    Rows with the wrong field count, an empty identifier or an unrecognised
    ``line_kind`` are skipped with a diagnostic (``strict`` raises
    :class:`MalformedCsv` on the first bad row instead). Byte-identical
    repeats of an earlier row are collapsed.
    """
    text = _decode(data)
    if text.startswith("\ufeff"):
        text = text[1:]
    if not text.strip():
        raise EmptyInput("lab export is empty")

    diag = ParseDiagnostics()
    reader = csv.reader(io.StringIO(text, newline=""))
    rows: list[LabRow] = []
    seen: dict[tuple, int] = {}
    header = None
    for fields in reader:
        rowno = reader.line_num
        if not any(f.strip() for f in fields):
            continue
        if header is None:
            header = tuple(f.strip().lower() for f in fields)
            if header != LAB_HEADER:
                raise MalformedCsv(rowno, f"expected header {','.join(LAB_HEADER)}")
            continue

        def bad(kind, detail):
            if strict:
                raise MalformedCsv(rowno, detail)
            diag.add(rowno, kind, detail)

        if len(fields) != len(LAB_HEADER):
            bad(WarningKind.MALFORMED_ROW, f"expected {len(LAB_HEADER)} fields, got {len(fields)}")
            continue
        iso, pat, date_text, specimen, organism, kind_text, abx = (f.strip() for f in fields)
        if not iso or not pat:
            bad(WarningKind.MALFORMED_ROW, "empty isolate_id or patient_id")
            continue
        try:
            kind = LineKind(kind_text.upper())
        except ValueError:
            bad(WarningKind.MISSING_LINE_KIND, f"line_kind {kind_text!r} is not R, S or I")
            continue
        key = (iso, pat, date_text, specimen, organism, kind, abx)
        if key in seen:
            diag.add(rowno, WarningKind.DUPLICATE_ROW, f"repeats row {seen[key]}")
            continue
        seen[key] = rowno
        when = parse_date(date_text)
        if when is None:
            diag.add(rowno, WarningKind.MALFORMED_DATE, f"unparseable date {date_text!r}")
        rows.append(LabRow(iso, pat, when, specimen, organism, kind, abx, rowno))
    if header is None:
        raise EmptyInput("lab export has no header")
    return rows, diag


def build_records(rows: list[LabRow], dictionary: Dictionary,
                  diag: ParseDiagnostics | None = None) -> list[IsolateRecord]:
    """Group rows by isolate and resolve each token into the profile."""
    diag = ParseDiagnostics() if diag is None else diag
    groups: dict[str, list[LabRow]] = {}
    for row in rows:
        groups.setdefault(row.isolate_id, []).append(row)

    records = []
    for iso, group in groups.items():
        first = group[0]
        for row in group[1:]:
            if row.patient_id != first.patient_id:
                diag.add(row.row_number, WarningKind.CONFLICT,
                         f"isolate {iso}: patient_id {row.patient_id!r} differs from {first.patient_id!r}; kept the first")
        when = next((r.collection_date for r in group if r.collection_date), None)
        organism_text = next((r.organism_text for r in group if r.organism_text), "")
        specimen = next((r.specimen_text for r in group if r.specimen_text), "")

        seen_kinds: dict[str, set[LineKind]] = {}
        flags: set[str] = set()
        unknown: list[tuple[str, LineKind]] = []
        for row in group:
            for token in tokenize_resistance_string(row.antibiotics_text):
                hit = lookup_token(dictionary, token)
                if hit.kind is MatchKind.EXPLICIT_FLAG:
                    flags.add(hit.code)
                elif hit.code is None:
                    unknown.append((token, row.line_kind))
                    diag.add(row.row_number, WarningKind.UNKNOWN_TOKEN, f"isolate {iso}: unresolved token {token!r}")
                else:
                    kinds = seen_kinds.setdefault(hit.code, set())
                    if kinds and row.line_kind not in kinds:
                        diag.add(row.row_number, WarningKind.CONFLICT,
                                 f"isolate {iso}: {hit.code} reported under several line kinds")
                    kinds.add(row.line_kind)

        profile = {
            code: Category(next(iter(kinds)).value) if len(kinds) == 1 else Category.CONFLICT
            for code, kinds in seen_kinds.items()
        }
        records.append(IsolateRecord(
            isolate_id=iso,
            patient_id=first.patient_id,
            collection_date=when,
            organism=normalize_organism(organism_text),
            profile=profile,
            explicit_flags=frozenset(flags),
            unknown_tokens=unknown,
            specimen=specimen,
        ))
    records.sort(key=record_sort_key)
    return records


def record_sort_key(record: IsolateRecord):
    # undated records go last
    d = record.collection_date
    return (d is None, d or date.min, record.isolate_id)


def parse_lab_export(data, dictionary: Dictionary, *, strict: bool = False
                     ) -> tuple[list[IsolateRecord], ParseDiagnostics]:
    rows, diag = read_lab_rows(data, strict=strict)
    records = build_records(rows, dictionary, diag)
    diag.sort()
    logger.debug("parsed %d rows into %d isolates (%d warnings)", len(rows), len(records), len(diag))
    return records, diag


def filter_period(records, period: Period) -> list[IsolateRecord]:
    return [r for r in records if period.contains(r.collection_date)]


def distinct_patients(records) -> set[str]:
    return {r.patient_id for r in records}
