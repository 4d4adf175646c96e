"""Sentinel resistance markers: MRSA and ceftazidime resistance.

Token mode (:func:`detect_mrsa`, :func:`detect_caz`) works on parsed
profiles. :func:`legacy_substring_scan` reproduces the old raw string search
over resistant lines; it over-matches by design and is meant to be narrowed by
manual adjudication (:func:`apply_adjudication`).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import AdjudicationError, NotTested
from .labs import Category, IsolateRecord, LabRow, LineKind, filter_period, tokenize_resistance_string
from .periods import Period

ADJUDICATION_HEADER = ("isolate_id", "marker", "status", "note")

LEGACY_MRSA_STRINGS = ("MRSA", "FOX", "fox", "oxa")
LEGACY_CAZ_STRINGS = ("CAZ", "ceftazidim")

MRSA_DRUGS = ("FOX", "OXA")


class Marker(enum.Enum):
    MRSA = "MRSA"
    CAZ_R = "CAZ_R"


class EvidenceSource(enum.Enum):
    EXPLICIT_FLAG = "explicit_flag"
    PROFILE_CODE = "profile_code"
    RAW_SUBSTRING = "raw_substring"


class Status(enum.Enum):
    PENDING = "pending"
    CONFIRMED = "confirmed"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Evidence:
    source: EvidenceSource
    token: str
    pattern: str | None = None

    def to_dict(self) -> dict:
        d = {"source": self.source.value, "token": self.token}
        if self.pattern is not None:
            d["pattern"] = self.pattern
        return d


@dataclass(frozen=True)
class MarkerFinding:
    isolate_id: str
    patient_id: str
    marker: Marker
    evidence: tuple[Evidence, ...]
    status: Status = Status.PENDING
    note: str = ""

    def __post_init__(self):
        if not self.evidence:
            raise ValueError("a finding needs at least one piece of evidence")

    @property
    def key(self) -> tuple[str, Marker]:
        return self.isolate_id, self.marker

    def to_dict(self) -> dict:
        d = {
            "isolate_id": self.isolate_id,
            "patient_id": self.patient_id,
            "marker": self.marker.value,
            "evidence": [e.to_dict() for e in self.evidence],
            "status": self.status.value,
        }
        if self.note:
            d["note"] = self.note
        return d


def detect_mrsa(record: IsolateRecord) -> MarkerFinding | None:
    """MRSA if the lab flagged it, or S. aureus resistant to cefoxitin/oxacillin."""
    evidence = []
    if "MRSA" in record.explicit_flags:
        evidence.append(Evidence(EvidenceSource.EXPLICIT_FLAG, "MRSA"))
    if record.organism.is_staph_aureus:
        evidence += [Evidence(EvidenceSource.PROFILE_CODE, code) for code in MRSA_DRUGS if record.is_resistant(code)]
    if not evidence:
        return None
    return MarkerFinding(record.isolate_id, record.patient_id, Marker.MRSA, tuple(evidence))


def detect_caz(record: IsolateRecord) -> MarkerFinding | None:
    if not record.is_resistant("CAZ"):
        return None
    return MarkerFinding(record.isolate_id, record.patient_id, Marker.CAZ_R,
                         (Evidence(EvidenceSource.PROFILE_CODE, "CAZ"),))


def detect(records) -> list[MarkerFinding]:
    """Run both token-mode rules over ``records``, in record order."""
    out = []
    for rec in records:
        for rule in (detect_mrsa, detect_caz):
            hit = rule(rec)
            if hit is not None:
                out.append(hit)
    return out


def legacy_substring_scan(raw_rows: list[LabRow]) -> list[MarkerFinding]:
    """Case-sensitive substring search over resistant lines.

    Organism text and antibiotics text of every R line are searched for
    ``MRSA``/``FOX``/``fox``/``oxa`` (MRSA) and ``CAZ``/``ceftazidim``
    (CAZ_R). Hits on the same isolate are merged into one finding per marker,
    each hit kept as evidence. The organism is not checked.
    """
    evidence: dict[tuple[str, Marker], list[Evidence]] = {}
    patients: dict[str, str] = {}
    for row in raw_rows:
        if row.line_kind is not LineKind.R:
            continue
        patients.setdefault(row.isolate_id, row.patient_id)
        chunks = [row.organism_text] if row.organism_text else []
        chunks += tokenize_resistance_string(row.antibiotics_text)
        for chunk in chunks:
            for marker, patterns in ((Marker.MRSA, LEGACY_MRSA_STRINGS), (Marker.CAZ_R, LEGACY_CAZ_STRINGS)):
                for pat in patterns:
                    if pat in chunk:
                        ev = Evidence(EvidenceSource.RAW_SUBSTRING, chunk, pat)
                        hits = evidence.setdefault((row.isolate_id, marker), [])
                        if ev not in hits:
                            hits.append(ev)
    return [MarkerFinding(iso, patients[iso], marker, tuple(ev)) for (iso, marker), ev in evidence.items()]


@dataclass(frozen=True)
class Verdict:
    status: Status
    note: str = ""


@dataclass
class AdjudicationFile:
    entries: dict[tuple[str, Marker], Verdict] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_findings(cls, findings, confirm) -> AdjudicationFile:
        """Adjudicate every finding: confirmed where ``confirm(finding)`` is true, else rejected."""
        return cls({f.key: Verdict(Status.CONFIRMED if confirm(f) else Status.REJECTED) for f in findings})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ADJUDICATION_HEADER)
        for (iso, marker), v in sorted(self.entries.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
            w.writerow([iso, marker.value, v.status.value, v.note])
        return buf.getvalue()


def load_adjudication(text: str) -> AdjudicationFile:
    reader = csv.reader(io.StringIO(text, newline=""))
    entries: dict[tuple[str, Marker], Verdict] = {}
    header = None
    for fields in reader:
        rowno = reader.line_num
        if not any(f.strip() for f in fields):
            continue
        fields = [f.strip() for f in fields]
        if header is None:
            header = tuple(f.lower() for f in fields)
            if header != ADJUDICATION_HEADER:
                raise AdjudicationError(rowno, f"expected header {','.join(ADJUDICATION_HEADER)}")
            continue
        if len(fields) != len(ADJUDICATION_HEADER):
            raise AdjudicationError(rowno, f"expected {len(ADJUDICATION_HEADER)} fields, got {len(fields)}")
        iso, marker_text, status_text, note = fields
        try:
            marker = Marker(marker_text.upper())
        except ValueError:
            raise AdjudicationError(rowno, f"unknown marker {marker_text!r}") from None
        try:
            status = Status(status_text.lower())
        except ValueError:
            status = None
        if status not in (Status.CONFIRMED, Status.REJECTED):
            raise AdjudicationError(rowno, f"status must be confirmed or rejected, got {status_text!r}")
        if (iso, marker) in entries:
            raise AdjudicationError(rowno, f"duplicate entry for ({iso}, {marker.value})")
        entries[iso, marker] = Verdict(status, note)
    return AdjudicationFile(entries)


def apply_adjudication(findings, adj: AdjudicationFile) -> tuple[list[MarkerFinding], list[tuple[str, Marker]]]:
    """Stamp verdicts onto findings.

    Returns the updated findings (same order, same length) and the
    adjudication keys that matched no finding.
    """
    out = []
    used = set()
    for f in findings:
        v = adj.entries.get(f.key)
        if v is None:
            out.append(f)
        else:
            used.add(f.key)
            out.append(replace(f, status=v.status, note=v.note))
    unknown = [k for k in adj.entries if k not in used]
    return out, unknown


@dataclass(frozen=True)
class MarkerSummary:
    period: Period | None
    mrsa_isolates: int
    caz_isolates: int
    total_marker_isolates: int
    mrsa_patients: int
    caz_patients: int
    positive_patients: int
    positive_isolates: int

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["period"] = str(self.period) if self.period else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> MarkerSummary:
        values = {k: d[k] for k in cls.__dataclass_fields__ if k != "period"}
        return cls(period=Period.parse(d["period"]) if d.get("period") else None, **values)


def summarize(records, findings, period: Period | None = None) -> MarkerSummary:
    """Count non-rejected findings among the records in ``period``.

    An isolate carrying both markers is counted once, as MRSA. Patient counts
    are distinct patients per marker within the same window.
    """
    scoped = filter_period(records, period) if period is not None else list(records)
    patient_of = {r.isolate_id: r.patient_id for r in scoped}

    markers_by_isolate: dict[str, set[Marker]] = {}
    for f in findings:
        if f.status is Status.REJECTED or f.isolate_id not in patient_of:
            continue
        markers_by_isolate.setdefault(f.isolate_id, set()).add(f.marker)

    mrsa = {iso for iso, ms in markers_by_isolate.items() if Marker.MRSA in ms}
    caz = {iso for iso, ms in markers_by_isolate.items() if Marker.MRSA not in ms}
    return MarkerSummary(
        period=period,
        mrsa_isolates=len(mrsa),
        caz_isolates=len(caz),
        total_marker_isolates=len(mrsa) + len(caz),
        mrsa_patients=len({patient_of[i] for i in mrsa}),
        caz_patients=len({patient_of[i] for i in caz}),
        positive_patients=len(set(patient_of.values())),
        positive_isolates=len(patient_of),
    )


@dataclass(frozen=True)
class Proportion:
    code: str
    resistant: int
    tested: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.resistant, self.tested)

    @property
    def percent(self) -> int:
        """Whole percent, half-up."""
        return int(self.fraction * 100 + Fraction(1, 2))

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "resistant": self.resistant,
            "tested": self.tested,
            "fraction": round(float(self.fraction), 4),
            "percent": self.percent,
        }


def resistance_proportion(records, code: str, period: Period | None = None) -> Proportion:
    """Share of tested isolates resistant to ``code``; conflicts are left out entirely."""
    scoped = filter_period(records, period) if period is not None else records
    code = code.upper()
    tested = resistant = 0
    for r in scoped:
        cat = r.profile.get(code)
        if cat is None or cat is Category.CONFLICT:
            continue
        tested += 1
        resistant += cat is Category.R
    if tested == 0:
        raise NotTested(code)
    return Proportion(code, resistant, tested)
