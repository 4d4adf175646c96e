"""Antibiotic vocabulary used to resolve free-text tokens from lab exports.

Matching is whole-token and case-insensitive, with diacritics folded to ASCII
(Romanian lab text writes ``gentamicină``, ``oxacilină`` ...). There is no
substring matching here; the raw substring scan lives in
:func:`haisurv.markers.legacy_substring_scan`.
"""

from __future__ import annotations

import csv
import enum
import io
import re
import unicodedata
from dataclasses import dataclass, field

from .errors import DuplicateSynonym, EmptyToken, MalformedLine

DICTIONARY_HEADER = ("code", "canonical_name", "synonyms", "class", "route")

_CODE_RE = re.compile(r"^[A-Z]{2,4}$")


class Route(enum.Enum):
    PARENTERAL = "parenteral"
    ORAL = "oral"
    BOTH = "both"


class MatchKind(enum.Enum):
    CODE = "code"
    NAME = "name"
    SYNONYM = "synonym"
    EXPLICIT_FLAG = "explicit_flag"
    UNKNOWN = "unknown"


# Tokens that carry a lab's own verdict rather than naming a drug.
EXPLICIT_FLAGS = {"mrsa": "MRSA"}


def fold(token: str) -> str:
    """Trim, strip diacritics and case-fold ``token``."""
    decomposed = unicodedata.normalize("NFKD", token.strip())
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return stripped.casefold()


@dataclass(frozen=True)
class AntibioticEntry:
    code: str
    canonical_name: str
    synonyms: frozenset[str] = frozenset()
    drug_class: str = ""
    route: Route = Route.BOTH

    def tokens(self) -> dict[str, MatchKind]:
        """All folded spellings of this entry and how each one matches."""
        out = {fold(s): MatchKind.SYNONYM for s in self.synonyms if s.strip()}
        out[fold(self.canonical_name)] = MatchKind.NAME
        out[fold(self.code)] = MatchKind.CODE
        return out


@dataclass(frozen=True)
class MatchResult:
    code: str | None
    kind: MatchKind

    @property
    def is_known(self) -> bool:
        return self.code is not None


UNKNOWN = MatchResult(None, MatchKind.UNKNOWN)


@dataclass(frozen=True)
class Dictionary:
    """Immutable code -> entry table with a folded-token index."""

    entries: dict[str, AntibioticEntry]
    index: dict[str, tuple[str, MatchKind]] = field(repr=False)

    @classmethod
    def from_entries(cls, entries) -> Dictionary:
        by_code: dict[str, AntibioticEntry] = {}
        for e in entries:
            if e.code in by_code:
                raise ValueError(f"duplicate code {e.code}")
            by_code[e.code] = e
        index: dict[str, tuple[str, MatchKind]] = {}
        owners: dict[str, set[str]] = {}
        for flag_token, flag in EXPLICIT_FLAGS.items():
            index[flag_token] = (flag, MatchKind.EXPLICIT_FLAG)
            owners[flag_token] = {flag}
        for code in sorted(by_code):
            for tok, kind in by_code[code].tokens().items():
                owners.setdefault(tok, set()).add(code)
                index[tok] = (code, kind)
        for tok, codes in sorted(owners.items()):
            if len(codes) > 1:
                raise DuplicateSynonym(tok, codes)
        return cls(entries=by_code, index=index)

    def __contains__(self, code: str) -> bool:
        return code in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def codes(self) -> list[str]:
        return sorted(self.entries)


def lookup_token(dictionary: Dictionary, token: str) -> MatchResult:
    key = fold(token)
    if not key:
        raise EmptyToken("empty antibiotic token")
    hit = dictionary.index.get(key)
    if hit is None:
        return UNKNOWN
    return MatchResult(*hit)


def _entry(code, name, synonyms=(), drug_class="", route=Route.BOTH):
    return AntibioticEntry(code, name, frozenset(synonyms), drug_class, route)


P, O, B = Route.PARENTERAL, Route.ORAL, Route.BOTH

# Names that merely contain a marker substring (moxifloxacin, cloxacillin and
# relatives) are deliberately absent so they surface as unknown tokens.
_BUILTIN = (
    _entry("PEN", "penicillin", ["penicilina", "benzylpenicillin"], "penicillin", P),
    _entry("AMP", "ampicillin", ["ampicilina"], "aminopenicillin", B),
    _entry("AMX", "amoxicillin", ["amoxicilina"], "aminopenicillin", O),
    _entry("AMC", "amoxicillin-clavulanate", ["augmentin", "amoxicilina-clavulanat", "amoxiclav"], "beta-lactam/inhibitor", B),
    _entry("OXA", "oxacillin", ["oxacilina"], "penicillinase-resistant penicillin", P),
    _entry("TZP", "piperacillin-tazobactam", ["piperacilina-tazobactam"], "beta-lactam/inhibitor", P),
    _entry("CZO", "cefazolin", ["cefazolina"], "1st-gen cephalosporin", P),
    _entry("CXM", "cefuroxime", ["cefuroxim", "cefuroxima"], "2nd-gen cephalosporin", B),
    _entry("FOX", "cefoxitin", ["cefoxitina"], "cephamycin", P),
    _entry("CAZ", "ceftazidime", ["ceftazidim", "ceftazidima", "fortum"], "3rd-gen cephalosporin", P),
    _entry("CRO", "ceftriaxone", ["ceftriaxona"], "3rd-gen cephalosporin", P),
    _entry("CTX", "cefotaxime", ["cefotaxim", "cefotaxima"], "3rd-gen cephalosporin", P),
    _entry("FEP", "cefepime", ["cefepima"], "4th-gen cephalosporin", P),
    _entry("IPM", "imipenem", ["imipenem-cilastatin"], "carbapenem", P),
    _entry("MEM", "meropenem", [], "carbapenem", P),
    _entry("ETP", "ertapenem", [], "carbapenem", P),
    _entry("GEN", "gentamicin", ["gentamicina", "gentamycin"], "aminoglycoside", P),
    _entry("AMK", "amikacin", ["amikacina"], "aminoglycoside", P),
    _entry("TOB", "tobramycin", ["tobramicina"], "aminoglycoside", P),
    _entry("CIP", "ciprofloxacin", ["ciprofloxacina", "cipro"], "fluoroquinolone", B),
    _entry("LVX", "levofloxacin", ["levofloxacina"], "fluoroquinolone", B),
    _entry("ERY", "erythromycin", ["eritromicina"], "macrolide", B),
    _entry("CLI", "clindamycin", ["clindamicina"], "lincosamide", B),
    _entry("VAN", "vancomycin", ["vancomicina"], "glycopeptide", P),
    _entry("TEC", "teicoplanin", ["teicoplanina"], "glycopeptide", P),
    _entry("LNZ", "linezolid", [], "oxazolidinone", B),
    _entry("SXT", "trimethoprim-sulfamethoxazole", ["cotrimoxazol", "co-trimoxazole", "biseptol"], "folate antagonist", B),
    _entry("TCY", "tetracycline", ["tetraciclina"], "tetracycline", O),
    _entry("DOX", "doxycycline", ["doxiciclina"], "tetracycline", O),
    _entry("CHL", "chloramphenicol", ["cloramfenicol"], "phenicol", B),
    _entry("NIT", "nitrofurantoin", ["nitrofurantoina"], "nitrofuran", O),
    _entry("RIF", "rifampicin", ["rifampin", "rifampicina"], "rifamycin", B),
    _entry("FUS", "fusidic-acid", ["acid-fusidic"], "fusidane", B),
    _entry("COL", "colistin", ["colistina", "polymyxin-e"], "polymyxin", P),
)


def builtin_default() -> Dictionary:
    return Dictionary.from_entries(_BUILTIN)


def _split_synonyms(field_text: str) -> list[str]:
    return [s.strip() for s in field_text.split("|") if s.strip()]


def load_dictionary(text: str, base: Dictionary | None = None) -> Dictionary:
    """Parse a dictionary CSV and merge it over ``base`` (builtin by default).

    A line for a code already in ``base`` replaces its name, class and route
    (blank fields keep the old value) and adds to its synonyms. Any token
    that would then resolve to two codes raises :class:`DuplicateSynonym`.
    """
    base = builtin_default() if base is None else base
    merged = dict(base.entries)
    seen_codes: set[str] = set()
    header_seen = False

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = next(csv.reader(io.StringIO(line)))
        fields = [f.strip() for f in fields]
        if not header_seen:
            if tuple(f.lower() for f in fields) != DICTIONARY_HEADER:
                raise MalformedLine(lineno, f"expected header {','.join(DICTIONARY_HEADER)}")
            header_seen = True
            continue
        if len(fields) != len(DICTIONARY_HEADER):
            raise MalformedLine(lineno, f"expected {len(DICTIONARY_HEADER)} fields, got {len(fields)}")
        code, name, synonyms, drug_class, route = fields
        code = code.upper()
        if not _CODE_RE.match(code):
            raise MalformedLine(lineno, f"code must be 2-4 letters: {code!r}")
        if code in seen_codes:
            raise MalformedLine(lineno, f"code {code} defined twice")
        if fold(code) in EXPLICIT_FLAGS:
            raise MalformedLine(lineno, f"{code} is a reserved flag, not a drug")
        seen_codes.add(code)
        if route:
            try:
                route_value = Route(route.lower())
            except ValueError:
                raise MalformedLine(lineno, f"unknown route {route!r}") from None
        else:
            route_value = None

        old = merged.get(code)
        if old is None:
            if not name:
                raise MalformedLine(lineno, f"new code {code} needs a canonical_name")
            merged[code] = AntibioticEntry(
                code, name, frozenset(_split_synonyms(synonyms)), drug_class, route_value or Route.BOTH
            )
        else:
            merged[code] = AntibioticEntry(
                code,
                name or old.canonical_name,
                old.synonyms | frozenset(_split_synonyms(synonyms)),
                drug_class or old.drug_class,
                route_value or old.route,
            )

    return Dictionary.from_entries(merged.values())
