"""Seeded synthetic lab exports with known ground truth.

The generator writes a lab export in the format read by
:func:`haisurv.labs.parse_lab_export` and records what it planted: MRSA and
CAZ-resistant isolates, GEN/CIP tested-vs-resistant pairs, and any substring
"distractor" tokens that the legacy scan will wrongly flag.

Drug tokens are always written as dictionary codes, so without distractors
the legacy scan and token mode see exactly the same markers. Codes are upper
case except oxacillin, written ``oxa`` as in the lab text the case-sensitive
legacy search was built for (``OXA`` would slip past it).
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import asdict, dataclass, field
from datetime import date

from .errors import InfeasibleSpec
from .labs import LAB_HEADER
from .periods import Period

STAPH_SPELLINGS = ("Staphylococcus aureus", "S. aureus", "Staph aureus", "S. AUREUS")
GRAM_NEGATIVES = (
    "Escherichia coli",
    "Klebsiella pneumoniae",
    "Pseudomonas aeruginosa",
    "Acinetobacter baumannii",
    "Enterobacter cloacae",
    "Proteus mirabilis",
)
GRAM_POSITIVES = ("Enterococcus faecalis", "Streptococcus pyogenes", "Staphylococcus epidermidis")
SPECIMENS = ("urine", "blood", "wound swab", "sputum", "tracheal aspirate", "catheter tip", "pus")

# filler codes contain no legacy search string
FILLER_CODES = ("AMP", "AMC", "CRO", "CTX", "FEP", "IPM", "MEM", "AMK", "VAN", "ERY", "CLI", "SXT",
                "LNZ", "TCY", "NIT", "TZP", "LVX", "CXM")
MRSA_TRAPS = ("moxifloxacin", "cloxacillin", "flucloxacillin", "dicloxacillin")
CAZ_TRAPS = ("ceftazidime-avibactam",)
# how each code is spelled in the export
SPELLING = {"OXA": "oxa"}
SEPARATORS = (", ", ",", "; ", " / ", " ", ",  ")


@dataclass(frozen=True)
class Planted:
    mrsa_count: int = 0
    caz_count: int = 0
    gen_resistant: int = 0
    gen_tested: int = 0
    cip_resistant: int = 0
    cip_tested: int = 0


@dataclass(frozen=True)
class CorpusSpec:
    n_patients: int
    n_isolates: int
    period: Period
    planted: Planted = field(default_factory=Planted)
    distractor_rate: float = 0.0
    seed: int = 0
    mrsa_flag_rate: float = 0.25

    def check(self):
        p = self.planted
        if min(self.n_patients, self.n_isolates, *asdict(p).values()) < 0:
            raise InfeasibleSpec("counts must be non-negative")
        if self.n_patients > self.n_isolates:
            raise InfeasibleSpec(f"{self.n_patients} patients cannot share {self.n_isolates} isolates")
        if self.n_isolates and not self.n_patients:
            raise InfeasibleSpec("isolates need at least one patient")
        if p.mrsa_count + p.caz_count > self.n_isolates:
            raise InfeasibleSpec(f"{p.mrsa_count} MRSA + {p.caz_count} CAZ-R exceed {self.n_isolates} isolates")
        for code, r, t in (("GEN", p.gen_resistant, p.gen_tested), ("CIP", p.cip_resistant, p.cip_tested)):
            if not r <= t <= self.n_isolates:
                raise InfeasibleSpec(f"{code}: need resistant <= tested <= n_isolates, got {r}/{t}")
        if not 0.0 <= self.distractor_rate <= 1.0 or not 0.0 <= self.mrsa_flag_rate <= 1.0:
            raise InfeasibleSpec("rates must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["period"] = str(self.period)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CorpusSpec:
        d = dict(d)
        d["period"] = Period.parse(d["period"])
        d["planted"] = Planted(**d.get("planted", {}))
        return cls(**d)


def july_2007_spec(seed: int = 42, distractor_rate: float = 0.0) -> CorpusSpec:
    """Planting targets matching the audited hospital's July 2007 lab data."""
    return CorpusSpec(
        n_patients=431,
        n_isolates=560,
        period=Period.month(2007, 7),
        planted=Planted(mrsa_count=29, caz_count=88, gen_resistant=160, gen_tested=389,
                        cip_resistant=125, cip_tested=346),
        distractor_rate=distractor_rate,
        seed=seed,
    )


@dataclass
class Corpus:
    lab_csv: str
    truth: dict

    def truth_json(self) -> str:
        return json.dumps(self.truth, indent=2, sort_keys=True) + "\n"

    def planted_keys(self) -> set[tuple[str, str]]:
        return {(f["isolate_id"], f["marker"]) for f in self.truth["findings"]}

    def legacy_excess_keys(self) -> set[tuple[str, str]]:
        return {(iso, m) for iso, m in self.truth["legacy_excess"]}


def _tested_split(rng, ids, tested, resistant):
    chosen = rng.sample(ids, tested)
    return chosen[:resistant], chosen[resistant:]


def generate_corpus(spec: CorpusSpec) -> Corpus:
    spec.check()
    rng = random.Random(spec.seed)
    p = spec.planted
    n = spec.n_isolates
    ids = [f"I{i:05d}" for i in range(1, n + 1)]

    patients = [f"P{i:04d}" for i in range(1, spec.n_patients + 1)]
    owner = patients + [rng.choice(patients) for _ in range(n - len(patients))]
    rng.shuffle(owner)
    patient_of = dict(zip(ids, owner))

    order = ids[:]
    rng.shuffle(order)
    mrsa_ids = order[:p.mrsa_count]
    caz_ids = order[p.mrsa_count:p.mrsa_count + p.caz_count]
    mrsa_set, caz_set = set(mrsa_ids), set(caz_ids)

    organism = {}
    for iso in ids:
        if iso in mrsa_set:
            organism[iso] = rng.choice(STAPH_SPELLINGS)
        elif iso in caz_set:
            organism[iso] = rng.choice(GRAM_NEGATIVES)
        else:
            organism[iso] = rng.choice(STAPH_SPELLINGS[:1] + GRAM_NEGATIVES + GRAM_POSITIVES)

    profiles: dict[str, dict[str, str]] = {iso: {} for iso in ids}
    flags: dict[str, list[str]] = {}
    for iso in ids:
        prof = profiles[iso]
        org = organism[iso]
        if iso in mrsa_set:
            for code in rng.choice((("FOX",), ("OXA",), ("FOX", "OXA"))):
                prof[code] = "R"
            if rng.random() < spec.mrsa_flag_rate:
                flags[iso] = ["MRSA"]
        elif iso in caz_set:
            prof["CAZ"] = "R"
        elif org in STAPH_SPELLINGS:
            for code in ("FOX", "OXA"):
                if rng.random() < 0.7:
                    prof[code] = "S"
        elif org in GRAM_NEGATIVES:
            roll = rng.random()
            if roll < 0.6:
                prof["CAZ"] = "S"
            elif roll < 0.75:
                prof["CAZ"] = "I"

    # GEN/CIP are planted independently of the markers
    proportions = {}
    for code, resistant, tested in (("GEN", p.gen_resistant, p.gen_tested), ("CIP", p.cip_resistant, p.cip_tested)):
        res, sus = _tested_split(rng, ids, tested, resistant)
        for iso in res:
            profiles[iso][code] = "R"
        for iso in sus:
            profiles[iso][code] = "S" if rng.random() < 0.85 else "I"
        proportions[code] = {"resistant": resistant, "tested": tested,
                             "resistant_isolates": sorted(res), "tested_isolates": sorted(res + sus)}

    for iso in ids:
        prof = profiles[iso]
        for code in rng.sample(FILLER_CODES, rng.randint(1, 5)):
            prof[code] = "R" if rng.random() < 0.3 else "S"

    planted_keys = {(iso, "MRSA") for iso in mrsa_ids} | {(iso, "CAZ_R") for iso in caz_ids}
    distractors = []
    legacy_excess = []
    rows = []
    year_months = spec.period.months()
    for iso in order:
        y, m = rng.choice(year_months)
        when = date(y, m, rng.randint(1, 28))
        date_text = when.isoformat() if rng.random() < 0.8 else when.strftime("%d.%m.%Y")
        specimen = rng.choice(SPECIMENS)
        prof = profiles[iso]
        lines = {k: [c for c in sorted(prof) if prof[c] == k] for k in ("R", "S", "I")}
        lines["R"] += flags.get(iso, [])
        kinds = ["R", "S"] + (["I"] if lines["I"] or rng.random() < 0.3 else [])
        for kind in kinds:
            tokens = [SPELLING.get(c, c) for c in lines[kind]]
            rng.shuffle(tokens)
            if rng.random() < spec.distractor_rate:
                marker = "MRSA" if rng.random() < 0.75 else "CAZ_R"
                trap = rng.choice(MRSA_TRAPS if marker == "MRSA" else CAZ_TRAPS)
                tokens.insert(rng.randint(0, len(tokens)), trap)
                distractors.append({"isolate_id": iso, "line_kind": kind, "token": trap, "marker": marker})
                key = (iso, marker)
                if kind == "R" and key not in planted_keys and list(key) not in legacy_excess:
                    legacy_excess.append(list(key))
            text = rng.choice(SEPARATORS).join(tokens)
            rows.append([iso, patient_of[iso], date_text, specimen, organism[iso], kind, text])

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LAB_HEADER)
    writer.writerows(rows)

    findings = sorted(
        [{"isolate_id": iso, "patient_id": patient_of[iso], "marker": "MRSA"} for iso in mrsa_ids]
        + [{"isolate_id": iso, "patient_id": patient_of[iso], "marker": "CAZ_R"} for iso in caz_ids],
        key=lambda f: (f["isolate_id"], f["marker"]),
    )
    truth = {
        "spec": spec.to_dict(),
        "findings": findings,
        "summary": {
            "mrsa_isolates": len(mrsa_ids),
            "caz_isolates": len(caz_ids),
            "total_marker_isolates": len(mrsa_ids) + len(caz_ids),
            "mrsa_patients": len({patient_of[i] for i in mrsa_ids}),
            "caz_patients": len({patient_of[i] for i in caz_ids}),
            "positive_patients": spec.n_patients,
            "positive_isolates": n,
        },
        "proportions": proportions,
        "profiles": {iso: dict(sorted(profiles[iso].items())) for iso in ids},
        "explicit_flags": {iso: flags[iso] for iso in sorted(flags)},
        "distractors": distractors,
        "legacy_excess": sorted(legacy_excess),
    }
    return Corpus(buf.getvalue(), truth)
