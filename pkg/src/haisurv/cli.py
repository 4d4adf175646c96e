"""``haisurv`` command line.

Every subcommand prints a human-readable summary to stdout; ``--json`` prints
the machine-readable document instead and ``-o FILE`` writes it to a file.
Exit status: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .antibiotics import builtin_default, load_dictionary
from .corpus import CorpusSpec, generate_corpus, july_2007_spec
from .errors import DataError, NotTested
from .labs import build_records, distinct_patients, filter_period, parse_lab_export, read_lab_rows
from .markers import (
    MarkerSummary,
    apply_adjudication,
    detect,
    legacy_substring_scan,
    load_adjudication,
    resistance_proportion,
    summarize,
)
from .periods import Period
from .registry import aggregate, completeness, concentration, cross_validate, ingest_reports
from .stats import build_estimate, default_reference_rates, load_hospital_profiles, load_reference_rates

logger = logging.getLogger("haisurv")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    dictionary_path: str | None = None
    reference_rates_path: str | None = None
    hospital_profiles_path: str | None = None
    mode: str = "token"
    strictness: str = "lenient"
    primary_reference_label: str | None = None

    @classmethod
    def load(cls, path: str | None) -> RunConfig:
        if path is None:
            return cls()
        data = _load_json(path, "--config")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise UsageError(f"--config: unknown key(s) {', '.join(sorted(extra))}")
        cfg = cls(**data)
        if cfg.mode not in ("token", "legacy"):
            raise UsageError(f"--config: mode must be token or legacy, got {cfg.mode!r}")
        if cfg.strictness not in ("strict", "lenient"):
            raise UsageError(f"--config: strictness must be strict or lenient, got {cfg.strictness!r}")
        return cfg


def _read_bytes(path: str, flag: str) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: no such file: {path}")
    return p.read_bytes()


def _read_text(path: str, flag: str) -> str:
    data = _read_bytes(path, flag)
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from None


def _load_json(path: str, flag: str):
    try:
        return json.loads(_read_text(path, flag))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from None


def _period_arg(text: str) -> Period:
    try:
        return Period.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(args, doc: dict, text: str):
    payload = json.dumps(doc, indent=2, sort_keys=False, default=str)
    if getattr(args, "output", None):
        Path(args.output).write_text(payload + "\n", encoding="utf-8")
    if args.json:
        print(payload)
    else:
        print(text)


def _dictionary(args, cfg):
    path = args.dictionary or cfg.dictionary_path
    if path is None:
        return builtin_default()
    return load_dictionary(_read_text(path, "--dictionary"))


def _strict(args, cfg) -> bool:
    return bool(getattr(args, "strict", False)) or cfg.strictness == "strict"


def cmd_parse(args, cfg) -> int:
    records, diag = parse_lab_export(_read_bytes(args.lab, "lab"), _dictionary(args, cfg), strict=_strict(args, cfg))
    doc = {
        "isolates": len(records),
        "patients": len(distinct_patients(records)),
        "records": [r.to_dict() for r in records],
        "diagnostics": diag.to_list(),
    }
    lines = [f"{len(records)} isolates from {doc['patients']} patients, {len(diag)} warning(s)"]
    lines += [f"  row {w.row_number}: {w.kind.value}: {w.detail}" for w in diag.warnings[:20]]
    if len(diag) > 20:
        lines.append(f"  ... {len(diag) - 20} more")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_detect(args, cfg) -> int:
    dictionary = _dictionary(args, cfg)
    legacy = args.legacy_scan or cfg.mode == "legacy"
    rows, diag = read_lab_rows(_read_bytes(args.lab, "lab"), strict=_strict(args, cfg))
    records = build_records(rows, dictionary, diag)
    diag.sort()
    findings = legacy_substring_scan(rows) if legacy else detect(records)
    unknown_keys = []
    if args.adjudication:
        adj = load_adjudication(_read_text(args.adjudication, "--adjudication"))
        findings, unknown_keys = apply_adjudication(findings, adj)
        for iso, marker in unknown_keys:
            logger.warning("adjudication entry (%s, %s) matches no finding", iso, marker.value)
    summary = summarize(records, findings, args.period)
    if args.period is not None:
        in_period = {r.isolate_id for r in filter_period(records, args.period)}
        findings = [f for f in findings if f.isolate_id in in_period]
        scoped = filter_period(records, args.period)
    else:
        scoped = records

    proportions = {}
    for code in filter(None, (c.strip().upper() for c in args.proportions.split(","))):
        try:
            proportions[code] = resistance_proportion(scoped, code).to_dict()
        except NotTested:
            proportions[code] = {"code": code, "resistant": 0, "tested": 0, "fraction": None, "percent": None}

    doc = {
        "mode": "legacy" if legacy else "token",
        "summary": summary.to_dict(),
        "findings": [f.to_dict() for f in findings],
        "proportions": proportions,
        "unknown_adjudication_keys": [[iso, m.value] for iso, m in unknown_keys],
        "diagnostics": diag.to_list(),
    }
    s = summary
    lines = [
        f"mode: {doc['mode']}   period: {s.period or 'all'}",
        f"positive cultures: {s.positive_isolates} isolates, {s.positive_patients} patients",
        f"MRSA: {s.mrsa_isolates} isolates ({s.mrsa_patients} patients)",
        f"CAZ-R: {s.caz_isolates} isolates ({s.caz_patients} patients)",
        f"marker total: {s.total_marker_isolates}",
    ]
    for code, p in proportions.items():
        if p["tested"]:
            lines.append(f"{code}: {p['resistant']}/{p['tested']} resistant ({p['percent']}%)")
        else:
            lines.append(f"{code}: not tested")
    if unknown_keys:
        lines.append(f"warning: {len(unknown_keys)} adjudication entr(ies) matched no finding")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_stats(args, cfg) -> int:
    summary = None
    period = args.period
    if args.summary:
        doc = _load_json(args.summary, "summary")
        summary = MarkerSummary.from_dict(doc.get("summary", doc))
        period = period or summary.period
    if period is None:
        raise UsageError("--period is required when the summary carries none")

    profile_path = args.profile or cfg.hospital_profiles_path
    if profile_path is None:
        raise UsageError("--profile is required")
    profiles = load_hospital_profiles(_read_text(profile_path, "--profile"))
    if args.hospital:
        if args.hospital not in profiles:
            raise UsageError(f"--hospital: {args.hospital} not in {profile_path}")
        profile = profiles[args.hospital]
    elif len(profiles) == 1:
        profile = next(iter(profiles.values()))
    else:
        raise UsageError(f"--hospital is required; {profile_path} lists {', '.join(sorted(profiles))}")

    rates_path = args.rates or cfg.reference_rates_path
    refs = load_reference_rates(_read_text(rates_path, "--rates")) if rates_path else default_reference_rates()
    try:
        est = build_estimate(profile.hospital_id, period, args.reported, summary, profile, refs,
                             args.primary or cfg.primary_reference_label)
    except KeyError as exc:
        raise UsageError(f"--primary: {exc.args[0]}") from None
    d = est.to_dict()
    lines = [
        f"{est.scope} {est.period}: {est.admissions} admissions",
        f"reported: {est.reported} ({d['reported_rate_per_100']} per 100 admissions)",
    ]
    if est.marker_lower_bound is not None:
        lines.append(f"marker lower bound: {est.marker_lower_bound}")
    lines += [
        f"expected: {est.expected_point} ({est.primary_reference}), range {est.expected_low}-{est.expected_high}",
        f"under-reporting ratio: {d['underreporting_ratio']}",
    ]
    _emit(args, d, "\n".join(lines))
    return EXIT_OK


def _hospital_list(value: str) -> list[str]:
    p = Path(value)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
        return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    return [h.strip() for h in value.split(",") if h.strip()]


def cmd_report(args, cfg) -> int:
    registry = ingest_reports(_read_text(args.reports, "reports"))
    conflicts = cross_validate(registry)
    matrix = aggregate(registry, strict=_strict(args, cfg))
    hospitals = _hospital_list(args.hospitals) if args.hospitals else None
    comp = completeness(registry, hospitals)
    conc = concentration(matrix) if matrix.grand_total > 0 else None
    if args.matrix_csv:
        Path(args.matrix_csv).write_text(matrix.to_csv(), encoding="utf-8")
    doc = {
        "matrix": matrix.to_dict(),
        "conflicts": [c.to_dict() for c in conflicts],
        "completeness": comp.to_dict(),
        "concentration": conc.to_dict() if conc else None,
    }
    lines = [matrix.to_csv().rstrip("\n"), "",
             f"grand total: {matrix.grand_total}", f"dual-channel conflicts: {len(conflicts)}"]
    for status, n in comp.counts.items():
        lines.append(f"{status.value}: {n} {comp.hospitals_with(status)}")
    if conc:
        lines.append(f"top hospital: {conc.top_hospital} {conc.total}/{conc.grand_total} "
                     f"({float(conc.share) * 100:.0f}%)")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_gen(args, cfg) -> int:
    if args.spec == "july2007":
        spec = july_2007_spec()
    else:
        try:
            spec = CorpusSpec.from_dict(_load_json(args.spec, "spec"))
        except (TypeError, KeyError, ValueError) as exc:
            if isinstance(exc, DataError):
                raise
            raise UsageError(f"spec: {exc}") from None
    if args.seed is not None or args.distractor_rate is not None:
        d = spec.to_dict()
        if args.seed is not None:
            d["seed"] = args.seed
        if args.distractor_rate is not None:
            d["distractor_rate"] = args.distractor_rate
        spec = CorpusSpec.from_dict(d)
    corpus = generate_corpus(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "lab.csv").write_text(corpus.lab_csv, encoding="utf-8")
    (out / "truth.json").write_text(corpus.truth_json(), encoding="utf-8")
    s = corpus.truth["summary"]
    print(f"wrote {out / 'lab.csv'} ({corpus.lab_csv.count(chr(10)) - 1} rows) and {out / 'truth.json'}: "
          f"{s['mrsa_isolates']} MRSA, {s['caz_isolates']} CAZ-R, {s['positive_patients']} patients")
    return EXIT_OK


def cmd_dict_check(args, cfg) -> int:
    d = load_dictionary(_read_text(args.file, "file"))
    doc = {"entries": len(d), "tokens": len(d.index), "codes": d.codes}
    _emit(args, doc, f"ok: {len(d)} antibiotics, {len(d.index)} tokens")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haisurv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file with RunConfig keys")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def out_flags(p):
        p.add_argument("-o", "--output", help="write the JSON document here")
        p.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = sub.add_parser("parse", help="normalize a lab export")
    p.add_argument("lab")
    p.add_argument("--dictionary")
    p.add_argument("--strict", action="store_true")
    out_flags(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("detect", help="find MRSA / CAZ-R marker isolates")
    p.add_argument("lab")
    p.add_argument("--dictionary")
    p.add_argument("--adjudication")
    p.add_argument("--legacy-scan", action="store_true")
    p.add_argument("--period", type=_period_arg)
    p.add_argument("--proportions", default="GEN,CIP", help="comma-separated codes (default GEN,CIP)")
    p.add_argument("--strict", action="store_true")
    out_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("stats", help="reported vs expected HAI")
    p.add_argument("summary", nargs="?", help="JSON output of `detect` (optional)")
    p.add_argument("--profile", help="hospital profiles CSV")
    p.add_argument("--hospital")
    p.add_argument("--reported", type=int, required=True)
    p.add_argument("--period", type=_period_arg)
    p.add_argument("--rates")
    p.add_argument("--primary", help="label of the reference rate used for the point estimate")
    out_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="aggregate monthly HAI reports")
    p.add_argument("reports")
    p.add_argument("--hospitals", help="file with one hospital id per line, or a comma-separated list")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--matrix-csv")
    out_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gen", help="generate a synthetic lab export with ground truth")
    p.add_argument("spec", help="CorpusSpec JSON file, or the preset name july2007")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--seed", type=int)
    p.add_argument("--distractor-rate", type=float)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dict", help="antibiotic dictionary tools")
    dsub = p.add_subparsers(dest="dict_command", required=True)
    c = dsub.add_parser("check", help="validate a dictionary file")
    c.add_argument("file")
    out_flags(c)
    c.set_defaults(func=cmd_dict_check)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"haisurv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"haisurv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
