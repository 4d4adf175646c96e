"""Recompute the published county and hospital figures from the bundled fixtures.

    python scripts/reproduce_figures.py [--seed 42]
"""

import argparse
import time
from importlib import resources

from haisurv.antibiotics import builtin_default
from haisurv.corpus import generate_corpus, july_2007_spec
from haisurv.labs import parse_lab_export
from haisurv.markers import detect, resistance_proportion, summarize
from haisurv.periods import Period
from haisurv.registry import aggregate, completeness, concentration, ingest_reports
from haisurv.stats import build_estimate, default_reference_rates, derived_admissions


def data(name):
    return resources.files("haisurv").joinpath("data", name).read_text(encoding="utf-8")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=42, help="seed for the planted July 2007 corpus")
    args = ap.parse_args()

    # county registry
    t0 = time.perf_counter()
    registry = ingest_reports(data("county_reports_2007.csv"))
    matrix = aggregate(registry)
    conc = concentration(matrix)
    hospitals = [h.strip() for h in data("timis_hospitals.txt").splitlines() if h.strip() and not h.startswith("#")]
    comp = completeness(registry, hospitals)
    print("== 2007 county registry ==")
    print(matrix.to_csv(), end="")
    print(f"grand total {matrix.grand_total}; top hospital {conc.top_hospital} "
          f"{conc.total}/{conc.grand_total} = {float(conc.share):.1%}")
    for status, n in comp.counts.items():
        print(f"  {status.value:17s} {n:2d}  {' '.join(comp.hospitals_with(status))}")
    print(f"({(time.perf_counter() - t0) * 1000:.1f} ms)\n")

    refs = default_reference_rates()
    profiles = derived_admissions()
    county = build_estimate("county", Period.year(2007), matrix.grand_total, None, profiles["COUNTY"], refs)
    print("== county estimate ==")
    for r in refs:
        print(f"  {r.label:8s} {r.year}  {r.rate_per_100}/100 admissions")
    d = county.to_dict()
    print(f"reported {county.reported} / {county.admissions} admissions = {d['reported_rate_per_100']} per 100")
    print(f"expected {county.expected_point} ({county.primary_reference}), range "
          f"{county.expected_low}-{county.expected_high}; ratio {d['underreporting_ratio']}\n")

    # audited hospital, July 2007
    july = Period.month(2007, 7)
    corpus = generate_corpus(july_2007_spec(seed=args.seed))
    t0 = time.perf_counter()
    records, _ = parse_lab_export(corpus.lab_csv, builtin_default())
    findings = detect(records)
    s = summarize(records, findings, july)
    elapsed = time.perf_counter() - t0
    print(f"== hospital H01, July 2007 (planted corpus, seed {args.seed}) ==")
    print(f"{s.positive_isolates} positive isolates from {s.positive_patients} patients")
    print(f"MRSA {s.mrsa_isolates}, CAZ-R {s.caz_isolates}, marker total {s.total_marker_isolates} "
          f"({elapsed * 1000:.1f} ms)")
    for code in ("GEN", "CIP"):
        p = resistance_proportion(records, code, july)
        print(f"  {code}: {p.resistant}/{p.tested} = {float(p.fraction):.4f} ({p.percent}%)")
    reported = matrix.cell("H01", july)
    est = build_estimate("H01", july, reported, s, profiles["H01"], refs)
    print(f"reported {est.reported}, marker lower bound {est.marker_lower_bound}, "
          f"expected {est.expected_point}; ratio {est.to_dict()['underreporting_ratio']}")
    monthly = build_estimate("county", july, matrix.column_totals[july], None, profiles["COUNTY"], refs)
    print(f"county July: reported {monthly.reported}, expected {monthly.expected_point}")


if __name__ == "__main__":
    main()
