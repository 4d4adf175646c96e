"""Compare the substring scan with token matching over seeded corpora.

For each distractor rate, generate N corpora, run both detectors and report
how many extra findings the substring scan produces and whether every one of
them is a planted distractor.

    python scripts/legacy_vs_token.py --seeds 50 --rates 0 0.05 0.1 0.25
"""

import argparse
import statistics

from haisurv.antibiotics import builtin_default
from haisurv.corpus import generate_corpus, july_2007_spec
from haisurv.labs import parse_lab_export, read_lab_rows
from haisurv.markers import detect, legacy_substring_scan


def keys(findings):
    return {(f.isolate_id, f.marker.value) for f in findings}


def run(rate, seeds, dictionary):
    excess, explained = [], 0
    for seed in range(seeds):
        corpus = generate_corpus(july_2007_spec(seed=seed, distractor_rate=rate))
        records, _ = parse_lab_export(corpus.lab_csv, dictionary)
        token = keys(detect(records))
        legacy = keys(legacy_substring_scan(read_lab_rows(corpus.lab_csv)[0]))
        extra = legacy - token
        excess.append(len(extra))
        explained += extra == corpus.legacy_excess_keys() and token == corpus.planted_keys()
    return excess, explained


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--rates", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.25])
    args = ap.parse_args()
    dictionary = builtin_default()
    print(f"{'rate':>6} {'mean excess':>12} {'min':>5} {'max':>5} {'explained':>10}")
    for rate in args.rates:
        excess, explained = run(rate, args.seeds, dictionary)
        print(f"{rate:6.2f} {statistics.mean(excess):12.1f} {min(excess):5d} {max(excess):5d} "
              f"{explained:>5d}/{args.seeds}")


if __name__ == "__main__":
    main()
