from importlib import resources

import pytest

from haisurv.antibiotics import builtin_default
from haisurv.corpus import generate_corpus, july_2007_spec


def data_text(name):
    return resources.files("haisurv").joinpath("data", name).read_text(encoding="utf-8")


LAB_HEADER_LINE = "isolate_id,patient_id,date,specimen,organism,line_kind,antibiotics\n"


def lab_csv(*rows):
    """Build a lab export from ``(iso, patient, date, organism, kind, antibiotics)`` tuples."""
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LAB_HEADER_LINE.strip().split(","))
    for iso, pat, when, org, kind, abx in rows:
        w.writerow([iso, pat, when, "urine", org, kind, abx])
    return buf.getvalue()


@pytest.fixture(scope="session")
def dictionary():
    return builtin_default()


@pytest.fixture(scope="session")
def county_reports_text():
    return data_text("county_reports_2007.csv")


@pytest.fixture(scope="session")
def timis_hospitals():
    return [ln.strip() for ln in data_text("timis_hospitals.txt").splitlines()
            if ln.strip() and not ln.startswith("#")]


@pytest.fixture(scope="session")
def july_corpus():
    return generate_corpus(july_2007_spec(seed=42))
