from datetime import date

import pytest

from conftest import lab_csv
from haisurv.errors import EmptyInput, InvalidEncoding, InvalidPeriod, MalformedCsv
from haisurv.labs import (
    Category,
    LineKind,
    OrganismKind,
    WarningKind,
    filter_period,
    normalize_organism,
    parse_date,
    parse_lab_export,
    read_lab_rows,
    tokenize_resistance_string,
)
from haisurv.periods import Period


@pytest.mark.parametrize("text, tokens", [
    ("FOX, oxa; GEN", ["FOX", "oxa", "GEN"]),
    ("", []),
    ("ceftazidime  CIP,,GEN", ["ceftazidime", "CIP", "GEN"]),
    ("AMP/SXT\tVAN\n;", ["AMP", "SXT", "VAN"]),
    ("amoxicillin-clavulanate", ["amoxicillin-clavulanate"]),
])
def test_tokenize(text, tokens):
    assert tokenize_resistance_string(text) == tokens


@pytest.mark.parametrize("text, kind", [
    ("Staphylococcus aureus", OrganismKind.STAPH_AUREUS),
    ("S. AUREUS", OrganismKind.STAPH_AUREUS),
    ("  staph.   aureus ", OrganismKind.STAPH_AUREUS),
    ("s aureus (MRSA)", OrganismKind.STAPH_AUREUS),
    ("Staphylococcus epidermidis", OrganismKind.OTHER),
    ("S. aureusx", OrganismKind.OTHER),
    ("Escherichia coli", OrganismKind.OTHER),
    ("", OrganismKind.UNKNOWN),
])
def test_normalize_organism(text, kind):
    assert normalize_organism(text).kind is kind


def test_other_organism_keeps_its_name():
    org = normalize_organism("Escherichia coli")
    assert org.name == "Escherichia coli"


@pytest.mark.parametrize("text, expected", [
    ("2007-07-14", date(2007, 7, 14)),
    ("14.07.2007", date(2007, 7, 14)),
    ("07/14/2007", None),
    ("2007-02-30", None),
    ("", None),
])
def test_parse_date(text, expected):
    assert parse_date(text) == expected


def test_three_line_layout(dictionary):
    text = lab_csv(
        ("X", "P1", "2007-07-01", "Escherichia coli", "R", "FOX,GEN"),
        ("X", "P1", "2007-07-01", "Escherichia coli", "S", "CIP"),
        ("X", "P1", "2007-07-01", "Escherichia coli", "I", ""),
    )
    (rec,), diag = parse_lab_export(text, dictionary)
    assert rec.profile == {"FOX": Category.R, "GEN": Category.R, "CIP": Category.S}
    assert len(diag) == 0


def test_conflicting_line_kinds(dictionary):
    text = lab_csv(
        ("X", "P1", "2007-07-01", "E. coli", "R", "GEN"),
        ("X", "P1", "2007-07-01", "E. coli", "S", "gentamicina"),
    )
    (rec,), diag = parse_lab_export(text, dictionary)
    assert rec.profile == {"GEN": Category.CONFLICT}
    (w,) = diag.of_kind(WarningKind.CONFLICT)
    assert w.row_number == 3


def test_flags_and_unknown_tokens(dictionary):
    text = lab_csv(
        ("X", "P1", "2007-07-01", "S. aureus", "R", "MRSA, oxa, moxifloxacin"),
        ("X", "P1", "2007-07-01", "S. aureus", "S", "vancomicina frobnicin"),
    )
    (rec,), diag = parse_lab_export(text, dictionary)
    assert rec.explicit_flags == {"MRSA"}
    assert rec.profile == {"OXA": Category.R, "VAN": Category.S}
    assert rec.unknown_tokens == [("moxifloxacin", LineKind.R), ("frobnicin", LineKind.S)]
    assert [w.row_number for w in diag.of_kind(WarningKind.UNKNOWN_TOKEN)] == [2, 3]


def test_only_r_line_is_fine(dictionary):
    (rec,), diag = parse_lab_export(lab_csv(("X", "P1", "2007-07-01", "E. coli", "r", "CAZ")), dictionary)
    assert rec.profile == {"CAZ": Category.R}
    assert len(diag) == 0


def test_records_sorted_by_date_then_id(dictionary):
    text = lab_csv(
        ("B", "P1", "2007-07-03", "", "R", ""),
        ("A", "P2", "2007-07-03", "", "R", ""),
        ("C", "P3", "01.07.2007", "", "R", ""),
        ("D", "P4", "junk", "", "R", ""),
    )
    records, diag = parse_lab_export(text, dictionary)
    assert [r.isolate_id for r in records] == ["C", "A", "B", "D"]
    assert records[-1].collection_date is None
    assert [w.kind for w in diag.warnings] == [WarningKind.MALFORMED_DATE]


def test_duplicate_rows_collapse(dictionary):
    row = ("X", "P1", "2007-07-01", "E. coli", "R", "CAZ")
    records, diag = parse_lab_export(lab_csv(row, row), dictionary)
    assert len(records) == 1
    (w,) = diag.warnings
    assert (w.kind, w.row_number) == (WarningKind.DUPLICATE_ROW, 3)


def test_lenient_skips_bad_rows(dictionary):
    text = lab_csv(("X", "P1", "2007-07-01", "E. coli", "R", "CAZ")) + "Y,P2,2007-07-01\n" + \
        "Z,P3,2007-07-01,urine,E. coli,Q,CAZ\n" + ",P4,2007-07-01,urine,E. coli,R,CAZ\n"
    records, diag = parse_lab_export(text, dictionary)
    assert [r.isolate_id for r in records] == ["X"]
    assert [(w.row_number, w.kind) for w in diag.warnings] == [
        (3, WarningKind.MALFORMED_ROW), (4, WarningKind.MISSING_LINE_KIND), (5, WarningKind.MALFORMED_ROW)]


def test_strict_raises_on_first_bad_row(dictionary):
    text = lab_csv(("X", "P1", "2007-07-01", "E. coli", "R", "CAZ")) + "Y,P2\n"
    with pytest.raises(MalformedCsv) as exc:
        parse_lab_export(text, dictionary, strict=True)
    assert exc.value.row == 3


@pytest.mark.parametrize("text", ["", "   \n\n", b""])
def test_empty_input(dictionary, text):
    with pytest.raises(EmptyInput):
        parse_lab_export(text, dictionary)


def test_header_only_is_no_records(dictionary):
    assert parse_lab_export(lab_csv(), dictionary)[0] == []


def test_wrong_header(dictionary):
    with pytest.raises(MalformedCsv):
        parse_lab_export("a,b,c\n1,2,3\n", dictionary)


def test_invalid_utf8_reports_offset(dictionary):
    data = lab_csv(("X", "P1", "2007-07-01", "E. coli", "R", "CAZ")).encode()
    bad = data[:70] + b"\xff" + data[70:]
    with pytest.raises(InvalidEncoding) as exc:
        parse_lab_export(bad, dictionary)
    assert exc.value.offset == 70


def test_bytes_and_bom_accepted(dictionary):
    data = "\ufeff".encode() + lab_csv(("X", "P1", "2007-07-01", "Staphylococcus aureus", "R", "oxacilină")).encode()
    (rec,), _ = parse_lab_export(data, dictionary)
    assert rec.profile == {"OXA": Category.R}


def test_paper_shaped_corpus_patient_count(july_corpus, dictionary):
    records, _ = parse_lab_export(july_corpus.lab_csv, dictionary)
    assert len({r.patient_id for r in records}) == 431


def _mixed_fixture():
    rows = []
    dates = ["2007-06-30", "2007-07-01", "15.07.2007", "2007-06-01", "31.07.2007", "2007-08-01", "2007-07-20"]
    for i, d in enumerate(dates):
        rows.append((f"I{i}", f"P{i}", d, "E. coli", "R", "CAZ"))
    return lab_csv(*rows), dates


def test_filter_period_matches_hand_count(dictionary):
    text, dates = _mixed_fixture()
    records, _ = parse_lab_export(text, dictionary)
    july = filter_period(records, Period.month(2007, 7))
    # oracle: linear scan of the raw date strings
    hand = sum(1 for d in dates if d.startswith("2007-07") or d.endswith(".07.2007"))
    assert hand == 4
    assert len(july) == hand
    assert all(r.collection_date.month == 7 for r in july)


def test_filter_period_identity_and_empty(dictionary):
    text = lab_csv(*[(f"I{i}", "P", f"2007-07-{i + 1:02d}", "", "R", "") for i in range(5)])
    records, _ = parse_lab_export(text, dictionary)
    assert filter_period(records, Period.month(2007, 7)) == records
    assert filter_period(records, Period.month(2008, 7)) == []


def test_filter_period_rejects_backwards_range():
    with pytest.raises(InvalidPeriod):
        Period.parse("2007-08:2007-07")


def test_read_rows_keeps_row_numbers():
    rows, _ = read_lab_rows(lab_csv(("X", "P1", "2007-07-01", "E. coli", "R", "CAZ"),
                                    ("X", "P1", "2007-07-01", "E. coli", "S", "GEN")))
    assert [r.row_number for r in rows] == [2, 3]
    assert [r.line_kind for r in rows] == [LineKind.R, LineKind.S]


def test_corpus_round_trip(july_corpus, dictionary):
    records, diag = parse_lab_export(july_corpus.lab_csv, dictionary)
    truth = july_corpus.truth["profiles"]
    assert len(records) == len(truth)
    for r in records:
        assert {c: cat.value for c, cat in r.profile.items()} == truth[r.isolate_id]
    assert not diag.of_kind(WarningKind.CONFLICT)
