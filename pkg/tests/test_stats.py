from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haisurv.errors import EmptyReferenceSet, MalformedRow, MissingAdmissions, ZeroDenominator, ZeroExpected
from haisurv.markers import MarkerSummary
from haisurv.periods import Period
from haisurv.stats import (
    HospitalProfile,
    ReferenceRate,
    build_estimate,
    default_reference_rates,
    derived_admissions,
    expected_hai,
    expected_range,
    load_hospital_profiles,
    load_reference_rates,
    primary_reference,
    rate_per_100,
    underreporting_ratio,
)

USA = ReferenceRate("USA", Decimal("4.5"), 2002)
JULY = Period.month(2007, 7)
YEAR = Period.year(2007)


def half_up(fr: Fraction) -> int:
    """Independent rounding oracle over exact rationals."""
    return (fr + Fraction(1, 2)).__floor__()


def oracle_expected(admissions: int, rate: str) -> int:
    return half_up(Fraction(admissions) * Fraction(rate) / 100)


def test_oracle_values_are_the_published_ones():
    # 133333 x 4.5% = 5999.985, 3333 x 4.5% = 149.985, 11111 x 4.5% = 499.995
    assert oracle_expected(133333, "4.5") == 6000
    assert oracle_expected(3333, "4.5") == 150
    assert oracle_expected(11111, "4.5") == 500
    assert oracle_expected(133333, "9.1") == 12133


def test_default_rates():
    refs = default_reference_rates()
    assert [(r.label, r.rate_per_100, r.year) for r in refs] == [
        ("USA", Decimal("4.5"), 2002), ("Greece", Decimal("9.1"), 1999), ("Denmark", Decimal("8.0"), 1999),
        ("Spain", Decimal("7.0"), 1997), ("Norway", Decimal("5.1"), 2002)]


@pytest.mark.parametrize("count, admissions, expected", [
    (529, 133333, Fraction(52900, 133333)),
    (0, 1000, Fraction(0)),
    (450, 10000, Fraction(9, 2)),
])
def test_rate_per_100(count, admissions, expected):
    got = rate_per_100(count, admissions)
    assert abs(Fraction(got) - expected) < Fraction(1, 10**30)


def test_county_rate_under_0_4():
    r = rate_per_100(529, 133333)
    assert r < Decimal("0.4")
    assert round(r, 4) == Decimal("0.3968")


def test_rate_zero_denominator():
    with pytest.raises(ZeroDenominator):
        rate_per_100(5, 0)


@pytest.mark.parametrize("admissions, expected", [(133333, 6000), (3333, 150), (11111, 500), (0, 0)])
def test_expected_hai(admissions, expected):
    assert expected_hai(admissions, USA) == expected == oracle_expected(admissions, "4.5")


def test_expected_hai_rounds_half_up():
    assert expected_hai(10, Decimal("5")) == 1  # 0.5 -> 1
    assert expected_hai(30, Decimal("5")) == 2  # 1.5 -> 2
    assert expected_hai(50, Decimal("5")) == 3  # 2.5 -> 3, not banker's 2


def test_expected_range_default_rates():
    refs = default_reference_rates()
    oracle = sorted(oracle_expected(133333, str(r.rate_per_100)) for r in refs)
    assert expected_range(133333, refs) == (oracle[0], oracle[-1]) == (6000, 12133)
    assert expected_range(0, refs) == (0, 0)
    assert expected_range(5000, [USA]) == (225, 225)


def test_expected_range_empty():
    with pytest.raises(EmptyReferenceSet):
        expected_range(100, [])


def test_underreporting_ratio():
    r = underreporting_ratio(529, 6000)
    assert abs(r - Decimal("0.0882")) <= Decimal("0.0001")
    assert r < Decimal("0.10")
    assert underreporting_ratio(77, 77) == 1
    assert underreporting_ratio(0, 6000) == 0
    assert underreporting_ratio(12, 6) == 2  # no clamping


def test_underreporting_zero_expected():
    with pytest.raises(ZeroExpected):
        underreporting_ratio(3, 0)


def test_primary_reference_defaults_to_latest_first_listed():
    assert primary_reference(default_reference_rates()).label == "USA"
    assert primary_reference(default_reference_rates(), "norway").label == "Norway"
    with pytest.raises(KeyError):
        primary_reference(default_reference_rates(), "Atlantis")


def _summary(total_mrsa=29, caz=88):
    return MarkerSummary(JULY, total_mrsa, caz, total_mrsa + caz, total_mrsa, caz, 431, 560)


def test_hospital_july_estimate():
    profiles = derived_admissions()
    est = build_estimate("H01", JULY, 33, _summary(), profiles["H01"], default_reference_rates())
    assert (est.reported, est.marker_lower_bound, est.expected_point) == (33, 117, 150)
    assert est.expected_low <= est.expected_point <= est.expected_high


def test_county_year_estimate():
    est = build_estimate("county", YEAR, 529, None, derived_admissions()["COUNTY"], default_reference_rates())
    assert est.marker_lower_bound is None
    assert est.expected_point == 6000
    assert est.to_dict()["underreporting_ratio"] == "0.0882"
    assert est.reported_rate_per_100 < Decimal("0.4")


def test_county_monthly_cross_check():
    est = build_estimate("county", JULY, 40, None, derived_admissions()["COUNTY"], default_reference_rates())
    assert est.expected_point == 500


def test_estimate_ratio_identity():
    prof = HospitalProfile("H", True, {JULY: 3333})
    est = build_estimate("H", JULY, 150, None, prof, [USA])
    assert est.underreporting_ratio == 1


def test_missing_admissions():
    with pytest.raises(MissingAdmissions):
        build_estimate("H", JULY, 1, None, HospitalProfile("H", False, {}), [USA])


def test_admissions_sum_over_monthly_entries():
    prof = HospitalProfile("H", False, {Period.month(2007, m): 100 * m for m in (1, 2, 3)})
    assert prof.admissions_for(Period.parse("2007-01:2007-03")) == 600
    with pytest.raises(MissingAdmissions):
        prof.admissions_for(Period.parse("2007-01:2007-04"))


def test_load_profiles():
    profiles = load_hospital_profiles("hospital_id,has_icu,period,admissions\nH1,Y,2007-07,300\nH1,y,2007-08,310\n"
                                      "H2,N,2007-01:2007-12,4000\n")
    assert profiles["H1"].has_icu and not profiles["H2"].has_icu
    assert profiles["H1"].admissions_for(Period.parse("2007-07:2007-08")) == 610


@pytest.mark.parametrize("body", ["H1,Y,2007-07,-3\n", "H1,maybe,2007-07,3\n", "H1,Y,2007-13,3\n",
                                  "H1,Y,2007-07,3\nH1,N,2007-08,3\n", "H1,Y,2007-07,3\nH1,Y,2007-07,4\n"])
def test_load_profiles_rejects(body):
    with pytest.raises(MalformedRow):
        load_hospital_profiles("hospital_id,has_icu,period,admissions\n" + body)


def test_load_rates_accepts_decimal_comma():
    (r,) = load_reference_rates('label,rate_per_100,year,source\nTimis,"0,4",2007,local\n')
    assert r.rate_per_100 == Decimal("0.4")


def test_load_rates_rejects_negative():
    with pytest.raises(MalformedRow):
        load_reference_rates("label,rate_per_100,year,source\nX,-1,2007,\n")


@settings(max_examples=300)
@given(st.integers(0, 10**6), st.integers(1, 10**6), st.integers(1, 1000))
def test_rate_is_scale_free(c, a, k):
    assert rate_per_100(k * c, k * a) == rate_per_100(c, a)


rates = st.decimals(min_value=0, max_value=100, places=2)


@settings(max_examples=300)
@given(st.integers(0, 10**6), st.integers(0, 10**6), rates, rates)
def test_expected_monotone(a1, a2, r1, r2):
    lo_a, hi_a = sorted((a1, a2))
    lo_r, hi_r = sorted((r1, r2))
    assert expected_hai(lo_a, lo_r) <= expected_hai(hi_a, lo_r) <= expected_hai(hi_a, hi_r)


@settings(max_examples=300)
@given(st.integers(1, 10**6), rates.filter(lambda r: r > 0), st.integers(0, 10**5))
def test_ratio_consistency(a, r, reported):
    point = expected_hai(a, r)
    if point > 0:
        assert abs(underreporting_ratio(reported, point) * point - reported) < Decimal("1e-20")
