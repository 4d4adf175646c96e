"""Lab-based detection of probable healthcare-associated infections and
estimation of HAI under-reporting."""

__version__ = "0.1.0"

from .antibiotics import Dictionary, builtin_default, load_dictionary, lookup_token
from .labs import IsolateRecord, filter_period, parse_lab_export, tokenize_resistance_string
from .markers import apply_adjudication, detect, detect_caz, detect_mrsa, legacy_substring_scan, summarize
from .periods import Period
from .registry import aggregate, completeness, concentration, cross_validate, ingest_reports
from .stats import build_estimate, expected_hai, expected_range, rate_per_100, underreporting_ratio

__all__ = [
    "Dictionary", "builtin_default", "load_dictionary", "lookup_token",
    "IsolateRecord", "filter_period", "parse_lab_export", "tokenize_resistance_string",
    "apply_adjudication", "detect", "detect_caz", "detect_mrsa", "legacy_substring_scan", "summarize",
    "Period",
    "aggregate", "completeness", "concentration", "cross_validate", "ingest_reports",
    "build_estimate", "expected_hai", "expected_range", "rate_per_100", "underreporting_ratio",
]
