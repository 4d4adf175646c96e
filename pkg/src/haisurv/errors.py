"""Exception hierarchy.

Everything raised on bad *data* derives from :class:`DataError`; the CLI maps
those to exit code 1. Programming mistakes still surface as the usual
``TypeError``/``ValueError``.
"""


class DataError(Exception):
    """Base class for problems with input data."""


class RowError(DataError):
    """A data error tied to a 1-based row (or line) number of an input file."""

    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


# antibiotic dictionary

class DuplicateSynonym(DataError):
    def __init__(self, token, codes):
        self.token = token
        self.codes = tuple(sorted(codes))
        super().__init__(f"token {token!r} maps to more than one code: {', '.join(self.codes)}")


class MalformedLine(RowError):
    pass


class EmptyToken(DataError, ValueError):
    pass


# lab exports

class EmptyInput(DataError):
    pass


class MalformedCsv(RowError):
    pass


class InvalidEncoding(DataError):
    def __init__(self, offset, reason=""):
        self.offset = offset
        super().__init__(f"invalid UTF-8 at byte offset {offset}" + (f" ({reason})" if reason else ""))


class InvalidPeriod(DataError, ValueError):
    pass


# marker engine

class NotTested(DataError):
    def __init__(self, code):
        self.code = code
        super().__init__(f"no record in scope was tested for {code}")


class AdjudicationError(RowError):
    pass


# surveillance statistics

class ZeroDenominator(DataError, ZeroDivisionError):
    pass


class ZeroExpected(DataError, ZeroDivisionError):
    pass


class EmptyReferenceSet(DataError):
    pass


class MissingAdmissions(DataError):
    pass


# report registry

class MalformedRow(RowError):
    pass


class DuplicateReport(RowError):
    pass


class UnknownChannel(RowError):
    pass


class UnresolvedConflicts(DataError):
    def __init__(self, conflicts):
        self.conflicts = list(conflicts)
        super().__init__(f"{len(self.conflicts)} unresolved dual-channel conflict(s)")


class UnknownHospital(DataError):
    def __init__(self, hospital_ids):
        self.hospital_ids = sorted(hospital_ids)
        super().__init__(f"reports for unregistered hospital(s): {', '.join(self.hospital_ids)}")


class EmptyMatrix(DataError):
    pass


class OverlappingPeriods(DataError):
    pass


# corpus generator

class InfeasibleSpec(DataError, ValueError):
    pass
