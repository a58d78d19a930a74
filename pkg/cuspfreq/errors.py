# cuspfreq/errors.py
"""
Exceptions raised by the library.

Every error carries a `detail` message and the process `exit_code` the CLI
maps it to: 1 for bad input, 2 for domain failures.
"""


class CuspfreqError(Exception):
    exit_code = 2
    # whatever was computed before the failure, for the caller to flush
    partial = None

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# ==================== USAGE ERRORS ====================

class MalformedNumberError(CuspfreqError):
    """Unparseable number or zero denominator."""
    exit_code = 1


class InvalidParameterError(CuspfreqError):
    """Parameters outside their admissible range."""
    exit_code = 1


# ==================== DOMAIN ERRORS ====================

class PrecisionExhaustedError(CuspfreqError):
    """A tracked real no longer determines the requested quantity."""


class UndecidableComparisonError(PrecisionExhaustedError):
    """Two tracked error intervals overlap."""


class DiagonalInputError(CuspfreqError):
    pass


class ReductionFailedError(CuspfreqError):
    pass


class ExtractionFailedError(CuspfreqError):
    pass


class InconsistentCycleError(CuspfreqError):
    """The Moebius words along a cycle do not carry the endpoint to the cycle end."""


class InsufficientQuotientsError(CuspfreqError):
    pass


class UnavailableError(CuspfreqError):
    pass


class NoIntersectionError(CuspfreqError):
    pass


class IndeterminateError(CuspfreqError):
    """A membership test fell within resolution of a boundary."""
