"""Exception hierarchy. Each class maps to one CLI exit code."""


class StreamClipError(Exception):
    exit_code = 1


class ConfigError(StreamClipError, ValueError):
    """Invalid algorithm parameters or inconsistent flags."""

    exit_code = 1


class DuplicateElementError(StreamClipError, ValueError):
    """An element id was seen twice, or is already a member of the solution."""

    exit_code = 2


class IngestError(StreamClipError, ValueError):
    exit_code = 2


class CertificationFailure(StreamClipError):
    exit_code = 3


class OracleRefusal(StreamClipError):
    """Instance too large for brute-force enumeration."""

    exit_code = 4


class BoundDomainError(StreamClipError, ValueError):
    """Bound formula evaluated outside its domain (e.g. a singular exponent)."""

    exit_code = 1
