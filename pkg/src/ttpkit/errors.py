"""Exception taxonomy shared by every ttpkit module.

Each class name doubles as the machine-readable error kind emitted on
stderr by the CLI and in HTTP error bodies by the service.
"""


class TtpkitError(Exception):
    """Base class; ``kind`` is the stable name used in JSON diagnostics."""

    @property
    def kind(self) -> str:
        return type(self).__name__


# -- archive / filesystem ------------------------------------------------

class CorruptArchive(TtpkitError):
    pass


class UnsafePath(TtpkitError):
    pass


class IoFailure(TtpkitError):
    pass


class MalformedMetadata(TtpkitError):
    pass


# -- TTP model -----------------------------------------------------------

class UnknownVector(TtpkitError):
    def __init__(self, raw: str):
        super().__init__(f"unknown attack vector name: {raw!r}")
        self.raw = raw


class EmptyChain(TtpkitError):
    pass


class OrderViolation(TtpkitError):
    pass


# -- prompt assembly -----------------------------------------------------

class BudgetTooSmall(TtpkitError):
    pass


# -- LLM transport -------------------------------------------------------

class AuthFailure(TtpkitError):
    pass


class RateLimited(TtpkitError):
    pass


class TransportFailure(TtpkitError):
    pass


class ProviderError(TtpkitError):
    def __init__(self, message: str, status: int | None = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body


# -- extraction pipeline -------------------------------------------------

class MissingMetadata(TtpkitError):
    pass


class EmptyCode(TtpkitError):
    pass


class CodeTooLarge(TtpkitError):
    pass


# -- metrics / graph -----------------------------------------------------

class EmptyReference(TtpkitError):
    pass


class EmptyCorpus(TtpkitError):
    pass


class NoOverlap(TtpkitError):
    pass


# -- vector index --------------------------------------------------------

class DimensionMismatch(TtpkitError):
    pass


class EmptyIndex(TtpkitError):
    pass


class SchemaVersionMismatch(TtpkitError):
    pass


# -- report mining -------------------------------------------------------

class NotHtml(TtpkitError):
    pass


class EmptyContent(TtpkitError):
    pass


class MalformedExtraction(TtpkitError):
    def __init__(self, message: str, raw_output: str = ""):
        super().__init__(message)
        self.raw_output = raw_output
