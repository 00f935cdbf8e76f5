"""Exception hierarchy shared across the toolkit."""


class QualgraphError(Exception):
    """Base class for all toolkit errors."""


class ParseError(QualgraphError):
    """Input bytes/text do not conform to the expected format.

    Carries enough location information (line number or field path) to
    point at the offending record.
    """

    def __init__(self, message, *, line=None, path=None):
        super().__init__(message)
        self.line = line
        self.path = path


class IntegrityError(QualgraphError):
    """Structurally valid input violates a data invariant."""


class DomainError(QualgraphError):
    """Arguments are outside an operation's domain."""


class PreconditionError(QualgraphError):
    """A stated operation precondition does not hold."""


class TransportError(QualgraphError):
    """A remote call failed at the transport level; retriable."""


class ProtocolError(QualgraphError):
    """A remote reply violated the wire contract.

    The raw reply is attached so failures can be audited.
    """

    def __init__(self, message, raw_reply=None):
        super().__init__(message)
        self.raw_reply = raw_reply


class EmptyCorpusError(QualgraphError):
    """An operation that requires excerpts was given none."""
