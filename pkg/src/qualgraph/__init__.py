"""Evidence-anchored qualitative model graphs and their corpus-fit toolkit."""

__version__ = "0.1.0"

from qualgraph.errors import (
    DomainError,
    EmptyCorpusError,
    IntegrityError,
    ParseError,
    PreconditionError,
    ProtocolError,
    QualgraphError,
    TransportError,
)

__all__ = [
    "QualgraphError",
    "ParseError",
    "IntegrityError",
    "DomainError",
    "PreconditionError",
    "ProtocolError",
    "TransportError",
    "EmptyCorpusError",
    "__version__",
]
