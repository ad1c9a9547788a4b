"""ttpkit: extract, score and serve TTPs of malicious interpreted packages."""

from .vectors import (
    AttackVector,
    Category,
    TtpSequence,
    VectorKind,
    normalize_vector_name,
    parse_ttp_string,
    render_abstract,
    render_detailed,
)

__all__ = [
    "AttackVector",
    "Category",
    "TtpSequence",
    "VectorKind",
    "normalize_vector_name",
    "parse_ttp_string",
    "render_abstract",
    "render_detailed",
]

__version__ = "0.1.0"
