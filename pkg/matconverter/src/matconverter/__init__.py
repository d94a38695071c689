"""One-shot DREAMER MATLAB-container converter for the emoscale-v1
interchange format. The licensed recordings themselves are never shipped;
tests run against a miniature structural fixture."""

from .converter import (
    ConversionReport,
    StructuralMismatch,
    VerifyReport,
    convert,
    verify,
)

__all__ = [
    "ConversionReport",
    "StructuralMismatch",
    "VerifyReport",
    "convert",
    "verify",
]
