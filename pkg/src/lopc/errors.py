"""Exception hierarchy shared by the codec, the lossless stages and the verifier."""

from __future__ import annotations


class LopcError(Exception):
    """Base class for every error raised by this package."""


class InvalidShape(LopcError):
    pass


class ShapeMismatch(LopcError):
    pass


class NonFinite(LopcError):
    pass


class ZeroRange(LopcError):
    pass


class BinOverflow(LopcError):
    """The error bound is too small for the magnitude of the data.

    Bins must fit the integer width that matches the data type; store the
    field losslessly or loosen the bound instead.
    """


class BoundViolation(LopcError):
    """A reconstructed value left the error bound. Always an implementation bug."""

    def __init__(self, index: int, original: float, decoded: float, eps: float):
        self.index = index
        super().__init__(
            f"vertex {index}: |{decoded!r} - {original!r}| exceeds {eps!r}"
        )


class CorruptStream(LopcError):
    pass


class LengthMismatch(CorruptStream):
    pass


class BadMagic(CorruptStream):
    pass


class VersionUnsupported(CorruptStream):
    pass


class SpecMismatch(LopcError):
    """A raw volume's size does not match its declared type and dimensions."""
