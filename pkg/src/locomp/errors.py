"""Exception taxonomy, grouped by CLI exit class.

ValidationError subclasses mean a precondition on sizes, parameters, or
flags was violated (exit 1). MissingFileError covers absent payloads
(exit 2). FormatError subclasses cover on-disk format violations (exit 3).
"""


class LocompError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LocompError):
    """A precondition on sizes, parameters, or flags was violated."""


class NonDivisibleError(ValidationError):
    """Image dimensions are not an exact multiple of the block size."""


class InvalidBlockSizesError(ValidationError):
    """Compressed block side must satisfy 1 <= target < source block side."""


class DimensionMismatchError(ValidationError):
    """Operand shapes are inconsistent (matrix vs. block or vector dims)."""


class UpscaleNotSupportedError(ValidationError):
    """Area resampling only shrinks; the target exceeds the source."""


class CropTooLargeError(ValidationError):
    """Requested crop window does not fit inside the image."""


class MissingFileError(LocompError):
    """A manifest entry references a file that is absent on disk."""


class FormatError(LocompError):
    """An on-disk artifact violates its documented byte format."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionUnsupportedError(FormatError):
    """File declares a format version this build cannot read."""


class LengthMismatchError(FormatError):
    """File length disagrees with the size implied by its header."""


class DigestMismatchError(FormatError):
    """Stored content digest does not match the actual bytes."""


class SchemaViolationError(FormatError):
    """Manifest text is missing required fields or has malformed values."""
