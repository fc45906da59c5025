"""Exception hierarchy shared across the package.

Every error raised by quiltstream derives from :class:`QuiltStreamError` so
callers can catch one base type at process boundaries (CLI, service).
"""


class QuiltStreamError(Exception):
    """Base class for all quiltstream errors."""


class MalformedDocument(QuiltStreamError):
    """Input text could not be parsed at all (bad JSON, bad INI)."""


class MissingField(QuiltStreamError):
    """A required field is absent from a parsed document."""

    def __init__(self, field: str):
        self.field = field
        super().__init__(f"missing required field: {field}")


class OutOfRange(QuiltStreamError):
    """A parsed value violates its documented range constraint."""

    def __init__(self, field: str, value, constraint: str):
        self.field = field
        self.value = value
        self.constraint = constraint
        super().__init__(f"{field}={value!r} out of range: {constraint}")


class BadMagic(QuiltStreamError):
    """Binary file does not start with the expected magic bytes."""


class VersionMismatch(QuiltStreamError):
    """Binary file declares an unsupported format version."""


class Truncated(QuiltStreamError):
    """Binary payload ended before the declared amount of data."""


class GeometryMismatch(QuiltStreamError):
    """Stored geometry is inconsistent with the data or the caller's."""


class SizeOverflow(QuiltStreamError):
    """Requested geometry cannot be addressed with 32-bit offsets."""


class DimensionMismatch(QuiltStreamError):
    """Two arrays that must share dimensions do not."""


class ModelLoadFailure(QuiltStreamError):
    """A neural depth model could not be loaded."""


class InferenceFailure(QuiltStreamError):
    """A neural depth model failed while producing output."""


class CountMismatch(QuiltStreamError):
    """Number of views does not match the quilt geometry."""


class TileDimMismatch(QuiltStreamError):
    """View dimensions do not match the quilt tile dimensions."""


class InvalidValue(QuiltStreamError):
    """A configuration value fails validation."""

    def __init__(self, key: str, value, reason: str = ""):
        self.key = key
        self.value = value
        self.reason = reason
        msg = f"invalid value for {key}: {value!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class MissingRequired(QuiltStreamError):
    """A required configuration key is absent."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"missing required key: {key}")


class NotFound(QuiltStreamError):
    """A requested device, file, or index does not exist."""


class Unsupported(QuiltStreamError):
    """The requested capability is unavailable on this host."""


class DimsMismatch(QuiltStreamError):
    """Frame dimensions changed mid-stream or disagree with the sink."""


class SourceOpenFailure(QuiltStreamError):
    """The pipeline source could not be opened."""


class SinkOpenFailure(QuiltStreamError):
    """The pipeline sink could not be opened."""


class MapLoadFailure(QuiltStreamError):
    """The pipeline's mapping table could not be loaded or built."""


class AlreadyRunning(QuiltStreamError):
    """An engine start was attempted while a run is active."""
