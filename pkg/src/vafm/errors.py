"""Exception types shared across the pipeline."""


class VafmError(Exception):
    """Base class for every error raised by this package."""


class EmptyStructure(VafmError):
    """The input contained no usable geometry (no atoms, no faces)."""


class MalformedRecord(VafmError):
    """A structure file record could not be parsed.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateGeometry(VafmError):
    """Geometry with zero extent along an axis cannot be gridded."""


class ShapeMismatch(VafmError):
    """Array dimensions do not satisfy the operation's contract."""


class InsufficientData(VafmError):
    """Not enough items to perform the operation (e.g. a 1-protein split)."""


class InvalidConfig(VafmError):
    """A parameter is outside its documented range."""


class ManifestError(VafmError):
    """A manifest line is missing required keys or is not valid JSON.

    Carries the 1-based line number of the offending entry when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class VoxFileError(VafmError):
    """A voxel file violates the binary format.

    Carries the byte offset where the violation was detected.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"byte {offset}: {message}"
        super().__init__(message)
        self.offset = offset
