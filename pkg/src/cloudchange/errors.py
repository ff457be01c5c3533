"""Exception types shared across the library."""


class CloudChangeError(Exception):
    """Base class for all library-specific errors."""


class DegenerateInput(CloudChangeError):
    """Correspondence set is too small or too flat to determine a transform."""


class EmptyCloud(CloudChangeError):
    """An operation that requires points received an empty cloud."""


class EmptyFrame(CloudChangeError):
    """A camera frame has no pixel with valid (positive) depth."""


class MisalignedInputs(CloudChangeError):
    """Paired inputs that must be index-aligned have different lengths."""


class TooFewCorrespondences(CloudChangeError):
    """Fewer than three correspondence pairs survived filtering."""


class EmptyStaticSet(CloudChangeError):
    """Translation refinement was asked to run with no static correspondences."""


class LabelMismatch(CloudChangeError):
    """Two trajectories do not carry the same (epoch, frame) labels."""


class TooFewPoses(CloudChangeError):
    """A trajectory metric needs at least two poses per epoch."""


class InvalidSpec(CloudChangeError):
    """A synthetic scene specification violates its own constraints."""


class ParseError(CloudChangeError):
    """A file could not be parsed.

    Carries the 1-based line number (ASCII sections) or byte offset
    (binary sections) where parsing failed, when known.
    """

    def __init__(self, message, line=None, offset=None):
        detail = message
        if line is not None:
            detail += f" (line {line})"
        if offset is not None:
            detail += f" (byte offset {offset})"
        super().__init__(detail)
        self.line = line
        self.offset = offset


class SchemaError(CloudChangeError):
    """A structured input file is missing fields or is internally inconsistent."""


class UnsupportedPropertyWarning(UserWarning):
    """A file carried extra per-vertex properties that were skipped."""
