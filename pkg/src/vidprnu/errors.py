"""Exception hierarchy.

Every error raised on bad input derives from :class:`DataError`; the CLI maps
those to exit code 2.
"""


class VidPrnuError(Exception):
    """Base class for all package errors."""


class DataError(VidPrnuError):
    """Input data is malformed or inconsistent."""


class ParseError(DataError):
    """Malformed XML. ``offset`` is the byte offset into the source, if known."""

    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class FormatError(DataError):
    pass


class BoundsError(DataError):
    pass


class GapError(DataError):
    def __init__(self, missing_index):
        super().__init__(f"frame sequence has a gap: index {missing_index} is missing")
        self.missing_index = missing_index


class ResolutionError(DataError):
    pass


class AlignmentError(DataError):
    pass


class SizeError(DataError):
    pass


class ShapeError(DataError):
    pass


class EmptyVideoError(DataError):
    pass


class StateError(DataError):
    pass


class DegenerateInputError(DataError):
    pass


class MatrixError(DataError):
    pass


class RangeError(DataError):
    pass


class TooFewItemsError(DataError):
    pass


class LabelError(DataError):
    pass


class DegenerateLabelsError(DataError):
    pass


class IdError(DataError):
    pass
