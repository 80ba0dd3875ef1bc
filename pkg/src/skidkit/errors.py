"""Exception hierarchy.

Every data or usage problem raised by the toolkit derives from
:class:`SkidkitError`, which the CLI maps to exit code 2.
"""

from __future__ import annotations


class SkidkitError(Exception):
    """Base class for all toolkit errors."""


class IngestError(SkidkitError, ValueError):
    """A device log could not be parsed.

    ``line`` is the 1-based line number in the source text (comments and
    header included) when the problem can be pinned to one line.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedHeader(IngestError):
    pass


class MalformedRow(IngestError):
    pass


class NonMonotonicTime(IngestError):
    pass


class NonFiniteValue(IngestError):
    pass


class BiasWindowTooLong(IngestError):
    pass


class MissingScale(IngestError):
    pass


class FrameGap(IngestError):
    pass


class NonMonotonicPosition(IngestError):
    pass


class WindowTooLarge(SkidkitError, ValueError):
    """A smoothing or fitting window is longer than the data it runs over."""


class KinematicsError(SkidkitError, ValueError):
    pass


class DegenerateFit(KinematicsError):
    pass


class SegmentationError(SkidkitError, ValueError):
    pass


class EmptyInput(SegmentationError):
    pass


class NoBrakingEvent(SegmentationError):
    pass


class PlateauNotReached(SegmentationError):
    pass


class DomainError(SkidkitError, ValueError):
    """Argument outside the mathematical domain of a function."""


class InferenceError(SkidkitError, ValueError):
    pass


class TooFewSamples(InferenceError):
    pass


class TooFewGroups(InferenceError):
    pass


class ZeroVariance(InferenceError):
    pass


class DegenerateX(InferenceError):
    pass


class InvalidSpec(SkidkitError, ValueError):
    pass


class ReportIOError(SkidkitError, OSError):
    pass
