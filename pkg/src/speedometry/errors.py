"""Exception types shared across the toolkit."""

from __future__ import annotations


class SpeedometryError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SpeedometryError):
    """Input document is not syntactically valid."""


class SchemaVersionError(SpeedometryError):
    """Project document declares an unsupported schema version."""


class InvariantViolation(SpeedometryError):
    """A domain invariant failed validation.

    ``field`` names the offending field (dotted path into the project
    document), ``detail`` says what went wrong.
    """

    def __init__(self, field: str, detail: str = ""):
        self.field = field
        self.detail = detail
        super().__init__(f"{field}: {detail}" if detail else field)


class FoldOverError(SpeedometryError):
    """Division-model denominator is non-positive: the radial map folds over."""


class DegenerateLine(SpeedometryError):
    """Line annotation points collapse to (nearly) a single point."""


class NoCurvatureSignal(UserWarning):
    """Straight-line annotations carry no measurable curvature; fit skipped."""


class DegenerateGrid(SpeedometryError):
    """Three of the four (undistorted) grid corners are collinear."""


class HorizonError(SpeedometryError):
    """Point lies at or beyond the vanishing line; not a measurable road point."""


class ZeroDuration(SpeedometryError):
    """Path duration is not positive."""


class ZeroDistance(SpeedometryError):
    """Path length is not positive."""


class MissingTimestamp(SpeedometryError):
    """Timestamp sidecar does not cover a referenced frame index."""

    def __init__(self, frame: int):
        self.frame = frame
        super().__init__(f"no timestamp for frame {frame}")


class NonMonotonicTimestamps(SpeedometryError):
    """Sidecar timestamps are not strictly increasing."""

    def __init__(self, line: int):
        self.line = line
        super().__init__(f"timestamps not strictly increasing at line {line}")


class FrustumError(SpeedometryError):
    """Synthetic vehicle path leaves the camera's field of view."""


class UnknownPassId(SpeedometryError):
    """Manifest pass id does not match the T<x>P<y> convention."""


class EmptyAggregate(SpeedometryError):
    """No evaluable records to aggregate."""


class IncompleteAnnotation(SpeedometryError):
    """Project is missing pieces required to compute a speed estimate.

    ``missing`` lists the absent pieces (e.g. "grid", "path").
    """

    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__("incomplete annotation: missing " + ", ".join(self.missing))
