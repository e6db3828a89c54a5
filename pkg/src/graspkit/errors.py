"""Exception types shared across the toolkit."""
from __future__ import annotations


class GraspKitError(Exception):
    """Base class for all toolkit errors."""


class FormatError(GraspKitError):
    """A file failed to parse or validate. Carries path and line context."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class EmptyGroundTruthError(GraspKitError):
    """Evaluation was asked to score against an empty annotation set."""


class PlacementError(GraspKitError):
    """No valid object placement could be found for the camera frame."""
