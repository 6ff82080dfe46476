"""Exception types shared across the toolkit.

Model errors signal misuse of the constructive graph operations; they are
raised eagerly so that an operation either returns a well-formed workflow
or leaves the input untouched.
"""

from __future__ import annotations


class CraftflowError(Exception):
    """Base class for all toolkit errors."""


class ModelError(CraftflowError):
    """A constructive operation was asked to build an ill-formed graph."""


class UnknownNode(ModelError):
    pass


class UnknownTarget(ModelError):
    pass


class UnknownSegment(ModelError):
    pass


class DuplicateId(ModelError):
    pass


class SpanOutOfRange(ModelError):
    pass


class EmptyPath(ModelError):
    pass


class CycleIntroduced(ModelError):
    pass


class RevisionForward(ModelError):
    """A revision edge must point at a strictly earlier thing-state."""


class NonConvexSegment(ModelError):
    """Segment members must include every node on paths between members."""


class SegmentOverlap(ModelError):
    """Segments are flat: member sets of distinct segments may not intersect."""


class OutOfRange(CraftflowError):
    """A lookup time lies outside the recorded video."""


class NoPrincipalChain(CraftflowError):
    """A workflow without thing-states has no chain to align against."""


class Unrepairable(CraftflowError):
    """No safe repair action exists for a reported violation code."""

    def __init__(self, code: str):
        super().__init__(f"no safe repair action for {code}")
        self.code = code


class StorageError(CraftflowError):
    """Base class for the versioned on-disk store."""


class UnknownWorkflow(StorageError):
    pass


class BadToken(StorageError):
    """The edit token does not match the stored capability."""


class IngestError(CraftflowError):
    """Base class for ingestion pipeline failures."""


class ProviderUnavailable(IngestError):
    pass


class SearchUnavailable(IngestError):
    pass


class ExhaustedRetries(IngestError):
    """All analysis attempts failed; carries the final report."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
