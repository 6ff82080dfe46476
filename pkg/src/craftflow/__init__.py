"""Craft workflows as graphs: things, doings and reflective loops over
a video timeline, with notation, validation, views, ingestion and a
small share service."""

from .errors import CraftflowError, ModelError
from .model import (
    DoingNode,
    Edge,
    EdgeKind,
    ExternalLink,
    GranularityLevel,
    LinkSource,
    NoteAnnotation,
    ReflectiveLoopNode,
    Segment,
    ThingNode,
    TimeSpan,
    VideoMeta,
    Workflow,
    annotate,
    attach_reflective,
    compose_step,
    declare_branch,
    declare_segment,
    mark_revision,
    new_workflow,
    pattern_census,
)
from .notation import ParseError, SchemaError, parse_cwn, to_cwn
from .validate import (
    RepairAction,
    ValidationConfig,
    Violation,
    ViolationCode,
    repair,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "CraftflowError",
    "ModelError",
    "DoingNode",
    "Edge",
    "EdgeKind",
    "ExternalLink",
    "GranularityLevel",
    "LinkSource",
    "NoteAnnotation",
    "ReflectiveLoopNode",
    "Segment",
    "ThingNode",
    "TimeSpan",
    "VideoMeta",
    "Workflow",
    "annotate",
    "attach_reflective",
    "compose_step",
    "declare_branch",
    "declare_segment",
    "mark_revision",
    "new_workflow",
    "pattern_census",
    "ParseError",
    "SchemaError",
    "parse_cwn",
    "to_cwn",
    "RepairAction",
    "ValidationConfig",
    "Violation",
    "ViolationCode",
    "repair",
    "validate",
    "__version__",
]
