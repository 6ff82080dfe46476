"""Typed graph model for craft-workflow documentation.

A workflow is a directed graph over three node kinds: thing-states,
doing-actions, and reflective loops attached to things. Flow edges
alternate thing -> doing -> thing, so a chain reads like the sequence
algebra t1 + d1 = t2. Revision edges point back at earlier thing-states,
reflective edges come in bidirected pairs, and summary edges only appear
in derived views.

All constructive operations return a new workflow and leave the input
untouched; instances are treated as immutable snapshots.
"""

from __future__ import annotations

import enum
import urllib.parse
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

from .errors import (
    CycleIntroduced,
    DuplicateId,
    EmptyPath,
    ModelError,
    NonConvexSegment,
    RevisionForward,
    SegmentOverlap,
    SpanOutOfRange,
    UnknownNode,
    UnknownTarget,
)


class GranularityLevel(enum.Enum):
    """Per-node detail level; low < medium < high."""

    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return _LEVEL_RANK[self]

    @classmethod
    def from_name(cls, name: str) -> "GranularityLevel":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown granularity level {name!r}") from None


_LEVEL_RANK = {
    GranularityLevel.LOW: 0,
    GranularityLevel.MEDIUM: 1,
    GranularityLevel.HIGH: 2,
}


def _quantize(seconds: float) -> float:
    # Timestamps are millisecond-precise so serialized decimals round-trip.
    return round(float(seconds), 3)


@dataclass(frozen=True)
class TimeSpan:
    start_s: float
    end_s: float

    def __post_init__(self):
        object.__setattr__(self, "start_s", _quantize(self.start_s))
        object.__setattr__(self, "end_s", _quantize(self.end_s))
        if self.start_s < 0:
            raise ValueError(f"span start {self.start_s} < 0")
        if self.end_s < self.start_s:
            raise ValueError(f"span end {self.end_s} before start {self.start_s}")

    def contains(self, t: float) -> bool:
        return self.start_s <= t <= self.end_s

    @property
    def length(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class VideoMeta:
    uri: str
    duration_s: float
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "duration_s", _quantize(self.duration_s))
        if not self.uri:
            raise ValueError("video uri must be nonempty")
        if self.duration_s <= 0:
            raise ValueError("video duration must be positive")


@dataclass(frozen=True)
class ThingNode:
    id: str
    label: str
    span: TimeSpan
    detail: GranularityLevel = GranularityLevel.MEDIUM
    description: str = ""
    stuff: tuple[str, ...] = ()

    def __post_init__(self):
        _check_node_basics(self.id, self.label)
        object.__setattr__(self, "stuff", tuple(self.stuff))


@dataclass(frozen=True)
class DoingNode:
    id: str
    label: str
    span: TimeSpan
    detail: GranularityLevel = GranularityLevel.MEDIUM
    description: str = ""
    tools: tuple[str, ...] = ()

    def __post_init__(self):
        _check_node_basics(self.id, self.label)
        object.__setattr__(self, "tools", tuple(self.tools))


@dataclass(frozen=True)
class ReflectiveLoopNode:
    """Sensing-and-adjustment cycle attached to a thing-state."""

    id: str
    attached_thing: str
    sensing: str
    span: TimeSpan
    adjustment: str = ""
    detail: GranularityLevel = GranularityLevel.MEDIUM

    def __post_init__(self):
        if not self.id:
            raise ValueError("node id must be nonempty")
        if not self.attached_thing:
            raise ValueError("reflective loop needs an attached thing id")


Node = Union[ThingNode, DoingNode, ReflectiveLoopNode]


def _check_node_basics(node_id: str, label: str) -> None:
    if not node_id:
        raise ValueError("node id must be nonempty")
    if not label:
        raise ValueError(f"node {node_id!r} needs a nonempty label")


def node_kind(node: Node) -> str:
    if isinstance(node, ThingNode):
        return "thing"
    if isinstance(node, DoingNode):
        return "doing"
    return "reflective"


class EdgeKind(enum.Enum):
    FLOW = "flow"
    REFLECTIVE = "reflective"
    REVISION = "revision"
    SUMMARY = "summary"  # derived views only, never stored


@dataclass(frozen=True)
class Edge:
    id: str
    kind: EdgeKind
    from_id: str
    to_id: str
    label: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("edge id must be nonempty")


def flow_edge_id(from_id: str, to_id: str) -> str:
    return f"f:{from_id}:{to_id}"


def reflective_edge_ids(loop_id: str) -> tuple[str, str]:
    """(loop -> thing, thing -> loop) ids for the bidirected pair."""
    return f"r:{loop_id}:out", f"r:{loop_id}:in"


def revision_edge_id(from_id: str, to_id: str) -> str:
    return f"rev:{from_id}:{to_id}"


@dataclass(frozen=True)
class Segment:
    id: str
    title: str
    members: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.id:
            raise ValueError("segment id must be nonempty")
        if not self.members:
            raise ValueError(f"segment {self.id!r} needs members")


@dataclass(frozen=True)
class NoteAnnotation:
    id: str
    target: str
    text: str
    author: str = ""
    created_at: str = "1970-01-01T00:00:00Z"  # ISO-8601 wall clock

    def __post_init__(self):
        if not self.id:
            raise ValueError("note id must be nonempty")
        if not self.text:
            raise ValueError(f"note {self.id!r} needs text")


class LinkSource(enum.Enum):
    DETECTED = "detected"
    SEARCHED = "searched"
    MANUAL = "manual"


@dataclass(frozen=True)
class ExternalLink:
    id: str
    target: str
    url: str
    title: str = ""
    source: LinkSource = LinkSource.MANUAL

    def __post_init__(self):
        if not self.id:
            raise ValueError("link id must be nonempty")
        if not is_valid_url(self.url):
            raise ValueError(f"link {self.id!r} has invalid url {self.url!r}")


def is_valid_url(url: str) -> bool:
    if not url:
        return False
    parsed = urllib.parse.urlparse(url)
    return bool(parsed.scheme) and bool(parsed.netloc or parsed.path)


@dataclass
class Workflow:
    """Full documentation graph for one recorded workflow.

    Collections keep insertion order (declaration order matters for
    branch-path tie breaking), but equality is structural: two workflows
    with the same content in different storage order compare equal.
    """

    id: str
    video: VideoMeta
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)
    notes: list[NoteAnnotation] = field(default_factory=list)
    links: list[ExternalLink] = field(default_factory=list)
    created_rev: int = 1

    # -- lookups ---------------------------------------------------------

    def node(self, node_id: str) -> Node:
        try:
            return self._node_index()[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._node_index()

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise UnknownTarget(f"unknown edge {edge_id!r}")

    def has_id(self, some_id: str) -> bool:
        """True if any node, edge, segment, note, or link uses the id."""
        if some_id in self._node_index():
            return True
        return any(
            some_id == x.id
            for coll in (self.edges, self.segments, self.notes, self.links)
            for x in coll
        )

    def _node_index(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    def things(self) -> list[ThingNode]:
        return [n for n in self.nodes if isinstance(n, ThingNode)]

    def doings(self) -> list[DoingNode]:
        return [n for n in self.nodes if isinstance(n, DoingNode)]

    def loops(self) -> list[ReflectiveLoopNode]:
        return [n for n in self.nodes if isinstance(n, ReflectiveLoopNode)]

    def edges_of_kind(self, kind: EdgeKind) -> list[Edge]:
        return [e for e in self.edges if e.kind == kind]

    def flow_edges(self) -> list[Edge]:
        return self.edges_of_kind(EdgeKind.FLOW)

    def flow_out(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.kind == EdgeKind.FLOW and e.from_id == node_id]

    def flow_in(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.kind == EdgeKind.FLOW and e.to_id == node_id]

    def source_things(self) -> list[ThingNode]:
        """Things with no incoming flow edge."""
        with_in = {e.to_id for e in self.flow_edges()}
        return [t for t in self.things() if t.id not in with_in]

    def sink_things(self) -> list[ThingNode]:
        """Things with no outgoing flow edge."""
        with_out = {e.from_id for e in self.flow_edges()}
        return [t for t in self.things() if t.id not in with_out]

    @property
    def duration_s(self) -> float:
        return self.video.duration_s

    # -- structural equality --------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Workflow):
            return NotImplemented
        return (
            self.id == other.id
            and self.created_rev == other.created_rev
            and self.video == other.video
            and _by_id(self.nodes) == _by_id(other.nodes)
            and _by_id(self.edges) == _by_id(other.edges)
            and _by_id(self.segments) == _by_id(other.segments)
            and _by_id(self.notes) == _by_id(other.notes)
            and _by_id(self.links) == _by_id(other.links)
        )

    __hash__ = None  # mutable container


def _by_id(items: Iterable) -> list:
    return sorted(items, key=lambda x: x.id)


def new_workflow(
    video: VideoMeta, source: ThingNode, workflow_id: str = "w1"
) -> Workflow:
    """Seed a workflow with its single source thing."""
    _check_span_in_video(source.span, video)
    return Workflow(id=workflow_id, video=video, nodes=[source])


def _check_span_in_video(span: TimeSpan, video: VideoMeta) -> None:
    if span.end_s > video.duration_s:
        raise SpanOutOfRange(
            f"span [{span.start_s}, {span.end_s}] exceeds video duration "
            f"{video.duration_s}"
        )


def _require_fresh(w: Workflow, some_id: str) -> None:
    if w.has_id(some_id):
        raise DuplicateId(f"id {some_id!r} already in use")


# -- constructive operations -------------------------------------------


def compose_step(
    w: Workflow, t_in: str, d: DoingNode, t_out: ThingNode
) -> Workflow:
    """Append one algebra step: t_in + d = t_out.

    Adds the doing and the resulting thing plus the two flow edges, so
    alternation holds by construction.
    """
    source = w.node(t_in)
    if not isinstance(source, ThingNode):
        raise UnknownNode(f"{t_in!r} is not a thing")
    _require_fresh(w, d.id)
    if d.id == t_out.id:
        raise DuplicateId(f"id {t_out.id!r} already in use")
    _require_fresh(w, t_out.id)
    _check_span_in_video(d.span, w.video)
    _check_span_in_video(t_out.span, w.video)
    edges = [
        Edge(flow_edge_id(t_in, d.id), EdgeKind.FLOW, t_in, d.id),
        Edge(flow_edge_id(d.id, t_out.id), EdgeKind.FLOW, d.id, t_out.id),
    ]
    return replace(w, nodes=w.nodes + [d, t_out], edges=w.edges + edges)


def declare_branch(
    w: Workflow,
    at_thing: str,
    paths: list[list[Node]],
    rejoin: Optional[Union[str, ThingNode]] = None,
    path_names: Optional[list[str]] = None,
) -> Workflow:
    """Fork the workflow at a thing into two or more alternative paths.

    Each path alternates doing, thing, doing, ... starting with a doing.
    With a rejoin target every path must end with a doing (its flow edge
    enters the rejoin thing); without one every path ends with a thing
    and creates an extra sink. ``path_names`` label the first flow edge
    of each path.
    """
    fork = w.node(at_thing)
    if not isinstance(fork, ThingNode):
        raise UnknownNode(f"{at_thing!r} is not a thing")
    if len(paths) < 2:
        raise EmptyPath("a branch needs at least two paths")
    if path_names is not None and len(path_names) != len(paths):
        raise ModelError("path_names must match paths")

    rejoin_id: Optional[str] = None
    rejoin_node: Optional[ThingNode] = None
    if isinstance(rejoin, ThingNode):
        rejoin_node = rejoin
        rejoin_id = rejoin.id
    elif isinstance(rejoin, str):
        existing = w.node(rejoin)
        if not isinstance(existing, ThingNode):
            raise ModelError(f"rejoin {rejoin!r} is not a thing")
        # Rejoining into an ancestor of the fork would close a flow cycle.
        if _flow_reaches(w, rejoin, at_thing):
            raise CycleIntroduced(
                f"rejoin {rejoin!r} already reaches {at_thing!r}"
            )
        rejoin_id = rejoin

    new_nodes: list[Node] = []
    new_edges: list[Edge] = []
    seen_new: set[str] = set()

    def claim(node: Node) -> None:
        if node.id in seen_new:
            raise DuplicateId(f"id {node.id!r} already in use")
        _require_fresh(w, node.id)
        seen_new.add(node.id)
        _check_span_in_video(node.span, w.video)

    if rejoin_node is not None:
        claim(rejoin_node)
        new_nodes.append(rejoin_node)

    for idx, path in enumerate(paths):
        if not path:
            raise EmptyPath(f"path {idx} is empty")
        expected: type = DoingNode
        for node in path:
            if not isinstance(node, expected):
                raise ModelError(
                    f"path {idx} must alternate doing/thing, got "
                    f"{node_kind(node)} for {node.id!r}"
                )
            claim(node)
            expected = ThingNode if expected is DoingNode else DoingNode
        if rejoin_id is not None and not isinstance(path[-1], DoingNode):
            raise ModelError(f"path {idx} must end with a doing to rejoin")
        if rejoin_id is None and not isinstance(path[-1], ThingNode):
            raise ModelError(f"path {idx} must end with a thing")

        new_nodes.extend(path)
        prev = at_thing
        for node in path:
            label = ""
            if prev == at_thing and path_names is not None:
                label = path_names[idx]
            new_edges.append(
                Edge(flow_edge_id(prev, node.id), EdgeKind.FLOW, prev, node.id, label)
            )
            prev = node.id
        if rejoin_id is not None:
            new_edges.append(
                Edge(flow_edge_id(prev, rejoin_id), EdgeKind.FLOW, prev, rejoin_id)
            )

    return replace(w, nodes=w.nodes + new_nodes, edges=w.edges + new_edges)


def attach_reflective(w: Workflow, thing_id: str, loop: ReflectiveLoopNode) -> Workflow:
    """Attach a sensing loop to a thing via a bidirected edge pair."""
    thing = w.node(thing_id)
    if not isinstance(thing, ThingNode):
        raise UnknownNode(f"{thing_id!r} is not a thing")
    if loop.attached_thing != thing_id:
        raise ModelError(
            f"loop {loop.id!r} declares attachment to {loop.attached_thing!r}, "
            f"not {thing_id!r}"
        )
    _require_fresh(w, loop.id)
    _check_span_in_video(loop.span, w.video)
    out_id, in_id = reflective_edge_ids(loop.id)
    edges = [
        Edge(out_id, EdgeKind.REFLECTIVE, loop.id, thing_id),
        Edge(in_id, EdgeKind.REFLECTIVE, thing_id, loop.id),
    ]
    return replace(w, nodes=w.nodes + [loop], edges=w.edges + edges)


def mark_revision(w: Workflow, from_thing: str, to_thing: str, reason: str) -> Workflow:
    """Record an undo path from a thing back to a strictly earlier one."""
    src = w.node(from_thing)
    dst = w.node(to_thing)
    if not isinstance(src, ThingNode) or not isinstance(dst, ThingNode):
        raise UnknownNode("revision endpoints must be things")
    if dst.span.start_s >= src.span.start_s:
        raise RevisionForward(
            f"revision target {to_thing!r} (start {dst.span.start_s}) is not "
            f"strictly earlier than {from_thing!r} (start {src.span.start_s})"
        )
    base = revision_edge_id(from_thing, to_thing)
    edge_id, n = base, 2
    while w.has_id(edge_id):
        edge_id = f"{base}:{n}"
        n += 1
    edge = Edge(edge_id, EdgeKind.REVISION, from_thing, to_thing, reason)
    return replace(w, edges=w.edges + [edge])


def declare_segment(
    w: Workflow, title: str, member_ids: list[str], segment_id: Optional[str] = None
) -> Workflow:
    """Group a convex run of nodes under a title."""
    members = list(member_ids)
    if not members:
        raise NonConvexSegment("segment needs at least one member")
    for m in members:
        node = w.node(m)  # raises UnknownNode
        if isinstance(node, ReflectiveLoopNode):
            raise ModelError(f"segment member {m!r} must be a thing or doing")
    if len(set(members)) != len(members):
        raise DuplicateId("segment members repeat")

    missing = convexity_gap(w, set(members))
    if missing:
        raise NonConvexSegment(
            f"members skip nodes on internal paths: {sorted(missing)}"
        )
    taken = {m for s in w.segments for m in s.members}
    overlap = taken.intersection(members)
    if overlap:
        raise SegmentOverlap(f"members already segmented: {sorted(overlap)}")

    if segment_id is None:
        n = 1
        while w.has_id(f"s{n}"):
            n += 1
        segment_id = f"s{n}"
    else:
        _require_fresh(w, segment_id)
    seg = Segment(segment_id, title, tuple(members))
    return replace(w, segments=w.segments + [seg])


def annotate(
    w: Workflow, target: str, item: Union[NoteAnnotation, ExternalLink]
) -> Workflow:
    """Attach a note (node or edge target) or an external link (node target).

    Notes are append-only; re-adding the same text on the same target
    stores a second note rather than deduplicating.
    """
    if item.target != target:
        raise ModelError(f"annotation {item.id!r} targets {item.target!r}, not {target!r}")
    _require_fresh(w, item.id)
    if isinstance(item, NoteAnnotation):
        if not w.has_node(target) and not any(e.id == target for e in w.edges):
            raise UnknownTarget(f"unknown note target {target!r}")
        return replace(w, notes=w.notes + [item])
    if not w.has_node(target):
        raise UnknownTarget(f"unknown link target {target!r}")
    return replace(w, links=w.links + [item])


# -- graph helpers ------------------------------------------------------


def _flow_adjacency(w: Workflow) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {n.id: [] for n in w.nodes}
    for e in w.flow_edges():
        if e.from_id in adj:
            adj[e.from_id].append(e.to_id)
    return adj


def _flow_reaches(w: Workflow, start: str, goal: str) -> bool:
    adj = _flow_adjacency(w)
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            return True
        for nxt in adj.get(cur, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def convexity_gap(w: Workflow, members: set[str]) -> set[str]:
    """Non-member nodes lying on a forward flow path between two members.

    Empty result means the member set is path-convex.
    """
    adj = _flow_adjacency(w)
    radj: dict[str, list[str]] = {n.id: [] for n in w.nodes}
    for src, targets in adj.items():
        for t in targets:
            if t in radj:
                radj[t].append(src)

    def closure(start: set[str], graph: dict[str, list[str]]) -> set[str]:
        seen = set(start)
        queue = deque(start)
        while queue:
            for nxt in graph.get(queue.popleft(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen

    downstream = closure(members, adj)
    upstream = closure(members, radj)
    return (downstream & upstream) - members


def topological_order(w: Workflow) -> tuple[list[str], bool]:
    """Kahn's order over the flow subgraph of things and doings.

    Ties break on (span start, id) so the order is deterministic. Returns
    (ordered ids, acyclic). On a cycle the stuck nodes are appended in
    (start, id) order so serialization stays total.
    """
    flow_nodes = [n for n in w.nodes if not isinstance(n, ReflectiveLoopNode)]
    ids = {n.id for n in flow_nodes}
    key = {n.id: (n.span.start_s, n.id) for n in flow_nodes}
    indeg = {i: 0 for i in ids}
    adj: dict[str, list[str]] = {i: [] for i in ids}
    for e in w.flow_edges():
        if e.from_id in ids and e.to_id in ids:
            adj[e.from_id].append(e.to_id)
            indeg[e.to_id] += 1

    import heapq

    heap = [key[i] for i in ids if indeg[i] == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        _, node_id = heapq.heappop(heap)
        order.append(node_id)
        for nxt in adj[node_id]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, key[nxt])
    acyclic = len(order) == len(ids)
    if not acyclic:
        rest = sorted(ids - set(order), key=lambda i: key[i])
        order.extend(rest)
    return order, acyclic


def canonical_node_order(w: Workflow) -> list[Node]:
    """Things and doings in topological-then-start order, each loop
    directly after its attached thing (loops sorted by id)."""
    order, _ = topological_order(w)
    loops_by_thing: dict[str, list[ReflectiveLoopNode]] = {}
    stray: list[ReflectiveLoopNode] = []
    for loop in w.loops():
        if w.has_node(loop.attached_thing):
            loops_by_thing.setdefault(loop.attached_thing, []).append(loop)
        else:
            stray.append(loop)
    result: list[Node] = []
    for node_id in order:
        node = w.node(node_id)
        result.append(node)
        for loop in sorted(loops_by_thing.get(node_id, []), key=lambda n: n.id):
            result.append(loop)
    result.extend(sorted(stray, key=lambda n: n.id))
    return result


def pattern_census(w: Workflow) -> dict[str, int]:
    """Instance counts for the seven grammar patterns."""
    node_detail = {n.id: n.detail for n in w.nodes}
    shifts = sum(
        1
        for e in w.flow_edges()
        if e.from_id in node_detail
        and e.to_id in node_detail
        and node_detail[e.from_id] != node_detail[e.to_id]
    )
    branch_points = sum(1 for t in w.things() if len(w.flow_out(t.id)) >= 2)
    return {
        "granularity_shifts": shifts,
        "reflective_loops": len(w.loops()),
        "notes_to_self": len(w.notes),
        "external_links": len(w.links),
        "segments": len(w.segments),
        "branches": branch_points,
        "revision_loops": len(w.edges_of_kind(EdgeKind.REVISION)),
    }
