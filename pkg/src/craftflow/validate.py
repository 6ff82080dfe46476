"""Well-formedness validation and conservative repair.

The validator accepts arbitrary workflows, including machine-generated
ones that break grammar rules, and reports every violation instance as
data. Repair applies only safe actions: it never deletes thing or doing
nodes and never trades a violation for a more severe one, leaving
anything it cannot fix for the human editor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

from .model import (
    DoingNode,
    Edge,
    EdgeKind,
    ReflectiveLoopNode,
    Segment,
    ThingNode,
    TimeSpan,
    Workflow,
    convexity_gap,
    reflective_edge_ids,
)


class ViolationCode(enum.Enum):
    DISCONNECTED = "Disconnected"
    TEMPORAL_GAP = "TemporalGap"
    SEQUENCE_VIOLATION = "SequenceViolation"
    DANGLING_REFLECTIVE = "DanglingReflective"
    NON_CONVEX_SEGMENT = "NonConvexSegment"
    TIMESTAMP_OUT_OF_RANGE = "TimestampOutOfRange"
    REVISION_FORWARD = "RevisionForward"
    FLOW_CYCLE = "FlowCycle"
    MULTIPLE_SOURCES = "MultipleSources"


_CODE_ORDER = {code: i for i, code in enumerate(ViolationCode)}

# Repair may introduce a lower-severity violation, never a higher one.
_SEVERITY = {
    ViolationCode.FLOW_CYCLE: 8,
    ViolationCode.SEQUENCE_VIOLATION: 4,
    ViolationCode.DISCONNECTED: 2,
}


def severity(code: ViolationCode) -> int:
    return _SEVERITY.get(code, 1)


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    subjects: tuple[str, ...]
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "code": self.code.value,
            "subjects": list(self.subjects),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ValidationConfig:
    max_gap_s: float = 1.0
    require_single_source: bool = True

    def __post_init__(self):
        if self.max_gap_s < 0:
            raise ValueError("max_gap_s must be nonnegative")


class RepairKind(enum.Enum):
    CONNECT_BY_TEMPORAL_ADJACENCY = "ConnectByTemporalAdjacency"
    EXTEND_SPAN = "ExtendSpan"
    DROP_EDGE = "DropEdge"
    REVERSE_REVISION = "ReverseRevision"


@dataclass(frozen=True)
class RepairAction:
    kind: RepairKind
    subjects: tuple[str, ...]
    rationale: str

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "subjects": list(self.subjects),
            "rationale": self.rationale,
        }


# -- coverage -----------------------------------------------------------


def check_temporal_coverage(w: Workflow, max_gap_s: float) -> list[tuple[float, float]]:
    """Maximal sub-intervals of the video not covered by any node span,
    keeping only gaps longer than ``max_gap_s``."""
    duration = w.duration_s
    spans = []
    for n in w.nodes:
        start = min(max(n.span.start_s, 0.0), duration)
        end = min(max(n.span.end_s, 0.0), duration)
        if end > start or (end == start and start <= duration):
            spans.append((start, end))
    spans.sort()

    gaps: list[tuple[float, float]] = []
    covered_to = 0.0
    for start, end in spans:
        if start > covered_to:
            gaps.append((covered_to, start))
        covered_to = max(covered_to, end)
    if covered_to < duration:
        gaps.append((covered_to, duration))
    return [(a, b) for a, b in gaps if (b - a) > max_gap_s + 1e-9]


# -- connectivity -------------------------------------------------------


def check_connectivity(w: Workflow) -> tuple[bool, list[str]]:
    """(weakly connected over all edge kinds, nodes not flow-reachable
    from the source).

    The earliest source thing anchors reachability, so extra source
    things show up as unreachable rather than seeding their own islands.
    Reflective loops count as reachable when their attached thing is,
    since no flow edge ever touches a loop.
    """
    if not w.nodes:
        return True, []
    components = _weak_components(w)
    weakly_connected = len(components) == 1

    adj: dict[str, list[str]] = {n.id: [] for n in w.nodes}
    for e in w.edges:
        if e.kind == EdgeKind.FLOW and e.from_id in adj and e.to_id in adj:
            adj[e.from_id].append(e.to_id)
    reached = set()
    sources = sorted((t.span.start_s, t.id) for t in w.source_things())
    stack = [sources[0][1]] if sources else []
    reached.update(stack)
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in reached:
                reached.add(nxt)
                stack.append(nxt)
    unreachable = []
    for n in w.nodes:
        if isinstance(n, ReflectiveLoopNode):
            if n.attached_thing not in reached:
                unreachable.append(n.id)
        elif n.id not in reached:
            unreachable.append(n.id)
    return weakly_connected, sorted(unreachable)


def _weak_components(w: Workflow) -> list[list[str]]:
    """Connected components in the undirected sense, all edge kinds."""
    neighbors: dict[str, set[str]] = {n.id: set() for n in w.nodes}
    for e in w.edges:
        if e.from_id in neighbors and e.to_id in neighbors:
            neighbors[e.from_id].add(e.to_id)
            neighbors[e.to_id].add(e.from_id)
    seen: set[str] = set()
    components: list[list[str]] = []
    for n in w.nodes:
        if n.id in seen:
            continue
        comp = []
        stack = [n.id]
        seen.add(n.id)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nxt in neighbors[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        components.append(sorted(comp))
    return components


def _flow_sccs(w: Workflow) -> list[list[str]]:
    """Strongly connected components of the flow subgraph with a cycle
    (size > 1, or a self loop)."""
    ids = [n.id for n in w.nodes if not isinstance(n, ReflectiveLoopNode)]
    idset = set(ids)
    adj: dict[str, list[str]] = {i: [] for i in ids}
    self_loops = set()
    for e in w.flow_edges():
        if e.from_id in idset and e.to_id in idset:
            adj[e.from_id].append(e.to_id)
            if e.from_id == e.to_id:
                self_loops.add(e.from_id)

    # Tarjan, iterative.
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    sccs: list[list[str]] = []

    for root in ids:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            node, edge_i = work[-1]
            if edge_i == 0:
                index[node] = low[node] = counter[0]
                counter[0] += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            targets = adj[node]
            while edge_i < len(targets):
                nxt = targets[edge_i]
                edge_i += 1
                if nxt not in index:
                    work[-1] = (node, edge_i)
                    work.append((nxt, 0))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                comp = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    comp.append(top)
                    if top == node:
                        break
                if len(comp) > 1 or node in self_loops:
                    sccs.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return sccs


# -- the validator ------------------------------------------------------


def validate(w: Workflow, cfg: Optional[ValidationConfig] = None) -> list[Violation]:
    """Report every violation of every code present; empty means valid.

    Pure function with a deterministic result order: code, then subjects,
    then detail.
    """
    cfg = cfg or ValidationConfig()
    out: list[Violation] = []
    node_by_id = {n.id: n for n in w.nodes}

    out.extend(_check_spans(w))
    out.extend(_check_sequence(w, node_by_id))
    out.extend(_check_cycles(w))
    out.extend(_check_sources(w, cfg))
    out.extend(_check_disconnected(w))
    out.extend(_check_reflective(w, node_by_id))
    out.extend(_check_segments(w, node_by_id))
    out.extend(_check_revisions(w, node_by_id))
    for a, b in check_temporal_coverage(w, cfg.max_gap_s):
        out.append(
            Violation(ViolationCode.TEMPORAL_GAP, (), f"gap [{a:g}, {b:g}]")
        )

    out.sort(key=lambda v: (_CODE_ORDER[v.code], v.subjects, v.detail))
    return out


def _check_spans(w: Workflow) -> list[Violation]:
    found = []
    for n in w.nodes:
        if n.span.end_s > w.duration_s:
            found.append(
                Violation(
                    ViolationCode.TIMESTAMP_OUT_OF_RANGE,
                    (n.id,),
                    f"span [{n.span.start_s:g}, {n.span.end_s:g}] exceeds "
                    f"duration {w.duration_s:g}",
                )
            )
    return found


def _check_sequence(w: Workflow, nodes: dict) -> list[Violation]:
    found = []
    code = ViolationCode.SEQUENCE_VIOLATION
    for e in w.flow_edges():
        src = nodes.get(e.from_id)
        dst = nodes.get(e.to_id)
        if src is None or dst is None:
            found.append(Violation(code, (e.id,), "flow edge endpoint missing"))
            continue
        ok = (isinstance(src, ThingNode) and isinstance(dst, DoingNode)) or (
            isinstance(src, DoingNode) and isinstance(dst, ThingNode)
        )
        if not ok:
            found.append(
                Violation(
                    code,
                    (e.id,),
                    "flow edges must alternate thing and doing",
                )
            )
    for n in w.nodes:
        if not isinstance(n, DoingNode):
            continue
        fan_in = len(w.flow_in(n.id))
        fan_out = len(w.flow_out(n.id))
        if fan_in != 1:
            found.append(
                Violation(code, (n.id,), f"doing has flow in-degree {fan_in}, expected 1")
            )
        if fan_out != 1:
            found.append(
                Violation(code, (n.id,), f"doing has flow out-degree {fan_out}, expected 1")
            )
    return found


def _check_cycles(w: Workflow) -> list[Violation]:
    return [
        Violation(ViolationCode.FLOW_CYCLE, tuple(comp), "flow subgraph cycle")
        for comp in _flow_sccs(w)
    ]


def _check_sources(w: Workflow, cfg: ValidationConfig) -> list[Violation]:
    if not cfg.require_single_source:
        return []
    sources = sorted(t.id for t in w.source_things())
    if len(sources) == 1:
        return []
    return [
        Violation(
            ViolationCode.MULTIPLE_SOURCES,
            tuple(sources),
            f"expected exactly one source thing, found {len(sources)}",
        )
    ]


def _check_disconnected(w: Workflow) -> list[Violation]:
    components = _weak_components(w)
    if len(components) <= 1:
        return []
    # The component holding the earliest source thing anchors the graph.
    sources = sorted(
        (t.span.start_s, t.id) for t in w.source_things()
    )
    if sources:
        anchor_id = sources[0][1]
    else:
        anchor_id = components[0][0]
    found = []
    for comp in components:
        if anchor_id in comp:
            continue
        found.append(
            Violation(
                ViolationCode.DISCONNECTED,
                tuple(comp),
                "not weakly connected to the source component",
            )
        )
    return found


def _check_reflective(w: Workflow, nodes: dict) -> list[Violation]:
    found = []
    code = ViolationCode.DANGLING_REFLECTIVE
    loop_ids = {n.id for n in w.loops()}
    refl = w.edges_of_kind(EdgeKind.REFLECTIVE)
    for loop in w.loops():
        attached = nodes.get(loop.attached_thing)
        if attached is None or not isinstance(attached, ThingNode):
            found.append(
                Violation(
                    code,
                    (loop.id,),
                    f"attached thing {loop.attached_thing!r} missing",
                )
            )
            continue
        out = [
            e for e in refl if e.from_id == loop.id and e.to_id == loop.attached_thing
        ]
        inc = [
            e for e in refl if e.to_id == loop.id and e.from_id == loop.attached_thing
        ]
        strays = [
            e
            for e in refl
            if loop.id in (e.from_id, e.to_id) and e not in out and e not in inc
        ]
        if len(out) != 1 or len(inc) != 1 or strays:
            found.append(
                Violation(
                    code,
                    (loop.id,),
                    "loop needs exactly one reflective edge in each direction "
                    "to its attached thing",
                )
            )
    for e in refl:
        if e.from_id not in loop_ids and e.to_id not in loop_ids:
            found.append(
                Violation(code, (e.id,), "reflective edge without a loop endpoint")
            )
    return found


def _check_segments(w: Workflow, nodes: dict) -> list[Violation]:
    found = []
    code = ViolationCode.NON_CONVEX_SEGMENT
    for seg in w.segments:
        missing = [m for m in seg.members if m not in nodes]
        if missing:
            found.append(
                Violation(code, (seg.id,), f"members missing from graph: {missing}")
            )
            continue
        if len(set(seg.members)) != len(seg.members):
            found.append(Violation(code, (seg.id,), "members repeat"))
            continue
        loops = [m for m in seg.members if isinstance(nodes[m], ReflectiveLoopNode)]
        if loops:
            found.append(
                Violation(code, (seg.id,), f"loops cannot be segment members: {loops}")
            )
            continue
        gap = convexity_gap(w, set(seg.members))
        if gap:
            found.append(
                Violation(
                    code,
                    (seg.id,),
                    f"interior nodes excluded from segment: {sorted(gap)}",
                )
            )
    for i, a in enumerate(w.segments):
        for b in w.segments[i + 1 :]:
            overlap = set(a.members) & set(b.members)
            if overlap:
                found.append(
                    Violation(
                        code,
                        tuple(sorted((a.id, b.id))),
                        f"segments share members: {sorted(overlap)}",
                    )
                )
    return found


def _check_revisions(w: Workflow, nodes: dict) -> list[Violation]:
    found = []
    for e in w.edges_of_kind(EdgeKind.REVISION):
        src = nodes.get(e.from_id)
        dst = nodes.get(e.to_id)
        if not isinstance(src, ThingNode) or not isinstance(dst, ThingNode):
            found.append(
                Violation(
                    ViolationCode.SEQUENCE_VIOLATION,
                    (e.id,),
                    "revision endpoints must be existing things",
                )
            )
            continue
        if dst.span.start_s >= src.span.start_s:
            found.append(
                Violation(
                    ViolationCode.REVISION_FORWARD,
                    (e.id,),
                    f"target starts at {dst.span.start_s:g}, not strictly before "
                    f"{src.span.start_s:g}",
                )
            )
    found.sort(key=lambda v: (_CODE_ORDER[v.code], v.subjects, v.detail))
    return found


# -- repair -------------------------------------------------------------


def repair(
    w: Workflow,
    violations: Optional[list[Violation]] = None,
    cfg: Optional[ValidationConfig] = None,
) -> tuple[Workflow, list[RepairAction]]:
    """Apply safe repairs until none helps; returns the repaired workflow
    and the actions taken, in order.

    Every kept action strictly lowers the severity-weighted violation
    count and never introduces a code more severe than what it removed.
    Violations with no safe strategy (for instance a second source
    thing) are left in place for the human editor, so running repair on
    its own output applies nothing further.
    """
    cfg = cfg or ValidationConfig()
    current = w
    applied: list[RepairAction] = []
    blocked: set[tuple] = set()
    vios = list(violations) if violations is not None else validate(current, cfg)

    for _ in range(200):  # hard stop; each kept action strictly decreases weight
        vios.sort(key=lambda v: (-severity(v.code), _CODE_ORDER[v.code], v.subjects))
        step = None
        for v in vios:
            key = (v.code, v.subjects, v.detail)
            if key in blocked:
                continue
            step = _plan_action(current, v)
            if step is not None:
                candidate, action = step
                before = _weight(vios)
                after_vios = validate(candidate, cfg)
                worst_removed = severity(v.code)
                new_codes = {x.code for x in after_vios} - {x.code for x in vios}
                if _weight(after_vios) < before and all(
                    severity(c) <= worst_removed for c in new_codes
                ):
                    current = candidate
                    applied.append(action)
                    vios = after_vios
                    break
                step = None
            blocked.add(key)
        if step is None:
            break
    return current, applied


def _weight(vios: list[Violation]) -> int:
    return sum(severity(v.code) for v in vios)


def _plan_action(w: Workflow, v: Violation):
    """Build (candidate workflow, action) for one violation, or None."""
    if v.code == ViolationCode.FLOW_CYCLE:
        return _break_cycle(w, v)
    if v.code == ViolationCode.SEQUENCE_VIOLATION:
        return _fix_sequence(w, v)
    if v.code in (ViolationCode.DISCONNECTED, ViolationCode.DANGLING_REFLECTIVE):
        return _reattach_loop(w, v)
    if v.code == ViolationCode.TIMESTAMP_OUT_OF_RANGE:
        return _clamp_span(w, v)
    if v.code == ViolationCode.REVISION_FORWARD:
        return _fix_revision(w, v)
    if v.code == ViolationCode.TEMPORAL_GAP:
        return _fill_gap(w, v)
    if v.code == ViolationCode.NON_CONVEX_SEGMENT:
        return _fix_segment(w, v)
    return None


def _drop_edges(w: Workflow, edge_ids: set[str]) -> Workflow:
    return replace(w, edges=[e for e in w.edges if e.id not in edge_ids])


def _break_cycle(w: Workflow, v: Violation):
    comp = set(v.subjects)
    node_key = {n.id: (n.span.start_s, n.id) for n in w.nodes}
    candidates = [
        e for e in w.flow_edges() if e.from_id in comp and e.to_id in comp
    ]
    if not candidates:
        return None
    # Drop the back edge: the one jumping to the earliest state.
    edge = min(candidates, key=lambda e: (node_key[e.to_id], e.id))
    return (
        _drop_edges(w, {edge.id}),
        RepairAction(
            RepairKind.DROP_EDGE,
            (edge.id,),
            "dropped the back edge closing a flow cycle",
        ),
    )


def _fix_sequence(w: Workflow, v: Violation):
    subject = v.subjects[0]
    nodes = {n.id: n for n in w.nodes}
    edge = next((e for e in w.edges if e.id == subject), None)
    if edge is not None:
        return (
            _drop_edges(w, {edge.id}),
            RepairAction(
                RepairKind.DROP_EDGE, (edge.id,), "dropped edge breaking alternation"
            ),
        )
    node = nodes.get(subject)
    if isinstance(node, DoingNode):
        key = {n.id: (n.span.start_s, n.id) for n in w.nodes}
        for edges in (w.flow_in(subject), w.flow_out(subject)):
            if len(edges) > 1:
                keep = min(edges, key=lambda e: (key.get(e.from_id, (0, "")), e.id))
                dropped = {e.id for e in edges if e.id != keep.id}
                return (
                    _drop_edges(w, dropped),
                    RepairAction(
                        RepairKind.DROP_EDGE,
                        tuple(sorted(dropped)),
                        "kept the earliest flow edge, dropped duplicates",
                    ),
                )
    return None


def _reattach_loop(w: Workflow, v: Violation):
    nodes = {n.id: n for n in w.nodes}
    loops = [
        nodes[s]
        for s in v.subjects
        if isinstance(nodes.get(s), ReflectiveLoopNode)
    ]
    if v.code == ViolationCode.DANGLING_REFLECTIVE and not loops:
        # Stray reflective edge with no loop endpoint.
        edge = next((e for e in w.edges if e.id == v.subjects[0]), None)
        if edge is None:
            return None
        return (
            _drop_edges(w, {edge.id}),
            RepairAction(
                RepairKind.DROP_EDGE, (edge.id,), "dropped loop-less reflective edge"
            ),
        )
    if len(loops) != 1 or len(v.subjects) != 1:
        return None
    loop = loops[0]
    things = [n for n in w.things()]
    if not things:
        return None
    attached = nodes.get(loop.attached_thing)
    if isinstance(attached, ThingNode):
        target = attached
        rationale = "restored the bidirected reflective pair"
    else:
        mid = (loop.span.start_s + loop.span.end_s) / 2
        target = min(
            things,
            key=lambda t: (abs((t.span.start_s + t.span.end_s) / 2 - mid), t.id),
        )
        rationale = f"reattached loop to nearest-in-time thing {target.id!r}"
    stale = {
        e.id
        for e in w.edges_of_kind(EdgeKind.REFLECTIVE)
        if loop.id in (e.from_id, e.to_id)
    }
    out_id, in_id = reflective_edge_ids(loop.id)
    new_loop = replace(loop, attached_thing=target.id)
    new_nodes = [new_loop if n.id == loop.id else n for n in w.nodes]
    kept = [e for e in w.edges if e.id not in stale and e.id not in (out_id, in_id)]
    kept += [
        Edge(out_id, EdgeKind.REFLECTIVE, loop.id, target.id),
        Edge(in_id, EdgeKind.REFLECTIVE, target.id, loop.id),
    ]
    return (
        replace(w, nodes=new_nodes, edges=kept),
        RepairAction(
            RepairKind.CONNECT_BY_TEMPORAL_ADJACENCY,
            (loop.id, target.id),
            rationale,
        ),
    )


def _clamp_span(w: Workflow, v: Violation):
    node_id = v.subjects[0]
    nodes = {n.id: n for n in w.nodes}
    node = nodes.get(node_id)
    if node is None:
        return None
    duration = w.duration_s
    start = min(node.span.start_s, duration)
    end = min(node.span.end_s, duration)
    new_node = replace(node, span=TimeSpan(start, end))
    return (
        replace(w, nodes=[new_node if n.id == node_id else n for n in w.nodes]),
        RepairAction(
            RepairKind.EXTEND_SPAN,
            (node_id,),
            f"clamped span into [0, {duration:g}]",
        ),
    )


def _fix_revision(w: Workflow, v: Violation):
    edge = next((e for e in w.edges if e.id == v.subjects[0]), None)
    if edge is None:
        return None
    nodes = {n.id: n for n in w.nodes}
    src, dst = nodes.get(edge.from_id), nodes.get(edge.to_id)
    if src is None or dst is None:
        return None
    if src.span.start_s < dst.span.start_s:
        flipped = Edge(edge.id, EdgeKind.REVISION, edge.to_id, edge.from_id, edge.label)
        return (
            replace(w, edges=[flipped if e.id == edge.id else e for e in w.edges]),
            RepairAction(
                RepairKind.REVERSE_REVISION,
                (edge.id,),
                "reversed revision to point at the earlier state",
            ),
        )
    return (
        _drop_edges(w, {edge.id}),
        RepairAction(
            RepairKind.DROP_EDGE,
            (edge.id,),
            "dropped revision between simultaneous states",
        ),
    )


def _fill_gap(w: Workflow, v: Violation):
    # Detail carries "gap [a, b]".
    try:
        inner = v.detail.split("[", 1)[1].rstrip("]")
        a_s, b_s = inner.split(",")
        a, b = float(a_s), float(b_s)
    except (IndexError, ValueError):
        return None
    flow_nodes = [n for n in w.nodes if not isinstance(n, ReflectiveLoopNode)]
    if not flow_nodes:
        return None
    before = [n for n in flow_nodes if n.span.end_s <= a + 1e-9]
    if before:
        node = max(before, key=lambda n: (n.span.end_s, n.span.start_s, n.id))
        new_node = replace(node, span=TimeSpan(node.span.start_s, b))
        verb = f"extended {node.id!r} forward to {b:g}"
    else:
        after = [n for n in flow_nodes if n.span.start_s >= b - 1e-9]
        if not after:
            return None
        node = min(after, key=lambda n: (n.span.start_s, n.id))
        new_node = replace(node, span=TimeSpan(a, node.span.end_s))
        verb = f"extended {node.id!r} back to {a:g}"
    return (
        replace(w, nodes=[new_node if n.id == node.id else n for n in w.nodes]),
        RepairAction(RepairKind.EXTEND_SPAN, (node.id,), verb + " to close a gap"),
    )


def _fix_segment(w: Workflow, v: Violation):
    if len(v.subjects) != 1:
        return None  # overlapping segments stay a human call
    seg = next((s for s in w.segments if s.id == v.subjects[0]), None)
    if seg is None:
        return None
    nodes = {n.id: n for n in w.nodes}
    members = [
        m
        for m in dict.fromkeys(seg.members)
        if m in nodes and not isinstance(nodes[m], ReflectiveLoopNode)
    ]
    if not members:
        new_segments = [s for s in w.segments if s.id != seg.id]
        return (
            replace(w, segments=new_segments),
            RepairAction(
                RepairKind.DROP_EDGE,
                (seg.id,),
                "dropped segment whose members no longer exist",
            ),
        )
    hull = sorted(convexity_gap(w, set(members)))
    filled = members + [m for m in hull if m not in members]
    new_seg = Segment(seg.id, seg.title, tuple(filled))
    return (
        replace(w, segments=[new_seg if s.id == seg.id else s for s in w.segments]),
        RepairAction(
            RepairKind.EXTEND_SPAN,
            (seg.id,),
            "filled segment to its path-convex hull",
        ),
    )
