"""Derived views over a workflow: granularity filtering, segment
collapse, chain diffing, timeline lookup and DOT export.

Views never mutate the workflow. A view is a pure function of
(workflow, level, collapsed segments): hidden nodes contract into
summary edges, so expanding a collapsed segment restores exactly the
view it was collapsed from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import NoPrincipalChain, OutOfRange, UnknownSegment
from .model import (
    DoingNode,
    EdgeKind,
    GranularityLevel,
    Node,
    ReflectiveLoopNode,
    ThingNode,
    Workflow,
    canonical_node_order,
    topological_order,
)


@dataclass(frozen=True)
class SummaryEdge:
    """A contracted run of hidden nodes between two visible ones."""

    id: str
    from_id: str
    to_id: str
    count: int
    component: tuple[str, ...]
    label: str


@dataclass(frozen=True)
class View:
    workflow: Workflow
    level: GranularityLevel
    collapsed: tuple[str, ...]
    visible: tuple[str, ...]
    summaries: tuple[SummaryEdge, ...]

    def is_visible(self, node_id: str) -> bool:
        return node_id in self.visible

    def to_json(self) -> dict:
        return {
            "level": self.level.value,
            "visible": list(self.visible),
            "summaries": [
                {
                    "id": s.id,
                    "from": s.from_id,
                    "to": s.to_id,
                    "count": s.count,
                    "label": s.label,
                    "component": list(s.component),
                }
                for s in self.summaries
            ],
            "collapsed": list(self.collapsed),
        }


def granularity_view(w: Workflow, level: GranularityLevel) -> View:
    """The workflow at the given fidelity: only nodes at or below the
    level stay visible, except the source and the sink things, which
    anchor the graph at every level."""
    return _compute_view(w, level, ())


def collapse_segment(view: View, segment_id: str) -> View:
    """Fold a segment into summary edges, keeping its last thing (the
    state the segment achieves) as the anchor.

    Collapsing a segment whose members are all hidden anyway, or one
    already collapsed, returns the view unchanged.
    """
    w = view.workflow
    seg = next((s for s in w.segments if s.id == segment_id), None)
    if seg is None:
        raise UnknownSegment(f"no segment {segment_id!r}")
    if segment_id in view.collapsed:
        return view
    if not any(m in view.visible for m in seg.members):
        return view
    return _compute_view(w, view.level, view.collapsed + (segment_id,))


def expand_segment(view: View, segment_id: str) -> View:
    if segment_id not in view.collapsed:
        return view
    remaining = tuple(s for s in view.collapsed if s != segment_id)
    return _compute_view(view.workflow, view.level, remaining)


def _compute_view(
    w: Workflow, level: GranularityLevel, collapsed: tuple[str, ...]
) -> View:
    order, _ = topological_order(w)
    topo_idx = {nid: i for i, nid in enumerate(order)}
    node_by_id = {n.id: n for n in w.nodes}

    protected = {t.id for t in w.source_things()} | {t.id for t in w.sink_things()}
    collapsed_members: set[str] = set()
    keep_last: set[str] = set()
    seg_by_id = {s.id: s for s in w.segments}
    for seg_id in collapsed:
        seg = seg_by_id.get(seg_id)
        if seg is None:
            continue
        collapsed_members.update(seg.members)
        things = [
            m
            for m in seg.members
            if isinstance(node_by_id.get(m), ThingNode)
        ]
        if things:
            keep_last.add(max(things, key=lambda m: topo_idx.get(m, -1)))

    visible: set[str] = set()
    for t in w.things():
        if t.id in protected or t.id in keep_last:
            visible.add(t.id)
        elif t.detail.rank <= level.rank and t.id not in collapsed_members:
            visible.add(t.id)

    flow_neighbors: dict[str, set[str]] = {}
    for e in w.flow_edges():
        flow_neighbors.setdefault(e.from_id, set()).add(e.to_id)
        flow_neighbors.setdefault(e.to_id, set()).add(e.from_id)

    for d in w.doings():
        if d.detail.rank > level.rank or d.id in collapsed_members:
            continue
        neighbors = flow_neighbors.get(d.id, set())
        if all(x in visible for x in neighbors if x in node_by_id):
            visible.add(d.id)

    for r in w.loops():
        if r.detail.rank <= level.rank and r.attached_thing in visible:
            visible.add(r.id)

    hidden = [
        n.id
        for n in w.nodes
        if not isinstance(n, ReflectiveLoopNode) and n.id not in visible
    ]
    summaries = _contract(w, visible, hidden, collapsed, seg_by_id, topo_idx)

    ordered_visible = tuple(
        n.id for n in canonical_node_order(w) if n.id in visible
    )
    return View(w, level, collapsed, ordered_visible, tuple(summaries))


def _contract(w, visible, hidden, collapsed, seg_by_id, topo_idx):
    hidden_set = set(hidden)
    neighbors: dict[str, set[str]] = {h: set() for h in hidden}
    for e in w.flow_edges():
        if e.from_id in hidden_set and e.to_id in hidden_set:
            neighbors[e.from_id].add(e.to_id)
            neighbors[e.to_id].add(e.from_id)

    components: list[list[str]] = []
    seen: set[str] = set()
    for h in hidden:
        if h in seen:
            continue
        comp = []
        stack = [h]
        seen.add(h)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nxt in neighbors[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        components.append(sorted(comp, key=lambda x: (topo_idx.get(x, -1), x)))
    components.sort(key=lambda c: (topo_idx.get(c[0], -1), c[0]))

    summaries: list[SummaryEdge] = []
    used_ids: set[str] = set()
    for comp in components:
        comp_set = set(comp)
        entries: list[str] = []
        exits: list[str] = []
        for e in w.flow_edges():
            if e.to_id in comp_set and e.from_id in visible:
                entries.append(e.from_id)
            if e.from_id in comp_set and e.to_id in visible:
                exits.append(e.to_id)
        entries = sorted(set(entries), key=lambda x: (topo_idx.get(x, -1), x))
        exits = sorted(set(exits), key=lambda x: (topo_idx.get(x, -1), x))
        label = f"{len(comp)} hidden steps"
        for seg_id in collapsed:
            seg = seg_by_id.get(seg_id)
            if seg is not None and comp_set <= set(seg.members):
                label = seg.title
                break
        for u in entries:
            for v in exits:
                base = f"sum:{u}:{v}"
                eid, n = base, 1
                while eid in used_ids:
                    n += 1
                    eid = f"{base}:{n}"
                used_ids.add(eid)
                summaries.append(
                    SummaryEdge(eid, u, v, len(comp), tuple(comp), label)
                )
    return summaries


# -- chain diff ---------------------------------------------------------


def principal_chain(w: Workflow) -> list[Node]:
    """From the source thing, follow the first declared flow edge out of
    every node; the default walk through the graph."""
    sources = w.source_things()
    if not sources:
        raise NoPrincipalChain("no source thing to start from")
    start = min(sources, key=lambda t: (t.span.start_s, t.id))
    chain: list[Node] = []
    node_by_id = {n.id: n for n in w.nodes}
    current = start.id
    visited: set[str] = set()
    while current in node_by_id and current not in visited:
        visited.add(current)
        chain.append(node_by_id[current])
        nxt = [e.to_id for e in w.flow_out(current)]
        if not nxt:
            break
        current = nxt[0]
    return chain


def lcs_pairs(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    """Index pairs of one longest common subsequence, by exact equality.

    Classic quadratic table; backtracking prefers advancing the first
    sequence on ties so the matching is canonical.
    """
    m, n = len(a), len(b)
    lengths = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m):
        for j in range(n):
            if a[i] == b[j]:
                lengths[i + 1][j + 1] = lengths[i][j] + 1
            else:
                lengths[i + 1][j + 1] = max(lengths[i][j + 1], lengths[i + 1][j])
    pairs: list[tuple[int, int]] = []
    i, j = m, n
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1] and lengths[i][j] == lengths[i - 1][j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif lengths[i - 1][j] >= lengths[i][j - 1]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def _normalize_label(label: str) -> str:
    return label.strip().casefold()


@dataclass(frozen=True)
class BranchPoint:
    """One divergence between the base chain and the executed chain."""

    at_index: int  # last common position in the base chain, -1 at the head
    at_label: str
    base_path: tuple[str, ...]
    executed_path: tuple[str, ...]
    rejoin_index: int  # next common position in the base chain, -1 if never
    rejoin_label: str


@dataclass(frozen=True)
class ChainDiff:
    base_labels: tuple[str, ...]
    executed_labels: tuple[str, ...]
    common: tuple[tuple[int, int], ...]
    branch_points: tuple[BranchPoint, ...]

    def to_json(self) -> dict:
        return {
            "base": list(self.base_labels),
            "executed": list(self.executed_labels),
            "common": [list(p) for p in self.common],
            "branch_points": [
                {
                    "at_index": bp.at_index,
                    "at_label": bp.at_label,
                    "base_path": list(bp.base_path),
                    "executed_path": list(bp.executed_path),
                    "rejoin_index": bp.rejoin_index,
                    "rejoin_label": bp.rejoin_label,
                }
                for bp in self.branch_points
            ],
        }


def diff_workflows(base: Workflow, executed: Workflow) -> ChainDiff:
    """Where the executed walk deviates from the base walk.

    Labels match case-insensitively with surrounding whitespace ignored;
    the reported labels keep the base/executed spelling.
    """
    base_labels = tuple(n.label for n in principal_chain(base))
    exec_labels = tuple(n.label for n in principal_chain(executed))
    pairs = lcs_pairs(
        [_normalize_label(x) for x in base_labels],
        [_normalize_label(x) for x in exec_labels],
    )

    points: list[BranchPoint] = []
    prev_i, prev_j = -1, -1
    for i, j in list(pairs) + [(len(base_labels), len(exec_labels))]:
        base_run = base_labels[prev_i + 1 : i]
        exec_run = exec_labels[prev_j + 1 : j]
        if base_run or exec_run:
            rejoin = i if i < len(base_labels) else -1
            points.append(
                BranchPoint(
                    at_index=prev_i,
                    at_label=base_labels[prev_i] if prev_i >= 0 else "",
                    base_path=base_run,
                    executed_path=exec_run,
                    rejoin_index=rejoin,
                    rejoin_label=base_labels[rejoin] if rejoin >= 0 else "",
                )
            )
        prev_i, prev_j = i, j
    return ChainDiff(base_labels, exec_labels, tuple(pairs), tuple(points))


# -- timeline -----------------------------------------------------------


def timeline_lookup(w: Workflow, t: float) -> list[Node]:
    """Everything on screen at second t, earliest (then id) first."""
    if t < 0 or t > w.duration_s:
        raise OutOfRange(f"{t} outside [0, {w.duration_s}]")
    active = [n for n in w.nodes if n.span.contains(t)]
    active.sort(key=lambda n: (n.span.start_s, n.id))
    return active


# -- DOT export ---------------------------------------------------------

_THING_FILL = "#ffe066"  # yellow, like the sticky notes
_DOING_FILL = "#8ce99a"  # green
_LOOP_FILL = "#faa2c1"  # pink
_SEGMENT_COLOR = "#9775fa"  # purple
_REVISION_COLOR = "#e03131"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(w: Workflow, view: Optional[View] = None) -> str:
    """Graphviz text. With a view, only visible nodes are drawn and
    summary edges appear as bold purple arrows."""
    drawn = set(view.visible) if view is not None else {n.id for n in w.nodes}
    node_by_id = {n.id: n for n in w.nodes}

    out = ["digraph workflow {", "  rankdir=LR;", '  node [style=filled, fontname="Helvetica"];']
    for n in canonical_node_order(w):
        if n.id not in drawn:
            continue
        if isinstance(n, ThingNode):
            shape, fill = "box", _THING_FILL
        elif isinstance(n, DoingNode):
            shape, fill = "ellipse", _DOING_FILL
        else:
            shape, fill = "ellipse", _LOOP_FILL
        out.append(
            f'  "{_dot_escape(n.id)}" [label="{_dot_escape(n.label if not isinstance(n, ReflectiveLoopNode) else n.sensing)}", '
            f'shape={shape}, fillcolor="{fill}"];'
        )

    for seg in w.segments:
        if view is not None and seg.id in view.collapsed:
            continue
        members = [m for m in seg.members if m in drawn]
        if not members:
            continue
        out.append(f'  subgraph "cluster_{_dot_escape(seg.id)}" {{')
        out.append(f'    label="{_dot_escape(seg.title)}";')
        out.append(f'    color="{_SEGMENT_COLOR}";')
        for m in members:
            out.append(f'    "{_dot_escape(m)}";')
        out.append("  }")

    emitted_loops: set[str] = set()
    for e in w.edges:
        if e.from_id not in drawn or e.to_id not in drawn:
            continue
        if e.kind == EdgeKind.FLOW:
            attrs = []
            if e.label:
                attrs.append(f'label="{_dot_escape(e.label)}"')
            suffix = f" [{', '.join(attrs)}]" if attrs else ""
            out.append(f'  "{_dot_escape(e.from_id)}" -> "{_dot_escape(e.to_id)}"{suffix};')
        elif e.kind == EdgeKind.REVISION:
            label = f', label="{_dot_escape(e.label)}"' if e.label else ""
            out.append(
                f'  "{_dot_escape(e.from_id)}" -> "{_dot_escape(e.to_id)}" '
                f'[style=dashed, color="{_REVISION_COLOR}", constraint=false{label}];'
            )
        elif e.kind == EdgeKind.REFLECTIVE:
            # One bidirected edge per loop stands in for the pair.
            loop_id = e.from_id if isinstance(node_by_id.get(e.from_id), ReflectiveLoopNode) else e.to_id
            if loop_id in emitted_loops or not isinstance(
                node_by_id.get(loop_id), ReflectiveLoopNode
            ):
                continue
            emitted_loops.add(loop_id)
            other = e.to_id if loop_id == e.from_id else e.from_id
            out.append(
                f'  "{_dot_escape(loop_id)}" -> "{_dot_escape(other)}" '
                f'[dir=both, color="{_LOOP_FILL}"];'
            )

    if view is not None:
        for s in view.summaries:
            out.append(
                f'  "{_dot_escape(s.from_id)}" -> "{_dot_escape(s.to_id)}" '
                f'[style=bold, color="{_SEGMENT_COLOR}", label="{_dot_escape(s.label)}"];'
            )
    out.append("}")
    return "\n".join(out) + "\n"
