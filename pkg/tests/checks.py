"""Independent oracles the tests compare the library against.

Each is deliberately written the dumb way: dense sampling instead of
interval sweeps, exhaustive subsequence search instead of DP, matrix
closure instead of BFS. Slow and obviously correct.
"""

from __future__ import annotations

import itertools

from craftflow.model import ReflectiveLoopNode, EdgeKind, Workflow
from craftflow.transforms import View


def dense_gap_oracle(spans, duration: float, max_gap_s: float, step: float = 0.01):
    """Gap list recovered by sampling every ``step`` seconds.

    Exact when all span endpoints sit on the sampling grid; ``j / inv``
    instead of ``j * step`` keeps the samples on that grid bit-for-bit.
    """
    inv = round(1 / step)
    n = int(round(duration * inv))
    uncovered = [
        not any(a <= j / inv <= b for a, b in spans) for j in range(n + 1)
    ]
    gaps = []
    j = 0
    while j <= n:
        if uncovered[j]:
            start = j
            while j <= n and uncovered[j]:
                j += 1
            a = max((start - 1) / inv, 0.0)
            b = min(j / inv, duration)
            if b - a > max_gap_s + 1e-9:
                gaps.append((a, b))
        else:
            j += 1
    return gaps


def closure_reachability_oracle(w: Workflow):
    """(weakly connected, unreachable ids) by brute-force closure."""
    ids = [n.id for n in w.nodes]
    pos = {nid: i for i, nid in enumerate(ids)}
    n = len(ids)

    undirected = [[False] * n for _ in range(n)]
    flow = [[False] * n for _ in range(n)]
    for e in w.edges:
        if e.from_id in pos and e.to_id in pos:
            i, j = pos[e.from_id], pos[e.to_id]
            undirected[i][j] = undirected[j][i] = True
            if e.kind == EdgeKind.FLOW:
                flow[i][j] = True
    for m in (undirected, flow):
        for i in range(n):
            m[i][i] = True
        for k in range(n):
            for i in range(n):
                if m[i][k]:
                    row_k = m[k]
                    row_i = m[i]
                    for j in range(n):
                        if row_k[j]:
                            row_i[j] = True

    weakly = all(undirected[0][j] for j in range(n)) if n else True

    incoming = set()
    for e in w.edges:
        if e.kind == EdgeKind.FLOW:
            incoming.add(e.to_id)
    # Reachability is anchored at the earliest source thing; any other
    # source is itself out of reach.
    sources = sorted(
        (t.span.start_s, t.id) for t in w.things() if t.id not in incoming
    )
    reached = set()
    if sources:
        anchor = sources[0][1]
        reached = {ids[j] for j in range(n) if flow[pos[anchor]][j]}
    unreachable = []
    for node in w.nodes:
        if isinstance(node, ReflectiveLoopNode):
            if node.attached_thing not in reached:
                unreachable.append(node.id)
        elif node.id not in reached:
            unreachable.append(node.id)
    return weakly, sorted(unreachable)


def exhaustive_matched(a, b) -> int:
    """Longest common subsequence length by trying every subsequence of
    the shorter side."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    best = 0
    for r in range(len(short), 0, -1):
        for combo in itertools.combinations(short, r):
            it = iter(long_)
            if all(sym in it for sym in combo):
                return r
    return best


def linear_scan_lookup(w: Workflow, t: float):
    """Node ids whose closed span contains t, in document order."""
    return [
        n.id for n in w.nodes if n.span.start_s <= t <= n.span.end_s
    ]


def assert_view_well_formed(w: Workflow, v: View) -> None:
    """Structural sanity for any projection of ``w``."""
    node_ids = {n.id for n in w.nodes}
    node_by_id = {n.id: n for n in w.nodes}
    visible = set(v.visible)
    assert visible <= node_ids, "view shows unknown nodes"
    assert len(v.visible) == len(visible), "visible list repeats"

    sources = {t.id for t in w.source_things()}
    sinks = {t.id for t in w.sink_things()}
    assert sources <= visible, "a source thing went invisible"
    assert sinks <= visible, "a sink thing went invisible"

    from craftflow.model import ThingNode

    for s in v.summaries:
        assert isinstance(node_by_id[s.from_id], ThingNode), (
            f"summary {s.id} leaves a non-thing"
        )
        assert isinstance(node_by_id[s.to_id], ThingNode), (
            f"summary {s.id} arrives at a non-thing"
        )

    # Flow edges between visible nodes plus summary edges must keep the
    # view in one piece (loops hang off their attached thing).
    neighbors = {nid: set() for nid in visible}
    for e in w.flow_edges():
        if e.from_id in visible and e.to_id in visible:
            neighbors[e.from_id].add(e.to_id)
            neighbors[e.to_id].add(e.from_id)
    for s in v.summaries:
        neighbors[s.from_id].add(s.to_id)
        neighbors[s.to_id].add(s.from_id)
    for nid in visible:
        node = node_by_id[nid]
        if isinstance(node, ReflectiveLoopNode):
            if node.attached_thing in visible:
                neighbors[nid].add(node.attached_thing)
                neighbors[node.attached_thing].add(nid)
    if visible:
        first = next(iter(sorted(visible)))
        seen_c = {first}
        stack = [first]
        while stack:
            for nxt in neighbors[stack.pop()]:
                if nxt not in seen_c:
                    seen_c.add(nxt)
                    stack.append(nxt)
        assert seen_c == visible, (
            f"view falls apart: {sorted(visible - seen_c)} unreachable"
        )

    hidden_flow = {
        n.id
        for n in w.nodes
        if n.id not in visible and not isinstance(n, ReflectiveLoopNode)
    }
    seen = set()
    sum_ids = set()
    components = set()
    for s in v.summaries:
        assert s.id not in sum_ids, "summary ids repeat"
        sum_ids.add(s.id)
        assert s.from_id in visible and s.to_id in visible, (
            "summary endpoint is hidden"
        )
        assert s.count == len(s.component)
        if s.component in components:
            continue  # a second attachment of the same hidden run
        components.add(s.component)
        for nid in s.component:
            assert nid in hidden_flow, f"summary swallows visible node {nid}"
            assert nid not in seen, f"{nid} summarized twice"
            seen.add(nid)
    # Hidden loops vanish silently; everything else must be accounted for.
    assert seen == hidden_flow, (
        f"hidden nodes missing from summaries: {hidden_flow - seen}"
    )
