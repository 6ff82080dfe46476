"""Single-violation mutants for the validator tests.

Each mutation takes a clean generated workflow and plants exactly one
violation. Two codes drag an unavoidable companion along: a flow cycle
always bends a doing's degree, and an island thing is also a second
source. Those companions are declared, everything else is forbidden.
"""

from __future__ import annotations

import random
from dataclasses import replace

from craftflow.model import (
    DoingNode,
    Edge,
    EdgeKind,
    ReflectiveLoopNode,
    Segment,
    ThingNode,
    TimeSpan,
    Workflow,
    attach_reflective,
    flow_edge_id,
    revision_edge_id,
)
from craftflow.validate import ViolationCode

from genwf import random_workflow

ALLOWED_EXTRA = {
    ViolationCode.FLOW_CYCLE: {ViolationCode.SEQUENCE_VIOLATION},
    ViolationCode.DISCONNECTED: {ViolationCode.MULTIPLE_SOURCES},
}


def _swap_node(w: Workflow, node) -> Workflow:
    nodes = [node if n.id == node.id else n for n in w.nodes]
    return replace(w, nodes=nodes)


def _base(rng: random.Random, min_steps: int = 2, even: bool = False) -> Workflow:
    while True:
        w = random_workflow(rng, with_patterns=False, even_tiling=even)
        if len([n for n in w.nodes if isinstance(n, ThingNode)]) > min_steps:
            return w


def make_mutant(rng: random.Random, code: ViolationCode) -> Workflow:
    if code == ViolationCode.TIMESTAMP_OUT_OF_RANGE:
        w = _base(rng)
        victim = rng.choice(w.nodes)
        over = TimeSpan(victim.span.start_s, w.duration_s + rng.randrange(1, 20))
        return _swap_node(w, replace(victim, span=over))

    if code == ViolationCode.TEMPORAL_GAP:
        w = _base(rng, even=True)  # even cells are comfortably > max_gap
        victim = rng.choice(w.nodes)
        return _swap_node(
            w, replace(victim, span=TimeSpan(victim.span.start_s, victim.span.start_s))
        )

    if code == ViolationCode.SEQUENCE_VIOLATION:
        w = _base(rng)
        things = sorted(
            (n for n in w.nodes if isinstance(n, ThingNode)), key=lambda n: n.id
        )
        a, b = rng.sample(range(len(things)), 2)
        a, b = min(a, b), max(a, b)
        bad = Edge(
            flow_edge_id(things[a].id, things[b].id),
            EdgeKind.FLOW,
            things[a].id,
            things[b].id,
        )
        return replace(w, edges=w.edges + [bad])

    if code == ViolationCode.DISCONNECTED:
        w = _base(rng)
        island = ThingNode("iso1", "stray offcut", TimeSpan(0, w.duration_s))
        return replace(w, nodes=w.nodes + [island])

    if code == ViolationCode.MULTIPLE_SOURCES:
        w = _base(rng)
        t1 = w.node("t1")
        head = ThingNode("x0", "second start", w.node("t0").span)
        join = DoingNode("xd", "merge in", t1.span)
        return replace(
            w,
            nodes=w.nodes + [head, join],
            edges=w.edges
            + [
                Edge(flow_edge_id("x0", "xd"), EdgeKind.FLOW, "x0", "xd"),
                Edge(flow_edge_id("xd", "t1"), EdgeKind.FLOW, "xd", "t1"),
            ],
        )

    if code == ViolationCode.FLOW_CYCLE:
        w = _base(rng)
        back = Edge(flow_edge_id("t1", "d1"), EdgeKind.FLOW, "t1", "d1")
        return replace(w, edges=w.edges + [back])

    if code == ViolationCode.DANGLING_REFLECTIVE:
        w = _base(rng)
        things = [n for n in w.nodes if isinstance(n, ThingNode)]
        tid = rng.choice(things).id
        span = w.node(tid).span
        w = attach_reflective(
            w, tid, ReflectiveLoopNode("rx", tid, "check it", span)
        )
        loop = w.node("rx")
        return _swap_node(w, replace(loop, attached_thing="ghost"))

    if code == ViolationCode.NON_CONVEX_SEGMENT:
        w = _base(rng)
        bad = Segment("sx", "patchy", ("t0", "t1"))  # skips d1 on the path
        return replace(w, segments=[bad])

    if code == ViolationCode.REVISION_FORWARD:
        w = _base(rng)
        fwd = Edge(
            revision_edge_id("t0", "t1"), EdgeKind.REVISION, "t0", "t1", "oops"
        )
        return replace(w, edges=w.edges + [fwd])

    raise ValueError(f"no mutation for {code}")
