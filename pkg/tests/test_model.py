"""Core graph model: the step algebra and its guard rails."""

import pytest

from craftflow.errors import (
    DuplicateId,
    NonConvexSegment,
    RevisionForward,
    SegmentOverlap,
    SpanOutOfRange,
    UnknownNode,
    UnknownTarget,
)
from craftflow.model import (
    DoingNode,
    EdgeKind,
    ExternalLink,
    NoteAnnotation,
    ReflectiveLoopNode,
    ThingNode,
    TimeSpan,
    VideoMeta,
    annotate,
    attach_reflective,
    canonical_node_order,
    compose_step,
    declare_branch,
    declare_segment,
    mark_revision,
    new_workflow,
    pattern_census,
)


def _video(duration=600.0):
    return VideoMeta("video/test.mp4", duration)


def _thing(nid, a, b, label="thing"):
    return ThingNode(nid, label, TimeSpan(a, b))


def _doing(nid, a, b, label="doing"):
    return DoingNode(nid, label, TimeSpan(a, b))


def _chain(k, duration=600.0):
    """t0 -> d1 -> t1 -> ... -> tk with evenly tiled spans."""
    n = 2 * k + 1
    cuts = [i * duration / n for i in range(n + 1)]
    w = new_workflow(_video(duration), _thing("t0", cuts[0], cuts[1]))
    for i in range(1, k + 1):
        w = compose_step(
            w,
            f"t{i-1}",
            _doing(f"d{i}", cuts[2 * i - 1], cuts[2 * i]),
            _thing(f"t{i}", cuts[2 * i], cuts[2 * i + 1]),
        )
    return w


class TestComposeStep:
    def test_yarn_plus_chain_four(self):
        w = new_workflow(_video(60), _thing("t1", 0, 10, "yarn"))
        w = compose_step(
            w, "t1", _doing("d1", 10, 40, "chain 4"), _thing("t2", 40, 60, "chain")
        )
        flows = {(e.from_id, e.to_id) for e in w.flow_edges()}
        assert flows == {("t1", "d1"), ("d1", "t2")}
        assert [t.id for t in w.source_things()] == ["t1"]
        assert [t.id for t in w.sink_things()] == ["t2"]

    def test_five_sequential_steps(self):
        w = _chain(5)
        assert len(w.nodes) == 11
        assert len(w.flow_edges()) == 10
        # Hand-built adjacency for the same chain.
        expected = {}
        for i in range(1, 6):
            expected[f"t{i-1}"] = [f"d{i}"]
            expected[f"d{i}"] = [f"t{i}"]
        expected["t5"] = []
        actual = {n.id: [e.to_id for e in w.flow_out(n.id)] for n in w.nodes}
        assert actual == expected

    def test_rejects_unknown_thing(self):
        w = _chain(1)
        with pytest.raises(UnknownNode):
            compose_step(w, "d1", _doing("dx", 0, 1), _thing("tx", 1, 2))

    def test_rejects_duplicate_ids(self):
        w = _chain(1)
        with pytest.raises(DuplicateId):
            compose_step(w, "t1", _doing("d1", 0, 1), _thing("tx", 1, 2))

    def test_rejects_span_past_video_end(self):
        w = _chain(1, duration=60)
        with pytest.raises(SpanOutOfRange):
            compose_step(w, "t1", _doing("dx", 50, 70), _thing("tx", 70, 80))


class TestBranches:
    def test_knitting_deviation_forks_the_thing(self):
        w = _chain(2)
        w = declare_branch(
            w,
            "t1",
            [
                [_doing("p1", 250, 300, "knit every other needle")],
                [_doing("p2", 250, 300, "knit every needle")],
            ],
            rejoin="t2",
        )
        assert len(w.flow_out("t1")) == 3  # d2 plus both alternatives
        assert pattern_census(w)["branches"] == 1

    def test_minimal_diamond(self):
        w = new_workflow(_video(100), _thing("t", 0, 10))
        w = declare_branch(
            w,
            "t",
            [[_doing("da", 10, 50), _thing("ta", 50, 60)],
             [_doing("db", 10, 50), _thing("tb", 50, 60)]],
        )
        assert {e.to_id for e in w.flow_out("t")} == {"da", "db"}
        assert {t.id for t in w.sink_things()} == {"ta", "tb"}

    def test_three_paths_all_reach_the_sink(self):
        w = new_workflow(_video(100), _thing("t", 0, 10))
        paths = [
            [_doing("a1", 10, 90)],
            [_doing("b1", 10, 40), _thing("b2", 40, 50), _doing("b3", 50, 90)],
            [_doing("c1", 10, 30), _thing("c2", 30, 40), _doing("c3", 40, 60),
             _thing("c4", 60, 70), _doing("c5", 70, 90)],
        ]
        w = declare_branch(w, "t", paths, rejoin=_thing("end", 90, 100))

        found = []

        def walk(node, trail):
            trail = trail + [node]
            outs = w.flow_out(node)
            if not outs:
                found.append(trail)
            for e in outs:
                walk(e.to_id, trail)

        walk("t", [])
        assert len(found) == 3
        assert all(trail[-1] == "end" for trail in found)

    def test_path_names_label_first_edges(self):
        w = _chain(1)
        w = declare_branch(
            w,
            "t0",
            [[_doing("pa", 0, 5)], [_doing("pb", 0, 5)]],
            rejoin="t1",
            path_names=["plan A", "plan B"],
        )
        labels = {e.to_id: e.label for e in w.flow_out("t0")}
        assert labels["pa"] == "plan A" and labels["pb"] == "plan B"

    def test_single_path_rejected(self):
        w = _chain(1)
        with pytest.raises(Exception):
            declare_branch(w, "t0", [[_doing("pa", 0, 5)]], rejoin="t1")

    def test_rejoin_into_ancestor_rejected(self):
        from craftflow.errors import CycleIntroduced

        w = _chain(2)
        with pytest.raises(CycleIntroduced):
            declare_branch(
                w, "t1",
                [[_doing("pa", 0, 5)], [_doing("pb", 0, 5)]],
                rejoin="t0",
            )


class TestReflectiveLoops:
    def test_attach_makes_bidirected_pair(self):
        w = _chain(1)
        loop = ReflectiveLoopNode(
            "r1", "t1", "check tension", TimeSpan(400, 420),
            adjustment="turn the tension dial",
        )
        w = attach_reflective(w, "t1", loop)
        refl = w.edges_of_kind(EdgeKind.REFLECTIVE)
        assert {(e.from_id, e.to_id) for e in refl} == {("r1", "t1"), ("t1", "r1")}

    def test_sink_stays_a_sink(self):
        w = _chain(1)
        before = [t.id for t in w.sink_things()]
        w = attach_reflective(
            w, "t1", ReflectiveLoopNode("r1", "t1", "look", TimeSpan(0, 1))
        )
        assert [t.id for t in w.sink_things()] == before
        assert w.flow_out("t1") == []

    def test_three_loops_six_edges(self):
        w = _chain(1)
        for i in range(3):
            w = attach_reflective(
                w, "t0",
                ReflectiveLoopNode(f"r{i}", "t0", f"look {i}", TimeSpan(0, 5)),
            )
        refl = w.edges_of_kind(EdgeKind.REFLECTIVE)
        assert len(refl) == 6
        by_node = {}
        for e in refl:
            by_node[e.from_id] = by_node.get(e.from_id, 0) + 1
            by_node[e.to_id] = by_node.get(e.to_id, 0) + 1
        assert by_node["t0"] == 6
        assert by_node["r0"] == by_node["r1"] == by_node["r2"] == 2

    def test_wrong_declared_attachment_rejected(self):
        w = _chain(1)
        loop = ReflectiveLoopNode("r1", "t0", "look", TimeSpan(0, 1))
        with pytest.raises(Exception):
            attach_reflective(w, "t1", loop)


class TestRevisions:
    def test_reason_carried_on_the_edge(self):
        w = _chain(3)
        w = mark_revision(w, "t3", "t1", "wrong stitch count")
        rev = w.edges_of_kind(EdgeKind.REVISION)
        assert len(rev) == 1
        assert rev[0].from_id == "t3" and rev[0].to_id == "t1"
        assert rev[0].label == "wrong stitch count"

    def test_equal_starts_rejected(self):
        w = new_workflow(_video(100), _thing("a", 0, 10))
        w = declare_branch(
            w, "a",
            [[_doing("da", 10, 50), _thing("ta", 50, 60)],
             [_doing("db", 10, 50), _thing("tb", 50, 60)]],
        )
        with pytest.raises(RevisionForward):
            mark_revision(w, "ta", "tb", "sideways")

    def test_two_revisions_point_backward_in_time(self):
        w = _chain(5)  # 11 nodes
        w = mark_revision(w, "t5", "t2", "")
        w = mark_revision(w, "t3", "t0", "")
        starts = {n.id: n.span.start_s for n in w.nodes}
        for e in w.edges_of_kind(EdgeKind.REVISION):
            assert starts[e.to_id] < starts[e.from_id]


class TestSegments:
    def test_stored_with_title(self):
        w = _chain(3)
        w = declare_segment(w, "Rough shaping", ["t0", "d1", "t1", "d2"])
        assert [s.title for s in w.segments] == ["Rough shaping"]
        assert w.segments[0].members == ("t0", "d1", "t1", "d2")

    def test_single_thing_is_convex(self):
        w = _chain(2)
        w = declare_segment(w, "just one", ["t1"])
        assert len(w.segments) == 1

    def test_skipping_interior_doing_rejected(self):
        w = _chain(2)

        # Every t0->t1 path goes through d1, so {t0, t1} cannot be convex.
        def paths_between(a, b):
            out = []

            def walk(node, trail):
                if node == b:
                    out.append(trail)
                    return
                for e in w.flow_out(node):
                    walk(e.to_id, trail + [e.to_id])

            walk(a, [a])
            return out

        assert all("d1" in p for p in paths_between("t0", "t1"))
        with pytest.raises(NonConvexSegment):
            declare_segment(w, "patchy", ["t0", "t1"])

    def test_overlap_rejected(self):
        w = _chain(2)
        w = declare_segment(w, "one", ["t0", "d1"])
        with pytest.raises(SegmentOverlap):
            declare_segment(w, "two", ["d1", "t1"])

    def test_loop_member_rejected(self):
        w = _chain(1)
        w = attach_reflective(
            w, "t1", ReflectiveLoopNode("r1", "t1", "look", TimeSpan(0, 1))
        )
        with pytest.raises(Exception):
            declare_segment(w, "bad", ["r1"])


class TestAnnotations:
    def test_note_on_node_and_edge(self):
        w = _chain(1)
        w = annotate(w, "d1", NoteAnnotation("n1", "d1", "keep it loose"))
        w = annotate(w, "f:t0:d1", NoteAnnotation("n2", "f:t0:d1", "smooth handoff"))
        assert {n.id for n in w.notes} == {"n1", "n2"}

    def test_note_unknown_target_rejected(self):
        w = _chain(1)
        with pytest.raises(UnknownTarget):
            annotate(w, "nope", NoteAnnotation("n1", "nope", "text"))

    def test_link_requires_node_target(self):
        w = _chain(1)
        with pytest.raises(UnknownTarget):
            annotate(
                w, "f:t0:d1",
                ExternalLink("l1", "f:t0:d1", "https://example.com/a"),
            )

    def test_link_url_validated(self):
        with pytest.raises(ValueError):
            ExternalLink("l1", "d1", "not a url")


class TestOrderingAndCensus:
    def test_canonical_order_is_topo_then_start(self):
        w = _chain(3)
        ids = [n.id for n in canonical_node_order(w)]
        assert ids == ["t0", "d1", "t1", "d2", "t2", "d3", "t3"]

    def test_loops_follow_their_thing(self):
        w = _chain(2)
        w = attach_reflective(
            w, "t1", ReflectiveLoopNode("r1", "t1", "look", TimeSpan(0, 1))
        )
        ids = [n.id for n in canonical_node_order(w)]
        assert ids.index("r1") == ids.index("t1") + 1

    def test_census_counts_all_seven(self, spoon):
        census = pattern_census(spoon)
        assert set(census) == {
            "granularity_shifts", "reflective_loops", "notes_to_self",
            "external_links", "segments", "branches", "revision_loops",
        }
        assert all(census[k] >= 1 for k in census)

    def test_quantization_to_milliseconds(self):
        span = TimeSpan(0.12345, 0.9999)
        assert span.start_s == 0.123
        assert span.end_s == 1.0
