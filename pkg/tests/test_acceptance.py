"""Acceptance properties for the whole toolkit.

Each test covers one release gate and prints a single verdict line to
the real stdout, so a full run reads as a checklist. Failures still
raise, with the same line as the message.
"""

import itertools
import json
import random
import sys
import time

import pytest
from fastapi.testclient import TestClient

from craftflow.ingest import (
    FEEDBACK_HEADER,
    IngestConfig,
    MockProvider,
    ingest_video,
)
from craftflow.errors import ExhaustedRetries
from craftflow.model import (
    GranularityLevel,
    NoteAnnotation,
    ThingNode,
    TimeSpan,
    VideoMeta,
    Workflow,
    annotate,
    pattern_census,
)
from craftflow.notation import cwn, jsonio
from craftflow.service import create_app
from craftflow.storage import WorkflowStore
from craftflow.transforms import (
    collapse_segment,
    diff_workflows,
    expand_segment,
    granularity_view,
    lcs_pairs,
)
from craftflow.validate import ViolationCode, check_temporal_coverage, validate

from checks import assert_view_well_formed, dense_gap_oracle, exhaustive_matched
from conftest import FIXTURE_NAMES, FIXTURES, load_fixture
from genwf import chain_of_labels, random_workflow
from mutate import make_mutant

LEVELS = (GranularityLevel.LOW, GranularityLevel.MEDIUM, GranularityLevel.HIGH)


def _verdict(ok: bool, name: str, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


def test_round_trip_stability():
    rng = random.Random(101)
    started = time.monotonic()
    unstable = 0
    for _ in range(1000):
        w = random_workflow(rng)
        text = cwn.to_cwn(w)
        reparsed = cwn.parse_cwn(text)
        blob = jsonio.dumps(w)
        if (
            reparsed != w
            or cwn.to_cwn(reparsed) != text
            or jsonio.loads(blob) != w
            or jsonio.dumps(jsonio.loads(blob)) != blob
        ):
            unstable += 1
    elapsed = time.monotonic() - started
    _verdict(
        unstable == 0 and elapsed < 30.0,
        "round-trip stability",
        f"1000 workflows through both notations, {unstable} unstable, "
        f"{elapsed:.1f}s",
    )


def test_constructive_closure():
    rng = random.Random(202)
    dirty = 0
    for _ in range(500):
        if validate(random_workflow(rng)):
            dirty += 1
    _verdict(
        dirty == 0,
        "constructive closure",
        f"500 op-built workflows, {dirty} with violations",
    )


def test_seeded_mutants():
    rng = random.Random(303)
    codes = list(ViolationCode)
    missed = []
    for i in range(200):
        code = codes[i % len(codes)]
        mutant = make_mutant(rng, code)
        found = {v.code for v in validate(mutant)}
        if code not in found:
            missed.append((i, code.value))
    _verdict(
        not missed,
        "seeded mutants",
        f"200 single-violation mutants, {len(missed)} undetected",
    )


def test_temporal_coverage_oracle():
    rng = random.Random(404)
    step = 0.01
    mismatched = 0
    for _ in range(500):
        duration = rng.choice([20.0, 30.0, 60.0])
        grid = int(duration * 100)
        spans = []
        for _ in range(rng.randrange(1, 9)):
            a = rng.randrange(0, grid) / 100.0
            b = min(duration, a + rng.randrange(0, grid // 2) / 100.0)
            spans.append((a, b))
        w = Workflow(
            id="w1",
            video=VideoMeta("video/x.mp4", duration),
            nodes=[
                ThingNode(f"x{i}", "x", TimeSpan(a, b))
                for i, (a, b) in enumerate(spans)
            ],
        )
        got = check_temporal_coverage(w, 1.0)
        want = dense_gap_oracle(spans, duration, 1.0, step)
        if len(got) != len(want) or any(
            abs(ga - wa) > step + 1e-6 or abs(gb - wb) > step + 1e-6
            for (ga, gb), (wa, wb) in zip(got, want)
        ):
            mismatched += 1
    _verdict(
        mismatched == 0,
        "temporal coverage oracle",
        f"500 span sets vs 10ms dense sampling, {mismatched} mismatched",
    )


def test_granularity_views():
    rng = random.Random(505)
    problems = []
    workflows = [(name, load_fixture(name)) for name in FIXTURE_NAMES]
    workflows += [(f"random-{i}", random_workflow(rng)) for i in range(500)]
    for name, w in workflows:
        views = [granularity_view(w, level) for level in LEVELS]
        for level, v in zip(LEVELS, views):
            try:
                assert_view_well_formed(w, v)
            except AssertionError as exc:
                problems.append(f"{name}@{level.value}: {exc}")
        for smaller, larger in zip(views, views[1:]):
            if not set(smaller.visible) <= set(larger.visible):
                problems.append(f"{name}: fidelity not monotone")

    for name in FIXTURE_NAMES:
        w = load_fixture(name)
        for level in LEVELS:
            base = granularity_view(w, level)
            for seg in w.segments:
                if expand_segment(collapse_segment(base, seg.id), seg.id) != base:
                    problems.append(
                        f"{name}@{level.value}: expand(collapse({seg.id})) drifted"
                    )
    _verdict(
        not problems,
        "granularity views",
        f"{len(workflows)} workflows x 3 levels"
        + (f", first problem: {problems[0]}" if problems else ", all well formed"),
    )


def test_diff_alignment_oracle():
    started = time.monotonic()
    alphabet = "abc"
    words = {
        n: ["".join(p) for p in itertools.product(alphabet, repeat=n)]
        for n in range(9)
    }
    mismatched = 0
    pairs = 0
    # Every pair whose combined length fits in 8 symbols, exhaustively.
    for la in range(9):
        for lb in range(9 - la):
            for a in words[la]:
                for b in words[lb]:
                    pairs += 1
                    if len(lcs_pairs(list(a), list(b))) != exhaustive_matched(a, b):
                        mismatched += 1
    # Longer pairs up to 8 symbols a side, sampled.
    rng = random.Random(606)
    for _ in range(2000):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randrange(9)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randrange(9)))
        pairs += 1
        if len(lcs_pairs(list(a), list(b))) != exhaustive_matched(a, b):
            mismatched += 1
    # The same alignment through the public diff.
    for _ in range(50):
        base = [rng.choice(alphabet) for _ in range(rng.randrange(1, 8, 2))]
        executed = [rng.choice(alphabet) for _ in range(rng.randrange(1, 8, 2))]
        d = diff_workflows(chain_of_labels(base), chain_of_labels(executed))
        pairs += 1
        if len(d.common) != exhaustive_matched(base, executed):
            mismatched += 1
    elapsed = time.monotonic() - started
    _verdict(
        mismatched == 0 and elapsed < 60.0,
        "diff alignment oracle",
        f"{pairs} chain pairs vs exhaustive search, {mismatched} mismatched, "
        f"{elapsed:.1f}s",
    )


def test_reference_fixtures():
    problems = []
    d = diff_workflows(
        load_fixture("knitting-base"), load_fixture("knitting-executed")
    )
    if len(d.branch_points) != 1:
        problems.append(f"knitting: {len(d.branch_points)} branch records")
    else:
        bp = d.branch_points[0]
        if tuple(s.casefold() for s in bp.base_path) != ("knit every other needle",):
            problems.append(f"knitting base path {bp.base_path!r}")
        if tuple(s.casefold() for s in bp.executed_path) != ("knit every needle",):
            problems.append(f"knitting executed path {bp.executed_path!r}")

    for name in ("spoon", "crane", "sketch"):
        w = load_fixture(name)
        violations = validate(w)
        if violations:
            problems.append(f"{name}: {len(violations)} violations")
        census = pattern_census(w)
        absent = sorted(k for k, v in census.items() if v < 1)
        if absent:
            problems.append(f"{name}: no {', '.join(absent)}")
    _verdict(
        not problems,
        "reference fixtures",
        "; ".join(problems) if problems else
        "knitting deviation isolated, three craft fixtures clean with all "
        "seven patterns",
    )


class _PromptLog:
    def __init__(self, inner):
        self.inner = inner
        self.name = inner.name
        self.capabilities = inner.capabilities
        self.prompts = []

    def analyze(self, prompt, video_uri, attempt):
        self.prompts.append(prompt)
        return self.inner.analyze(prompt, video_uri, attempt)


def test_ingest_retry_loop():
    problems = []
    provider = _PromptLog(MockProvider(FIXTURES / "ingest"))
    w, report = ingest_video(provider, VideoMeta("file:two-attempt.mp4", 420))
    if report.outcome != "clean" or len(report.attempts) != 2:
        problems.append(
            f"two-attempt: outcome {report.outcome}, "
            f"{len(report.attempts)} attempts"
        )
    if len(provider.prompts) < 2 or FEEDBACK_HEADER not in provider.prompts[1]:
        problems.append("two-attempt: no violation feedback in the retry prompt")
    if validate(w):
        problems.append("two-attempt: accepted workflow still has violations")

    transcripts = []
    for _ in range(2):
        with pytest.raises(ExhaustedRetries) as info:
            ingest_video(
                MockProvider(FIXTURES / "ingest"),
                VideoMeta("file:always-bad.mp4", 420),
                IngestConfig(max_retries=1),
            )
        transcripts.append(json.dumps(info.value.report.to_json(), sort_keys=True))
    if transcripts[0] != transcripts[1]:
        problems.append("always-bad: exhaustion transcript not deterministic")
    if json.loads(transcripts[0])["outcome"] != "failed":
        problems.append("always-bad: report outcome is not failed")
    _verdict(
        not problems,
        "ingest retry loop",
        "; ".join(problems) if problems else
        "feedback retry converges in 2 attempts, exhaustion deterministic",
    )


def test_service_lifecycle(tmp_path):
    problems = []
    client = TestClient(create_app(WorkflowStore(tmp_path / "data")))
    base = chain_of_labels(["materials", "work the piece", "result"])
    second = annotate(base, "d1", NoteAnnotation("n1", "d1", "mind the grain"))
    third = annotate(
        second, "t1", NoteAnnotation("n2", "t1", "compare with the sketch")
    )
    docs = [jsonio.to_dict(w) for w in (base, second, third)]

    created = client.post("/workflows", json=docs[0])
    if created.status_code != 201:
        problems.append(f"create returned {created.status_code}")
    wf_id = created.json()["id"]
    token = created.json()["edit_token"]

    refused = client.put(
        f"/workflows/{wf_id}", json=docs[1], headers={"X-Edit-Token": "guess"}
    )
    if refused.status_code != 403:
        problems.append(f"bad token returned {refused.status_code}")
    if client.get(f"/workflows/{wf_id}").json()["rev"] != 1:
        problems.append("refused write still changed the revision")

    for doc in docs[1:]:
        r = client.put(
            f"/workflows/{wf_id}", json=doc, headers={"X-Edit-Token": token}
        )
        if r.status_code != 200:
            problems.append(f"update returned {r.status_code}")
    for i, doc in enumerate(docs, start=1):
        got = client.get(f"/workflows/{wf_id}", params={"rev": i}).json()
        if got != dict(doc, id=wf_id, rev=i):
            problems.append(f"replay of rev {i} does not match what was sent")

    restore = client.get(f"/workflows/{wf_id}/restore")
    if restore.status_code != 200:
        problems.append(f"restore returned {restore.status_code}")
    if token in restore.text or "edit_token" in restore.text:
        problems.append("restore response leaks edit credentials")
    for method in ("put", "post", "delete", "patch"):
        r = getattr(client, method)(f"/workflows/{wf_id}/restore")
        if r.status_code != 405:
            problems.append(f"restore {method} returned {r.status_code}")
    _verdict(
        not problems,
        "service lifecycle",
        "; ".join(problems) if problems else
        "token enforced, three revisions replay exactly, restore is "
        "credential-free and read-only",
    )
