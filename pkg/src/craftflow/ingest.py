"""Turning a narrated video into a candidate workflow via a pluggable
model provider, with a validate-and-retry loop.

A provider is any object with a ``name`` string, a ``capabilities``
dict (``max_video_s``) and an ``analyze(prompt, video_uri, attempt)``
method returning raw text. The shipped mock is a pure function of
(video key, attempt index), reading ``<fixtures>/<video-key>/
attempt-<n>.json`` and clamping the attempt to the last file, so
pipeline tests are byte-reproducible.

Retries prefer model self-correction: violation feedback is appended
to the prompt and one retry consumes one attempt. Only after retries
are exhausted does conservative repair run. Reports carry sha256
digests of the raw outputs, never the outputs themselves.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field, replace
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Optional

import requests

from .errors import ExhaustedRetries, ProviderUnavailable, SearchUnavailable
from .model import (
    DoingNode,
    ExternalLink,
    LinkSource,
    ThingNode,
    VideoMeta,
    Workflow,
    canonical_node_order,
)
from .notation import jsonio
from .validate import RepairAction, ValidationConfig, Violation, repair, validate

log = logging.getLogger(__name__)

FEEDBACK_HEADER = "## Problems with the previous attempt"

PATTERN_NAMES = (
    "Granularity Shifts",
    "Reflective Loops",
    "Note-to-Self",
    "External Links",
    "Segments",
    "Branches",
    "Revision Loops",
)

_SCHEMA_SKETCH = """\
{
  "version": 1,
  "video": {"uri": "...", "duration_s": 0.0, "title": "..."},
  "nodes": [
    {"id": "t1", "kind": "thing", "span": [0.0, 12.5], "label": "...",
     "detail": "low|medium|high", "stuff": ["..."], "description": "..."},
    {"id": "d1", "kind": "doing", "span": [12.5, 40.0], "label": "...",
     "detail": "medium", "tools": ["..."]},
    {"id": "r1", "kind": "reflective", "span": [40.0, 45.0],
     "attached_thing": "t2", "sensing": "...", "adjustment": "..."}
  ],
  "edges": [
    {"id": "f:t1:d1", "kind": "flow", "from": "t1", "to": "d1"},
    {"id": "rev:t3:t1", "kind": "revision", "from": "t3", "to": "t1",
     "label": "why the maker went back"}
  ],
  "segments": [{"id": "s1", "title": "...", "members": ["t1", "d1"]}],
  "notes": [{"id": "n1", "target": "t1", "text": "..."}],
  "links": [{"id": "l1", "target": "d1", "url": "https://...",
             "title": "...", "source": "detected"}]
}"""


@dataclass(frozen=True)
class IngestConfig:
    max_retries: int = 3
    deadline_s: float = 60.0
    validation: ValidationConfig = field(default_factory=ValidationConfig)

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")


@dataclass(frozen=True)
class AttemptRecord:
    attempt: int
    output_sha256: str
    schema_error: Optional[str]
    violations: tuple[Violation, ...]

    def to_json(self) -> dict:
        return {
            "attempt": self.attempt,
            "output_sha256": self.output_sha256,
            "schema_error": self.schema_error,
            "violations": [v.to_json() for v in self.violations],
        }


@dataclass(frozen=True)
class IngestReport:
    attempts: tuple[AttemptRecord, ...]
    outcome: str  # clean | repaired | failed
    repairs_applied: tuple[RepairAction, ...] = ()
    residual: tuple[Violation, ...] = ()

    def to_json(self) -> dict:
        return {
            "attempts": [a.to_json() for a in self.attempts],
            "outcome": self.outcome,
            "repairs_applied": [a.to_json() for a in self.repairs_applied],
            "residual": [v.to_json() for v in self.residual],
        }


def default_grammar() -> str:
    return (
        importlib_resources.files("craftflow.resources")
        .joinpath("grammar.md")
        .read_text(encoding="utf-8")
    )


def build_prompt(grammar_definition: str, video: VideoMeta) -> str:
    """Deterministic instruction text for the provider.

    The prompt identifies the video by digest, not by its uri, so a
    remote provider learns nothing about where the footage lives.
    """
    if not grammar_definition.strip():
        raise ValueError("grammar definition text is empty")
    digest = hashlib.sha256(video.uri.encode("utf-8")).hexdigest()[:16]
    title = video.title or "untitled"
    return (
        "Document the craft process in the video as a workflow graph.\n"
        "\n"
        "## Vocabulary and patterns\n"
        f"{grammar_definition.rstrip()}\n"
        "\n"
        "## Output: one JSON document, this shape\n"
        f"{_SCHEMA_SKETCH}\n"
        "\n"
        "## Hard constraints\n"
        "- The graph must be fully connected, meaning there is a path "
        "linking all the nodes.\n"
        "- It must also be complete, with node timestamps spanning the "
        "full video duration.\n"
        "\n"
        "## Video\n"
        f"- reference digest: sha256:{digest}\n"
        f"- duration: {video.duration_s:g} seconds\n"
        f"- title: {title}\n"
    )


def _feedback_block(items: list[dict]) -> str:
    return (
        f"\n{FEEDBACK_HEADER}\n"
        "Fix every entry below and return the full corrected JSON.\n"
        f"{json.dumps(items, indent=2)}\n"
    )


def ingest_video(
    provider, video: VideoMeta, cfg: Optional[IngestConfig] = None
) -> tuple[Workflow, IngestReport]:
    """Run the provider loop until the graph validates cleanly.

    Raises ExhaustedRetries when retries plus repair still leave
    violations, and passes the SchemaError through when the last word
    from the provider was not even a parseable document.
    """
    cfg = cfg or IngestConfig()
    limit = provider.capabilities.get("max_video_s")
    if limit is not None and video.duration_s > limit:
        raise ProviderUnavailable(
            f"provider {provider.name!r} handles at most {limit:g}s of video"
        )

    base_prompt = build_prompt(default_grammar(), video)
    feedback = ""
    attempts: list[AttemptRecord] = []
    last_parsed: Optional[Workflow] = None
    last_parsed_violations: list[Violation] = []
    last_schema_exc: Optional[Exception] = None

    for attempt in range(1, cfg.max_retries + 2):
        raw = provider.analyze(base_prompt + feedback, video.uri, attempt)
        digest = hashlib.sha256(raw.encode("utf-8")).hexdigest()
        try:
            candidate = jsonio.loads(raw)
        except jsonio.SchemaError as exc:
            attempts.append(AttemptRecord(attempt, digest, str(exc), ()))
            last_schema_exc = exc
            feedback = _feedback_block([{"schema_error": str(exc)}])
            continue
        violations = validate(candidate, cfg.validation)
        attempts.append(AttemptRecord(attempt, digest, None, tuple(violations)))
        if not violations:
            return candidate, IngestReport(tuple(attempts), "clean")
        last_parsed = candidate
        last_parsed_violations = violations
        last_schema_exc = None
        feedback = _feedback_block([v.to_json() for v in violations])

    if last_parsed is None:
        if last_schema_exc is not None:
            raise last_schema_exc
        raise ExhaustedRetries(
            "no attempt produced a document",
            report=IngestReport(tuple(attempts), "failed"),
        )

    repaired, actions = repair(last_parsed, last_parsed_violations, cfg.validation)
    residual = validate(repaired, cfg.validation)
    if not residual:
        return repaired, IngestReport(tuple(attempts), "repaired", tuple(actions))
    raise ExhaustedRetries(
        f"{len(residual)} violation(s) remain after "
        f"{len(attempts)} attempt(s) and repair",
        report=IngestReport(
            tuple(attempts), "failed", tuple(actions), tuple(residual)
        ),
    )


# -- providers ----------------------------------------------------------


def video_key(uri: str) -> str:
    """Fixture directory name for a video reference."""
    tail = uri.rsplit("/", 1)[-1]
    tail = tail.rsplit(":", 1)[-1]
    if "." in tail:
        tail = tail[: tail.rindex(".")]
    tail = re.sub(r"[^A-Za-z0-9_-]+", "-", tail).strip("-")
    return tail or "video"


class MockProvider:
    """Deterministic provider backed by fixture files."""

    name = "mock"

    def __init__(self, fixtures_dir, max_video_s: float = 3600.0):
        self.fixtures_dir = Path(fixtures_dir)
        self.capabilities = {"max_video_s": max_video_s}

    def analyze(self, prompt: str, video_uri: str, attempt: int) -> str:
        key = video_key(video_uri)
        folder = self.fixtures_dir / key
        files = sorted(
            folder.glob("attempt-*.json"),
            key=lambda p: int(re.sub(r"\D", "", p.stem) or 0),
        )
        if not files:
            raise ProviderUnavailable(f"no fixtures under {folder}")
        # Clamp so a run longer than the script keeps replaying the end.
        chosen = files[min(attempt, len(files)) - 1]
        return chosen.read_text(encoding="utf-8")


class HttpProvider:
    """POSTs {prompt, video, attempt} and expects {"text": "..."}."""

    def __init__(
        self,
        endpoint: str,
        name: str = "http",
        deadline_s: float = 60.0,
        max_video_s: float = 3600.0,
    ):
        self.endpoint = endpoint
        self.name = name
        self.deadline_s = deadline_s
        self.capabilities = {"max_video_s": max_video_s}

    def analyze(self, prompt: str, video_uri: str, attempt: int) -> str:
        try:
            resp = requests.post(
                self.endpoint,
                json={"prompt": prompt, "video": video_uri, "attempt": attempt},
                timeout=self.deadline_s,
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(str(exc))
        if resp.status_code != 200:
            raise ProviderUnavailable(
                f"provider returned HTTP {resp.status_code}"
            )
        try:
            return resp.json()["text"]
        except (ValueError, KeyError):
            raise ProviderUnavailable("provider response missing 'text'")


# -- link enrichment ----------------------------------------------------


class MockSearch:
    """Scripted search results: query -> [(url, title), ...]."""

    name = "mock-search"

    def __init__(self, results: dict):
        self.results = dict(results)

    def search(self, query: str) -> list:
        return list(self.results.get(query, []))


def _link_hints(w: Workflow, node) -> list[str]:
    hints: list[str] = []
    if isinstance(node, DoingNode):
        hints.extend(node.tools)
    elif isinstance(node, ThingNode):
        hints.extend(node.stuff)
    for link in w.links:
        if link.target == node.id and link.source == LinkSource.DETECTED and link.title:
            hints.append(link.title)
    return hints


def enrich_links(w: Workflow, search_provider) -> Workflow:
    """Supplement nodes that hint at outside resources with searched
    links. Existing links are never touched, and a second pass adds
    nothing. A search outage is non-fatal: the input comes back
    unchanged."""
    used_ids = {x.id for x in w.links} | {n.id for n in w.nodes} | {
        e.id for e in w.edges
    } | {s.id for s in w.segments} | {x.id for x in w.notes}
    present = {(l.target, l.url) for l in w.links}
    added: list[ExternalLink] = []
    counter = 1
    try:
        for node in canonical_node_order(w):
            for hint in _link_hints(w, node):
                for url, title in search_provider.search(hint):
                    if (node.id, url) in present:
                        continue
                    while f"l{counter}" in used_ids:
                        counter += 1
                    link_id = f"l{counter}"
                    used_ids.add(link_id)
                    added.append(
                        ExternalLink(
                            link_id, node.id, url, title=title,
                            source=LinkSource.SEARCHED,
                        )
                    )
                    present.add((node.id, url))
    except SearchUnavailable as exc:
        log.warning("link search unavailable, leaving workflow as-is: %s", exc)
        return w
    if not added:
        return w
    return replace(w, links=w.links + added)
