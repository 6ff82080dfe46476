"""Command line for the whole toolkit.

Exit codes are stable for scripting: 0 success, 1 when violations or
chain divergences were found, 2 on usage, file or parse errors. Machine
output goes to stdout (JSON under --json), diagnostics to stderr.
"""

from __future__ import annotations

import json as jsonlib
import sys
from pathlib import Path

import click

from .errors import CraftflowError, ExhaustedRetries, ProviderUnavailable
from .ingest import HttpProvider, IngestConfig, MockProvider, ingest_video
from .model import GranularityLevel, VideoMeta, Workflow, pattern_census
from .notation import cwn, jsonio
from .storage import WorkflowStore
from .transforms import (
    collapse_segment,
    diff_workflows,
    export_dot,
    granularity_view,
)
from .validate import ValidationConfig, repair, validate


def _fail(message: str, code: int = 2):
    click.echo(message, err=True)
    sys.exit(code)


def _infer_format(path: str, text: str) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".cwn":
        return "cwn"
    if suffix == ".json":
        return "json"
    return "json" if text.lstrip().startswith("{") else "cwn"


def _load(path: str, fmt: str | None = None) -> Workflow:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"{path}: {exc.strerror or exc}")
    fmt = fmt or _infer_format(path, text)
    try:
        if fmt == "cwn":
            return cwn.parse_cwn(text)
        return jsonio.loads(text)
    except cwn.ParseError as exc:
        _fail(f"{path}:{exc.line}:{exc.column}: {exc.message}")
    except jsonio.SchemaError as exc:
        _fail(f"{path}: {exc}")


def _dump(w: Workflow, fmt: str) -> str:
    if fmt == "cwn":
        return cwn.to_cwn(w)
    if fmt == "dot":
        return export_dot(w)
    return jsonio.dumps(w)


def _out_format(path: str, override: str | None) -> str:
    if override:
        return override
    suffix = Path(path).suffix.lower()
    if suffix == ".cwn":
        return "cwn"
    if suffix == ".dot":
        return "dot"
    return "json"


def _print_violations(violations, as_json: bool):
    if as_json:
        click.echo(jsonlib.dumps([v.to_json() for v in violations], indent=2))
        return
    for v in violations:
        subjects = " ".join(v.subjects)
        parts = [v.code.value]
        if subjects:
            parts.append(subjects)
        if v.detail:
            parts.append(v.detail)
        click.echo(": ".join(parts))
    click.echo(f"{len(violations)} violation(s)", err=True)


@click.group(context_settings={"auto_envvar_prefix": "CRAFTFLOW"})
def cli():
    """Craft workflow graphs: parse, validate, view, diff, ingest, serve."""


main = cli


@cli.command()
@click.argument("file", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["cwn", "json"]), default=None)
@click.option("--json", "as_json", is_flag=True, help="JSON summary on stdout.")
def parse(file, fmt, as_json):
    """Parse FILE and report what it holds."""
    w = _load(file, fmt)
    census = pattern_census(w)
    if as_json:
        click.echo(
            jsonlib.dumps(
                {
                    "id": w.id,
                    "video": w.video.uri,
                    "duration_s": w.video.duration_s,
                    "nodes": len(w.nodes),
                    "edges": len(w.edges),
                    "census": census,
                }
            )
        )
    else:
        click.echo(
            f"{w.id}: {len(w.nodes)} nodes, {len(w.edges)} edges, "
            f"{census['segments']} segment(s), video {w.video.uri} "
            f"({w.video.duration_s:g}s)"
        )


@cli.command("validate")
@click.argument("file", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["cwn", "json"]), default=None)
@click.option("--max-gap-s", type=float, default=1.0, show_default=True)
@click.option(
    "--allow-multiple-sources", is_flag=True, help="Skip the single-source rule."
)
@click.option("--repair", "do_repair", is_flag=True, help="Apply safe repairs.")
@click.option(
    "--out",
    type=click.Path(),
    default=None,
    help="Where to write the repaired workflow (format by extension).",
)
@click.option("--json", "as_json", is_flag=True)
def validate_cmd(file, fmt, max_gap_s, allow_multiple_sources, do_repair, out, as_json):
    """Report violations in FILE; optionally repair them."""
    w = _load(file, fmt)
    cfg = ValidationConfig(
        max_gap_s=max_gap_s, require_single_source=not allow_multiple_sources
    )
    violations = validate(w, cfg)
    if not do_repair:
        if as_json:
            click.echo(jsonlib.dumps({"violations": [v.to_json() for v in violations]}, indent=2))
        elif violations:
            _print_violations(violations, False)
        else:
            click.echo("0 violations")
        sys.exit(1 if violations else 0)

    repaired, actions = repair(w, violations, cfg)
    residual = validate(repaired, cfg)
    if out:
        text = _dump(repaired, _out_format(out, None))
        Path(out).write_text(text, encoding="utf-8")
    else:
        text = _dump(repaired, fmt or _infer_format(file, ""))
    if as_json:
        click.echo(
            jsonlib.dumps(
                {
                    "violations": [v.to_json() for v in violations],
                    "actions": [a.to_json() for a in actions],
                    "residual": [v.to_json() for v in residual],
                    "wrote": out,
                },
                indent=2,
            )
        )
    else:
        for a in actions:
            click.echo(f"{a.kind.value}: {' '.join(a.subjects)} ({a.rationale})", err=True)
        if not out:
            click.echo(text, nl=False)
        if residual:
            _print_violations(residual, False)
        else:
            click.echo(f"repaired: {len(actions)} action(s), 0 residual", err=True)
    sys.exit(1 if residual else 0)


@cli.command()
@click.argument("in_file", type=click.Path())
@click.argument("out_file", type=click.Path())
@click.option("--from", "from_fmt", type=click.Choice(["cwn", "json"]), default=None)
@click.option(
    "--to", "to_fmt", type=click.Choice(["cwn", "json", "dot"]), default=None
)
def convert(in_file, out_file, from_fmt, to_fmt):
    """Convert between the text, JSON and DOT forms."""
    w = _load(in_file, from_fmt)
    text = _dump(w, _out_format(out_file, to_fmt))
    if out_file == "-":
        click.echo(text, nl=False)
    else:
        Path(out_file).write_text(text, encoding="utf-8")


@cli.command()
@click.argument("file", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["cwn", "json"]), default=None)
@click.option(
    "--level",
    type=click.Choice(["low", "medium", "high"]),
    default="medium",
    show_default=True,
)
@click.option(
    "--collapse",
    "collapses",
    multiple=True,
    help="Segment id to fold into a summary edge (repeatable).",
)
@click.option("--dot", "as_dot", is_flag=True, help="Graphviz output.")
@click.option("--json", "as_json", is_flag=True)
def view(file, fmt, level, collapses, as_dot, as_json):
    """Project FILE at a fidelity level."""
    w = _load(file, fmt)
    v = granularity_view(w, GranularityLevel.from_name(level))
    try:
        for seg_id in collapses:
            v = collapse_segment(v, seg_id)
    except CraftflowError as exc:
        _fail(str(exc))
    if as_dot:
        click.echo(export_dot(w, v), nl=False)
    elif as_json:
        click.echo(jsonlib.dumps(v.to_json(), indent=2))
    else:
        click.echo(f"level {v.level.value}: {len(v.visible)} visible node(s)")
        click.echo("visible: " + " ".join(v.visible))
        for s in v.summaries:
            click.echo(f"summary {s.from_id} -> {s.to_id}: {s.label}")


@cli.command()
@click.argument("base", type=click.Path())
@click.argument("executed", type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def diff(base, executed, as_json):
    """Where EXECUTED deviates from BASE along the main chain."""
    d = diff_workflows(_load(base), _load(executed))
    if as_json:
        click.echo(jsonlib.dumps(d.to_json(), indent=2))
    else:
        if not d.branch_points:
            click.echo("chains agree")
        for bp in d.branch_points:
            at = bp.at_label or "the start"
            click.echo(f"after {at!r}:")
            if bp.base_path:
                click.echo(f"  base took: {', '.join(bp.base_path)}")
            if bp.executed_path:
                click.echo(f"  executed took: {', '.join(bp.executed_path)}")
            if bp.rejoin_label:
                click.echo(f"  rejoined at: {bp.rejoin_label!r}")
            else:
                click.echo("  never rejoined")
    sys.exit(1 if d.branch_points else 0)


@cli.command()
@click.argument("video_uri")
@click.option("--duration", type=float, required=True, help="Video length in seconds.")
@click.option("--title", default="")
@click.option(
    "--provider",
    "provider_kind",
    type=click.Choice(["mock", "http"]),
    default="mock",
    show_default=True,
)
@click.option(
    "--fixtures",
    type=click.Path(),
    default="fixtures/ingest",
    show_default=True,
    help="Fixture directory for the mock provider.",
)
@click.option("--endpoint", default=None, help="HTTP provider endpoint.")
@click.option("--max-retries", type=int, default=3, show_default=True)
@click.option("--max-gap-s", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--json", "as_json", is_flag=True)
def ingest(
    video_uri, duration, title, provider_kind, fixtures, endpoint,
    max_retries, max_gap_s, out, as_json,
):
    """Propose a workflow for VIDEO_URI through a model provider."""
    if provider_kind == "http":
        if not endpoint:
            raise click.UsageError("--provider http needs --endpoint")
        provider = HttpProvider(endpoint)
    else:
        provider = MockProvider(fixtures)
    cfg = IngestConfig(
        max_retries=max_retries,
        validation=ValidationConfig(max_gap_s=max_gap_s),
    )
    try:
        video = VideoMeta(video_uri, duration, title)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        w, report = ingest_video(provider, video, cfg)
    except ExhaustedRetries as exc:
        if as_json:
            click.echo(jsonlib.dumps({"error": str(exc), "report": exc.report.to_json() if exc.report else None}, indent=2))
        else:
            click.echo(str(exc), err=True)
            if exc.report:
                for a in exc.report.attempts:
                    problems = a.schema_error or ", ".join(
                        v.code.value for v in a.violations
                    )
                    click.echo(f"attempt {a.attempt}: {problems}", err=True)
        sys.exit(1)
    except (ProviderUnavailable, jsonio.SchemaError) as exc:
        _fail(str(exc))

    if out:
        Path(out).write_text(_dump(w, _out_format(out, None)), encoding="utf-8")
    if as_json:
        click.echo(
            jsonlib.dumps(
                {"workflow": jsonio.to_dict(w), "report": report.to_json()},
                indent=2,
            )
        )
    else:
        if not out:
            click.echo(jsonio.dumps(w), nl=False)
        click.echo(
            f"outcome {report.outcome}: {len(report.attempts)} attempt(s)", err=True
        )


@cli.command()
@click.option("--data-dir", type=click.Path(), default="data", show_default=True)
@click.option("--listen", default="127.0.0.1:8000", show_default=True)
@click.option("--strict-validation/--no-strict-validation", default=True)
@click.option("--max-gap-s", type=float, default=1.0, show_default=True)
@click.option(
    "--provider",
    "provider_kind",
    type=click.Choice(["none", "mock", "http"]),
    default="none",
    show_default=True,
)
@click.option("--fixtures", type=click.Path(), default="fixtures/ingest")
@click.option("--endpoint", default=None)
@click.option("--enable-history", is_flag=True)
def serve(
    data_dir, listen, strict_validation, max_gap_s, provider_kind, fixtures,
    endpoint, enable_history,
):
    """Run the HTTP share service."""
    import uvicorn

    from .service import create_app

    provider = None
    if provider_kind == "mock":
        provider = MockProvider(fixtures)
    elif provider_kind == "http":
        if not endpoint:
            raise click.UsageError("--provider http needs --endpoint")
        provider = HttpProvider(endpoint)
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError("--listen takes host:port")
    app = create_app(
        WorkflowStore(data_dir),
        strict_validation=strict_validation,
        max_gap_s=max_gap_s,
        provider=provider,
        enable_history=enable_history,
    )
    uvicorn.run(app, host=host, port=int(port), log_level="info")


if __name__ == "__main__":
    main()
