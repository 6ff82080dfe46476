"""The craft workflow notation: a line-oriented text format.

One statement per line (segment and branch blocks may span lines).
Comments run from ``#`` to end of line. The serializer always emits the
canonical form: workflow header, nodes in topological-then-start order,
chains, loose flow edges, revisions, segments, notes, links. Canonical
output is byte-stable, and parsing it back reconstructs an equal
workflow for anything built through the model operations.

    workflow "file:spoon.mp4" duration=324.5 title="Carving" id=w1 rev=1
    thing t1 "Wood blank" @0..12.5 detail=medium
    doing d1 "Rough shaping" @12.5..140 detail=medium tools=["knife"]
    reflect r1 on t2 "Check the curve" @150..155 detail=medium
    chain t1 -> d1 -> t2
    revision from t4 to t2 reason="unraveled rows"
    segment s1 "Base" { t1 d1 t2 }
    note on t2 "check moisture" author="maria" id=n1
    link on d1 "https://example.com/grain" title="Grain" id=l1

Reflective edges are implied by ``reflect`` statements, so spurious
extra reflective edges on a damaged graph are not representable here;
use the JSON form to store those byte-for-byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..errors import CraftflowError
from ..model import (
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
    canonical_node_order,
    flow_edge_id,
    reflective_edge_ids,
    revision_edge_id,
)

_DEFAULT_CREATED_AT = "1970-01-01T00:00:00Z"

_HEADS = (
    "workflow",
    "thing",
    "doing",
    "reflect",
    "chain",
    "flow",
    "revision",
    "segment",
    "branch",
    "note",
    "link",
)


class ParseError(CraftflowError):
    def __init__(self, message: str, line: int, column: int = 1, snippet: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.snippet = snippet
        super().__init__(f"line {line}, column {column}: {message}")


# -- tokenizer ----------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<arrow>->)
  | (?P<dotdot>\.\.)
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<punct>[@{}\[\],:=])
  | (?P<word>(?:(?!->)[A-Za-z0-9_./+-]|:(?=[A-Za-z0-9_./+-]))+)
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class _Tok:
    kind: str  # string | arrow | dotdot | number | punct | word
    value: str
    line: int
    column: int


def _unquote(raw: str, line: int, column: int) -> str:
    out = []
    i = 1
    while i < len(raw) - 1:
        ch = raw[i]
        if ch == "\\":
            esc = raw[i + 1]
            if esc not in _ESCAPES:
                raise ParseError(f"unknown escape \\{esc}", line, column + i)
            out.append(_ESCAPES[esc])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _quote(text: str) -> str:
    out = ['"']
    for ch in text:
        if ch in ('"', "\\"):
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _tokenize_line(text: str, line_no: int) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}", line_no, pos + 1, text
            )
        kind = m.lastgroup
        value = m.group()
        if kind == "comment":
            break
        if kind != "ws":
            if kind == "string":
                value = _unquote(value, line_no, m.start() + 1)
            toks.append(_Tok(kind, value, line_no, m.start() + 1))
        pos = m.end()
    return toks


class _Cursor:
    """Token stream over one statement."""

    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0
        self.line = toks[0].line if toks else 1

    def peek(self) -> Optional[_Tok]:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def take(self, kind: str, value: Optional[str] = None, what: str = "") -> _Tok:
        tok = self.peek()
        label = what or value or kind
        if tok is None:
            last = self.toks[-1]
            raise ParseError(f"expected {label}", last.line, last.column + len(last.value))
        if tok.kind != kind or (value is not None and tok.value != value):
            raise ParseError(
                f"expected {label}, got {tok.value!r}", tok.line, tok.column
            )
        self.pos += 1
        return tok

    def error(self, message: str) -> ParseError:
        tok = self.peek() or self.toks[-1]
        return ParseError(message, tok.line, tok.column)


def _split_statements(text: str) -> list[list[_Tok]]:
    statements: list[list[_Tok]] = []
    acc: list[_Tok] = []
    depth = 0
    open_line = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        toks = _tokenize_line(line, line_no)
        if not toks:
            continue
        if depth == 0 and (toks[0].kind != "word" or toks[0].value not in _HEADS):
            raise ParseError(
                f"expected a statement keyword, got {toks[0].value!r}",
                toks[0].line,
                toks[0].column,
                line,
            )
        acc.extend(toks)
        for t in toks:
            if t.kind == "punct" and t.value == "{":
                if depth == 0:
                    open_line = t.line
                depth += 1
            elif t.kind == "punct" and t.value == "}":
                depth -= 1
                if depth < 0:
                    raise ParseError("unmatched '}'", t.line, t.column, line)
        if depth == 0:
            statements.append(acc)
            acc = []
    if depth > 0:
        raise ParseError("block opened here is never closed", open_line)
    return statements


# -- statement parsing --------------------------------------------------


def _parse_span(cur: _Cursor) -> tuple[float, float]:
    cur.take("punct", "@", "a span like @0..12.5")
    a = cur.take("number", what="span start")
    cur.take("dotdot", what="'..'")
    b = cur.take("number", what="span end")
    return float(a.value), float(b.value)


def _parse_list(cur: _Cursor) -> tuple[str, ...]:
    cur.take("punct", "[")
    items: list[str] = []
    while True:
        tok = cur.peek()
        if tok is None:
            raise cur.error("unterminated list")
        if tok.kind == "punct" and tok.value == "]":
            cur.pos += 1
            return tuple(items)
        if items:
            cur.take("punct", ",", "','")
            tok = cur.peek()
            if tok is None:
                raise cur.error("unterminated list")
        if tok.kind not in ("string", "word", "number"):
            raise cur.error("expected a list item")
        items.append(tok.value)
        cur.pos += 1


def _parse_attrs(cur: _Cursor, allowed: dict[str, str]) -> dict:
    """``key=value`` pairs to end of statement. allowed maps key to one
    of string/word/number/int/list."""
    out: dict = {}
    while not cur.at_end():
        key_tok = cur.take("word", what="an attribute name")
        key = key_tok.value
        if key not in allowed:
            raise ParseError(
                f"unknown attribute {key!r} (expected one of "
                f"{', '.join(sorted(allowed))})",
                key_tok.line,
                key_tok.column,
            )
        if key in out:
            raise ParseError(f"attribute {key!r} repeats", key_tok.line, key_tok.column)
        cur.take("punct", "=", "'='")
        want = allowed[key]
        if want == "list":
            out[key] = _parse_list(cur)
            continue
        tok = cur.peek()
        if tok is None:
            raise cur.error(f"missing value for {key!r}")
        if want == "string" and tok.kind != "string":
            raise cur.error(f"{key!r} takes a quoted string")
        if want == "word" and tok.kind not in ("word", "number", "string"):
            raise cur.error(f"{key!r} takes a bare word")
        if want in ("number", "int") and tok.kind != "number":
            raise cur.error(f"{key!r} takes a number")
        value = tok.value
        cur.pos += 1
        if want == "number":
            value = float(value)
        elif want == "int":
            if "." in value or "-" in value:
                raise cur.error(f"{key!r} takes a whole number")
            value = int(value)
        out[key] = value
    return out


def _detail(attrs: dict, cur_line: int) -> GranularityLevel:
    raw = attrs.get("detail", "medium")
    try:
        return GranularityLevel.from_name(raw)
    except ValueError as exc:
        raise ParseError(str(exc), cur_line)


def _chain_ids(cur: _Cursor) -> list[_Tok]:
    first = cur.take("word", what="a node id")
    ids = [first]
    cur.take("arrow", what="'->'")
    ids.append(cur.take("word", what="a node id"))
    while not cur.at_end() and cur.peek().kind == "arrow":
        cur.pos += 1
        ids.append(cur.take("word", what="a node id"))
    return ids


# -- the parser ---------------------------------------------------------


class _Builder:
    def __init__(self):
        self.wf_id = "w1"
        self.rev = 1
        self.video: Optional[VideoMeta] = None
        self.nodes: list = []
        self.edges: list[Edge] = []
        self.segments: list[Segment] = []
        self.notes: list[NoteAnnotation] = []
        self.links: list[ExternalLink] = []
        self.used: set[str] = set()
        self.node_by_id: dict = {}
        self.pending_reflect: list[tuple[str, _Tok]] = []

    def claim(self, ident: str, tok: _Tok):
        if ident in self.used:
            raise ParseError(f"duplicate id {ident!r}", tok.line, tok.column)
        self.used.add(ident)

    def claim_derived(self, ident: str, line: int):
        if ident in self.used:
            raise ParseError(f"duplicate id {ident!r}", line)
        self.used.add(ident)

    def auto_id(self, prefix: str) -> str:
        n = 1
        while f"{prefix}{n}" in self.used:
            n += 1
        ident = f"{prefix}{n}"
        self.used.add(ident)
        return ident

    def resolve_node(self, tok: _Tok):
        node = self.node_by_id.get(tok.value)
        if node is None:
            raise ParseError(f"unknown node {tok.value!r}", tok.line, tok.column)
        return node


def parse_cwn(text: str) -> Workflow:
    statements = _split_statements(text)
    if not statements:
        raise ParseError("empty document", 1)

    b = _Builder()
    head0 = statements[0][0]
    if head0.value != "workflow":
        raise ParseError(
            "the workflow header must come first", head0.line, head0.column
        )

    # Nodes first so every later statement can resolve ids.
    for toks in statements:
        head = toks[0]
        cur = _Cursor(toks)
        cur.pos = 1
        if head.value == "workflow":
            _parse_workflow(b, cur, head)
        elif head.value in ("thing", "doing"):
            _parse_thing_or_doing(b, cur, head)
        elif head.value == "reflect":
            _parse_reflect(b, cur, head)

    # Reflect targets may be declared later in the file, so resolve now,
    # and materialize the implied bidirected pair per loop.
    for loop_id, target_tok in b.pending_reflect:
        if target_tok.value not in b.node_by_id:
            raise ParseError(
                f"unknown node {target_tok.value!r}",
                target_tok.line,
                target_tok.column,
            )
        out_id, in_id = reflective_edge_ids(loop_id)
        b.claim_derived(out_id, target_tok.line)
        b.claim_derived(in_id, target_tok.line)
        b.edges.append(Edge(out_id, EdgeKind.REFLECTIVE, loop_id, target_tok.value))
        b.edges.append(Edge(in_id, EdgeKind.REFLECTIVE, target_tok.value, loop_id))

    for toks in statements:
        head = toks[0]
        cur = _Cursor(toks)
        cur.pos = 1
        if head.value == "chain":
            _parse_chain(b, cur)
        elif head.value == "flow":
            _parse_flow(b, cur)
        elif head.value == "revision":
            _parse_revision(b, cur, head)
        elif head.value == "branch":
            _parse_branch(b, cur)

    for toks in statements:
        head = toks[0]
        cur = _Cursor(toks)
        cur.pos = 1
        if head.value == "segment":
            _parse_segment(b, cur, head)

    edge_ids = {e.id for e in b.edges}
    for toks in statements:
        head = toks[0]
        cur = _Cursor(toks)
        cur.pos = 1
        if head.value == "note":
            _parse_note(b, cur, head, edge_ids)
        elif head.value == "link":
            _parse_link(b, cur, head)

    return Workflow(
        id=b.wf_id,
        video=b.video,
        nodes=b.nodes,
        edges=b.edges,
        segments=b.segments,
        notes=b.notes,
        links=b.links,
        created_rev=b.rev,
    )


def _parse_workflow(b: _Builder, cur: _Cursor, head: _Tok):
    if b.video is not None:
        raise ParseError("a second workflow header", head.line, head.column)
    uri = cur.take("string", what="the video uri in quotes").value
    attrs = _parse_attrs(
        cur, {"duration": "number", "title": "string", "id": "word", "rev": "int"}
    )
    if "duration" not in attrs:
        raise ParseError("the workflow header needs duration=<seconds>", head.line)
    try:
        b.video = VideoMeta(uri, attrs["duration"], attrs.get("title", ""))
    except ValueError as exc:
        raise ParseError(str(exc), head.line)
    b.wf_id = attrs.get("id", "w1")
    b.rev = attrs.get("rev", 1)
    if b.rev < 1:
        raise ParseError("rev must be at least 1", head.line)


def _parse_thing_or_doing(b: _Builder, cur: _Cursor, head: _Tok):
    id_tok = cur.take("word", what="a node id")
    label = cur.take("string", what="the label in quotes").value
    start, end = _parse_span(cur)
    attrs = _parse_attrs(
        cur,
        {
            "detail": "word",
            "desc": "string",
            "stuff" if head.value == "thing" else "tools": "list",
        },
    )
    b.claim(id_tok.value, id_tok)
    try:
        span = TimeSpan(start, end)
        if head.value == "thing":
            node = ThingNode(
                id_tok.value,
                label,
                span,
                detail=_detail(attrs, head.line),
                description=attrs.get("desc", ""),
                stuff=tuple(attrs.get("stuff", ())),
            )
        else:
            node = DoingNode(
                id_tok.value,
                label,
                span,
                detail=_detail(attrs, head.line),
                description=attrs.get("desc", ""),
                tools=tuple(attrs.get("tools", ())),
            )
    except ValueError as exc:
        raise ParseError(str(exc), head.line)
    b.nodes.append(node)
    b.node_by_id[node.id] = node


def _parse_reflect(b: _Builder, cur: _Cursor, head: _Tok):
    id_tok = cur.take("word", what="a node id")
    cur.take("word", "on", "'on'")
    target = cur.take("word", what="the attached thing id")
    sensing = cur.take("string", what="the sensing description in quotes").value
    start, end = _parse_span(cur)
    attrs = _parse_attrs(cur, {"adjust": "string", "detail": "word"})
    b.claim(id_tok.value, id_tok)
    try:
        node = ReflectiveLoopNode(
            id_tok.value,
            target.value,
            sensing,
            TimeSpan(start, end),
            adjustment=attrs.get("adjust", ""),
            detail=_detail(attrs, head.line),
        )
    except ValueError as exc:
        raise ParseError(str(exc), head.line)
    b.nodes.append(node)
    b.node_by_id[node.id] = node
    b.pending_reflect.append((node.id, target))


def _check_alternation(b: _Builder, a: _Tok, c: _Tok):
    # Grammar errors visible within one statement fail the parse; whole
    # graph properties wait for the validator.
    src = b.resolve_node(a)
    dst = b.resolve_node(c)
    src_doing = isinstance(src, DoingNode)
    dst_doing = isinstance(dst, DoingNode)
    if not isinstance(src, (ThingNode, DoingNode)) or not isinstance(
        dst, (ThingNode, DoingNode)
    ):
        raise ParseError(
            "flow connects only things and doings", a.line, a.column
        )
    if src_doing == dst_doing:
        raise ParseError(
            f"flow must alternate thing and doing, {c.value!r} breaks it",
            c.line,
            c.column,
        )


def _parse_chain(b: _Builder, cur: _Cursor):
    ids = _chain_ids(cur)
    if not cur.at_end():
        raise cur.error("unexpected trailing tokens after chain")
    for tok in ids:
        b.resolve_node(tok)
    for a, c in zip(ids, ids[1:]):
        _check_alternation(b, a, c)
        eid = flow_edge_id(a.value, c.value)
        b.claim_derived(eid, a.line)
        b.edges.append(Edge(eid, EdgeKind.FLOW, a.value, c.value))


def _parse_flow(b: _Builder, cur: _Cursor):
    a = cur.take("word", what="a node id")
    cur.take("arrow", what="'->'")
    c = cur.take("word", what="a node id")
    attrs = _parse_attrs(cur, {"label": "string", "id": "word"})
    _check_alternation(b, a, c)
    eid = attrs.get("id", flow_edge_id(a.value, c.value))
    b.claim_derived(eid, a.line)
    b.edges.append(Edge(eid, EdgeKind.FLOW, a.value, c.value, attrs.get("label", "")))


def _parse_revision(b: _Builder, cur: _Cursor, head: _Tok):
    cur.take("word", "from", "'from'")
    a = cur.take("word", what="a thing id")
    cur.take("word", "to", "'to'")
    c = cur.take("word", what="a thing id")
    attrs = _parse_attrs(cur, {"reason": "string", "id": "word"})
    src = b.resolve_node(a)
    dst = b.resolve_node(c)
    if not isinstance(src, ThingNode) or not isinstance(dst, ThingNode):
        raise ParseError("revision endpoints must be things", head.line, head.column)
    if dst.span.start_s >= src.span.start_s:
        raise ParseError(
            f"revision must point backward, but {c.value!r} does not start "
            f"before {a.value!r}",
            head.line,
            head.column,
        )
    eid = attrs.get("id", revision_edge_id(a.value, c.value))
    b.claim_derived(eid, head.line)
    b.edges.append(
        Edge(eid, EdgeKind.REVISION, a.value, c.value, attrs.get("reason", ""))
    )


def _parse_branch(b: _Builder, cur: _Cursor):
    """Sugar: expands to the flow edges of each path, the path name
    labeling its first edge."""
    cur.take("word", "at", "'at'")
    at = cur.take("word", what="a thing id")
    b.resolve_node(at)
    cur.take("punct", "{", "'{'")
    paths: list[tuple[str, list[_Tok]]] = []
    rejoin: Optional[_Tok] = None
    while True:
        tok = cur.peek()
        if tok is None:
            raise cur.error("unterminated branch block")
        if tok.kind == "punct" and tok.value == "}":
            cur.pos += 1
            break
        if tok.kind == "word" and tok.value == "path":
            cur.pos += 1
            name = cur.take("string", what="the path name in quotes").value
            cur.take("punct", ":", "':'")
            ids = [cur.take("word", what="a node id")]
            while not cur.at_end() and cur.peek().kind == "arrow":
                cur.pos += 1
                ids.append(cur.take("word", what="a node id"))
            paths.append((name, ids))
        elif tok.kind == "word" and tok.value == "rejoin":
            if rejoin is not None:
                raise ParseError("rejoin repeats", tok.line, tok.column)
            cur.pos += 1
            rejoin = cur.take("word", what="a thing id")
        else:
            raise cur.error("expected 'path', 'rejoin' or '}'")
    if not cur.at_end():
        raise cur.error("unexpected trailing tokens after branch block")
    if len(paths) < 2:
        raise ParseError(
            "a branch needs at least two paths", cur.toks[0].line
        )
    if rejoin is not None:
        b.resolve_node(rejoin)
        if not isinstance(b.resolve_node(rejoin), ThingNode):
            raise ParseError(
                f"rejoin target {rejoin.value!r} must be a thing",
                rejoin.line,
                rejoin.column,
            )
    for name, ids in paths:
        want_doing = True
        for tok in ids:
            node = b.resolve_node(tok)
            is_doing = isinstance(node, DoingNode)
            if is_doing != want_doing:
                raise ParseError(
                    f"path must alternate doing and thing, {tok.value!r} breaks it",
                    tok.line,
                    tok.column,
                )
            want_doing = not want_doing
        if rejoin is not None and not isinstance(
            b.resolve_node(ids[-1]), DoingNode
        ):
            raise ParseError(
                "a rejoining path must end with a doing",
                ids[-1].line,
                ids[-1].column,
            )
        hops = [at] + ids + ([rejoin] if rejoin is not None else [])
        first = True
        for x, y in zip(hops, hops[1:]):
            eid = flow_edge_id(x.value, y.value)
            b.claim_derived(eid, x.line)
            b.edges.append(
                Edge(eid, EdgeKind.FLOW, x.value, y.value, name if first else "")
            )
            first = False


def _parse_segment(b: _Builder, cur: _Cursor, head: _Tok):
    tok = cur.peek()
    seg_id = None
    if tok is not None and tok.kind == "word":
        seg_id = tok.value
        b.claim(seg_id, tok)
        cur.pos += 1
    title = cur.take("string", what="the segment title in quotes").value
    cur.take("punct", "{", "'{'")
    members: list[str] = []
    while True:
        tok = cur.peek()
        if tok is None:
            raise cur.error("unterminated segment block")
        if tok.kind == "punct" and tok.value == "}":
            cur.pos += 1
            break
        if tok.kind != "word":
            raise cur.error("expected a member id or '}'")
        b.resolve_node(tok)
        members.append(tok.value)
        cur.pos += 1
    if not cur.at_end():
        raise cur.error("unexpected trailing tokens after segment")
    if not members:
        raise ParseError("a segment needs at least one member", head.line)
    if seg_id is None:
        seg_id = b.auto_id("s")
    b.segments.append(Segment(seg_id, title, tuple(members)))


def _parse_note(b: _Builder, cur: _Cursor, head: _Tok, edge_ids: set[str]):
    cur.take("word", "on", "'on'")
    target = cur.take("word", what="a node or edge id")
    if target.value not in b.node_by_id and target.value not in edge_ids:
        raise ParseError(
            f"unknown note target {target.value!r}", target.line, target.column
        )
    text = cur.take("string", what="the note text in quotes").value
    attrs = _parse_attrs(
        cur, {"author": "string", "at": "string", "id": "word"}
    )
    if "id" in attrs:
        note_id = attrs["id"]
        b.claim_derived(note_id, head.line)
    else:
        note_id = b.auto_id("n")
    b.notes.append(
        NoteAnnotation(
            note_id,
            target.value,
            text,
            author=attrs.get("author", ""),
            created_at=attrs.get("at", _DEFAULT_CREATED_AT),
        )
    )


def _parse_link(b: _Builder, cur: _Cursor, head: _Tok):
    cur.take("word", "on", "'on'")
    target = cur.take("word", what="a node id")
    b.resolve_node(target)
    url = cur.take("string", what="the url in quotes").value
    attrs = _parse_attrs(cur, {"title": "string", "source": "word", "id": "word"})
    source_raw = attrs.get("source", "manual")
    try:
        source = LinkSource(source_raw)
    except ValueError:
        raise ParseError(
            f"source must be detected, searched or manual, not {source_raw!r}",
            head.line,
        )
    if "id" in attrs:
        link_id = attrs["id"]
        b.claim_derived(link_id, head.line)
    else:
        link_id = b.auto_id("l")
    try:
        link = ExternalLink(
            link_id, target.value, url, title=attrs.get("title", ""), source=source
        )
    except ValueError as exc:
        raise ParseError(str(exc), head.line)
    b.links.append(link)


# -- the serializer -----------------------------------------------------


def _num(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return s or "0"


def _span_text(span: TimeSpan) -> str:
    return f"@{_num(span.start_s)}..{_num(span.end_s)}"


def _list_text(items) -> str:
    return "[" + ", ".join(_quote(i) for i in items) + "]"


def to_cwn(w: Workflow) -> str:
    lines: list[str] = []
    header = f"workflow {_quote(w.video.uri)} duration={_num(w.video.duration_s)}"
    if w.video.title:
        header += f" title={_quote(w.video.title)}"
    header += f" id={w.id} rev={w.created_rev}"
    lines.append(header)

    ordered = canonical_node_order(w)
    index = {n.id: i for i, n in enumerate(ordered)}
    big = len(ordered)

    def idx(nid: str) -> int:
        return index.get(nid, big)

    for node in ordered:
        if isinstance(node, ThingNode):
            line = (
                f"thing {node.id} {_quote(node.label)} {_span_text(node.span)}"
                f" detail={node.detail.value}"
            )
            if node.stuff:
                line += f" stuff={_list_text(node.stuff)}"
            if node.description:
                line += f" desc={_quote(node.description)}"
        elif isinstance(node, DoingNode):
            line = (
                f"doing {node.id} {_quote(node.label)} {_span_text(node.span)}"
                f" detail={node.detail.value}"
            )
            if node.tools:
                line += f" tools={_list_text(node.tools)}"
            if node.description:
                line += f" desc={_quote(node.description)}"
        else:
            line = (
                f"reflect {node.id} on {node.attached_thing} "
                f"{_quote(node.sensing)} {_span_text(node.span)}"
                f" detail={node.detail.value}"
            )
            if node.adjustment:
                line += f" adjust={_quote(node.adjustment)}"
        lines.append(line)

    derived, loose = [], []
    for e in w.flow_edges():
        if e.label == "" and e.id == flow_edge_id(e.from_id, e.to_id):
            derived.append(e)
        else:
            loose.append(e)
    derived.sort(key=lambda e: (idx(e.from_id), idx(e.to_id), e.id))
    chains: list[list[str]] = []
    for e in derived:
        for ch in chains:
            if ch[-1] == e.from_id:
                ch.append(e.to_id)
                break
        else:
            chains.append([e.from_id, e.to_id])
    for ch in chains:
        lines.append("chain " + " -> ".join(ch))
    loose.sort(key=lambda e: (idx(e.from_id), idx(e.to_id), e.id))
    for e in loose:
        line = f"flow {e.from_id} -> {e.to_id}"
        if e.label:
            line += f" label={_quote(e.label)}"
        if e.id != flow_edge_id(e.from_id, e.to_id):
            line += f" id={e.id}"
        lines.append(line)

    revisions = sorted(
        w.edges_of_kind(EdgeKind.REVISION),
        key=lambda e: (idx(e.from_id), idx(e.to_id), e.id),
    )
    for e in revisions:
        line = f"revision from {e.from_id} to {e.to_id}"
        if e.label:
            line += f" reason={_quote(e.label)}"
        if e.id != revision_edge_id(e.from_id, e.to_id):
            line += f" id={e.id}"
        lines.append(line)

    for seg in w.segments:
        lines.append(
            f"segment {seg.id} {_quote(seg.title)} {{ "
            + " ".join(seg.members)
            + " }"
        )

    for note in w.notes:
        line = f"note on {note.target} {_quote(note.text)}"
        if note.author:
            line += f" author={_quote(note.author)}"
        if note.created_at != _DEFAULT_CREATED_AT:
            line += f" at={_quote(note.created_at)}"
        line += f" id={note.id}"
        lines.append(line)

    for link in w.links:
        line = f"link on {link.target} {_quote(link.url)}"
        if link.title:
            line += f" title={_quote(link.title)}"
        line += f" source={link.source.value} id={link.id}"
        lines.append(line)

    return "\n".join(lines) + "\n"
