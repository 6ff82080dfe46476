"""JSON interchange form, version 1.

The schema is closed: unknown keys are rejected, ``version`` must equal
1, every reference (edge endpoints, loop attachments, segment members,
note and link targets) must resolve, and node spans must sit inside the
video timeline. Shape problems raise ``SchemaError`` carrying a JSON
pointer to the first offending value in document order. Grammar-level
problems (cycles, gaps, broken alternation) are deliberately NOT checked
here; that is the validator's job, so machine-produced graphs can be
loaded, diagnosed and repaired.
"""

from __future__ import annotations

import json

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
    is_valid_url,
)

_DEFAULT_CREATED_AT = "1970-01-01T00:00:00Z"

_KIND_ORDER = {EdgeKind.FLOW: 0, EdgeKind.REFLECTIVE: 1, EdgeKind.REVISION: 2}


class SchemaError(CraftflowError):
    def __init__(self, json_pointer: str, expected: str, found: str):
        self.json_pointer = json_pointer
        self.expected = expected
        self.found = found
        super().__init__(f"at {json_pointer or '/'}: expected {expected}, found {found}")


def _describe(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return repr(v if len(v) <= 40 else v[:37] + "...")
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, list):
        return "an array"
    if isinstance(v, dict):
        return "an object"
    return type(v).__name__


def _fail(ptr: str, expected: str, value) -> None:
    raise SchemaError(ptr, expected, _describe(value))


def _obj(value, ptr: str) -> dict:
    if not isinstance(value, dict):
        _fail(ptr, "an object", value)
    return value


def _arr(value, ptr: str) -> list:
    if not isinstance(value, list):
        _fail(ptr, "an array", value)
    return value


def _str(value, ptr: str, nonempty: bool = False) -> str:
    if not isinstance(value, str):
        _fail(ptr, "a string", value)
    if nonempty and not value:
        _fail(ptr, "a nonempty string", value)
    return value


def _number(value, ptr: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(ptr, "a number", value)
    return float(value)


def _check_keys(obj: dict, allowed: set, ptr: str) -> None:
    for key in obj:
        if key not in allowed:
            _fail(
                f"{ptr}/{key}",
                "no such key (allowed: " + ", ".join(sorted(allowed)) + ")",
                obj[key],
            )


def _get(obj: dict, key: str, ptr: str):
    if key not in obj:
        raise SchemaError(f"{ptr}/{key}", "a value", "nothing")
    return obj[key]


def _span(value, ptr: str, limit: float = None) -> TimeSpan:
    arr = _arr(value, ptr)
    if len(arr) != 2:
        _fail(ptr, "a span [start, end]", value)
    a = _number(arr[0], f"{ptr}/0")
    b = _number(arr[1], f"{ptr}/1")
    if a < 0 or b < a:
        _fail(ptr, "a span with 0 <= start <= end", value)
    if limit is not None and round(b, 3) > limit:
        _fail(ptr, f"a span within [0, {limit:g}]", value)
    return TimeSpan(a, b)


def _detail(obj: dict, ptr: str) -> GranularityLevel:
    raw = obj.get("detail", "medium")
    if not isinstance(raw, str) or raw not in ("low", "medium", "high"):
        _fail(f"{ptr}/detail", "low, medium or high", raw)
    return GranularityLevel(raw)


def _str_list(value, ptr: str) -> tuple:
    arr = _arr(value, ptr)
    return tuple(_str(x, f"{ptr}/{i}") for i, x in enumerate(arr))


class _Ids:
    def __init__(self):
        self.used: set[str] = set()

    def claim(self, value, ptr: str) -> str:
        ident = _str(value, ptr, nonempty=True)
        if ident in self.used:
            _fail(ptr, "a fresh id", value)
        self.used.add(ident)
        return ident


def from_dict(data) -> Workflow:
    root = _obj(data, "")
    _check_keys(
        root,
        {"version", "id", "rev", "video", "nodes", "edges", "segments", "notes", "links"},
        "",
    )
    version = _get(root, "version", "")
    if isinstance(version, bool) or not isinstance(version, int) or version != 1:
        _fail("/version", "the integer 1", version)

    wf_id = _str(root.get("id", "w1"), "/id", nonempty=True)
    rev = root.get("rev", 1)
    if isinstance(rev, bool) or not isinstance(rev, int) or rev < 1:
        _fail("/rev", "a positive integer", rev)

    vptr = "/video"
    vobj = _obj(_get(root, "video", ""), vptr)
    _check_keys(vobj, {"uri", "duration_s", "title"}, vptr)
    uri = _str(_get(vobj, "uri", vptr), f"{vptr}/uri", nonempty=True)
    duration = _number(_get(vobj, "duration_s", vptr), f"{vptr}/duration_s")
    if duration <= 0:
        _fail(f"{vptr}/duration_s", "a positive duration", vobj["duration_s"])
    title = _str(vobj.get("title", ""), f"{vptr}/title")
    video = VideoMeta(uri, duration, title)

    ids = _Ids()
    nodes = []
    for i, raw in enumerate(_arr(_get(root, "nodes", ""), "/nodes")):
        nodes.append(_node(raw, f"/nodes/{i}", ids, video.duration_s))
    node_ids = {n.id for n in nodes}

    edges = []
    for i, raw in enumerate(_arr(_get(root, "edges", ""), "/edges")):
        edges.append(_edge(raw, f"/edges/{i}", ids, node_ids))
    edge_ids = {e.id for e in edges}

    segments = []
    for i, raw in enumerate(_arr(root.get("segments", []), "/segments")):
        segments.append(_segment(raw, f"/segments/{i}", ids, node_ids))

    notes = []
    for i, raw in enumerate(_arr(root.get("notes", []), "/notes")):
        notes.append(_note(raw, f"/notes/{i}", ids, node_ids | edge_ids))

    links = []
    for i, raw in enumerate(_arr(root.get("links", []), "/links")):
        links.append(_link(raw, f"/links/{i}", ids, node_ids))

    return Workflow(
        id=wf_id,
        video=video,
        nodes=nodes,
        edges=edges,
        segments=segments,
        notes=notes,
        links=links,
        created_rev=rev,
    )


def _node(raw, ptr: str, ids: _Ids, duration_s: float):
    obj = _obj(raw, ptr)
    kind = _str(_get(obj, "kind", ptr), f"{ptr}/kind")
    if kind not in ("thing", "doing", "reflective"):
        _fail(f"{ptr}/kind", "thing, doing or reflective", kind)
    ident = ids.claim(_get(obj, "id", ptr), f"{ptr}/id")
    span = _span(_get(obj, "span", ptr), f"{ptr}/span", limit=duration_s)
    if kind == "thing":
        _check_keys(
            obj, {"id", "kind", "span", "label", "detail", "stuff", "description"}, ptr
        )
        return ThingNode(
            ident,
            _str(_get(obj, "label", ptr), f"{ptr}/label"),
            span,
            detail=_detail(obj, ptr),
            description=_str(obj.get("description", ""), f"{ptr}/description"),
            stuff=_str_list(obj.get("stuff", []), f"{ptr}/stuff"),
        )
    if kind == "doing":
        _check_keys(
            obj, {"id", "kind", "span", "label", "detail", "tools", "description"}, ptr
        )
        return DoingNode(
            ident,
            _str(_get(obj, "label", ptr), f"{ptr}/label"),
            span,
            detail=_detail(obj, ptr),
            description=_str(obj.get("description", ""), f"{ptr}/description"),
            tools=_str_list(obj.get("tools", []), f"{ptr}/tools"),
        )
    _check_keys(
        obj,
        {"id", "kind", "span", "attached_thing", "sensing", "adjustment", "detail"},
        ptr,
    )
    return ReflectiveLoopNode(
        ident,
        _str(_get(obj, "attached_thing", ptr), f"{ptr}/attached_thing", nonempty=True),
        _str(_get(obj, "sensing", ptr), f"{ptr}/sensing"),
        span,
        adjustment=_str(obj.get("adjustment", ""), f"{ptr}/adjustment"),
        detail=_detail(obj, ptr),
    )


def _edge(raw, ptr: str, ids: _Ids, node_ids: set) -> Edge:
    obj = _obj(raw, ptr)
    _check_keys(obj, {"id", "kind", "from", "to", "label"}, ptr)
    kind_raw = _str(_get(obj, "kind", ptr), f"{ptr}/kind")
    if kind_raw not in ("flow", "reflective", "revision"):
        _fail(f"{ptr}/kind", "flow, reflective or revision", kind_raw)
    ident = ids.claim(_get(obj, "id", ptr), f"{ptr}/id")
    from_id = _str(_get(obj, "from", ptr), f"{ptr}/from")
    if from_id not in node_ids:
        _fail(f"{ptr}/from", "a known node id", from_id)
    to_id = _str(_get(obj, "to", ptr), f"{ptr}/to")
    if to_id not in node_ids:
        _fail(f"{ptr}/to", "a known node id", to_id)
    label = _str(obj.get("label", ""), f"{ptr}/label")
    return Edge(ident, EdgeKind(kind_raw), from_id, to_id, label)


def _segment(raw, ptr: str, ids: _Ids, node_ids: set) -> Segment:
    obj = _obj(raw, ptr)
    _check_keys(obj, {"id", "title", "members"}, ptr)
    ident = ids.claim(_get(obj, "id", ptr), f"{ptr}/id")
    title = _str(_get(obj, "title", ptr), f"{ptr}/title")
    members = _arr(_get(obj, "members", ptr), f"{ptr}/members")
    if not members:
        _fail(f"{ptr}/members", "at least one member", members)
    out = []
    for i, m in enumerate(members):
        member = _str(m, f"{ptr}/members/{i}")
        if member not in node_ids:
            _fail(f"{ptr}/members/{i}", "a known node id", m)
        out.append(member)
    return Segment(ident, title, tuple(out))


def _note(raw, ptr: str, ids: _Ids, known: set) -> NoteAnnotation:
    obj = _obj(raw, ptr)
    _check_keys(obj, {"id", "target", "text", "author", "created_at"}, ptr)
    ident = ids.claim(_get(obj, "id", ptr), f"{ptr}/id")
    target = _str(_get(obj, "target", ptr), f"{ptr}/target")
    if target not in known:
        _fail(f"{ptr}/target", "a known node or edge id", target)
    return NoteAnnotation(
        ident,
        target,
        _str(_get(obj, "text", ptr), f"{ptr}/text"),
        author=_str(obj.get("author", ""), f"{ptr}/author"),
        created_at=_str(obj.get("created_at", _DEFAULT_CREATED_AT), f"{ptr}/created_at"),
    )


def _link(raw, ptr: str, ids: _Ids, node_ids: set) -> ExternalLink:
    obj = _obj(raw, ptr)
    _check_keys(obj, {"id", "target", "url", "title", "source"}, ptr)
    ident = ids.claim(_get(obj, "id", ptr), f"{ptr}/id")
    target = _str(_get(obj, "target", ptr), f"{ptr}/target")
    if target not in node_ids:
        _fail(f"{ptr}/target", "a known node id", target)
    url = _str(_get(obj, "url", ptr), f"{ptr}/url", nonempty=True)
    if not is_valid_url(url):
        _fail(f"{ptr}/url", "a URL", url)
    source_raw = obj.get("source", "manual")
    if not isinstance(source_raw, str) or source_raw not in (
        "detected",
        "searched",
        "manual",
    ):
        _fail(f"{ptr}/source", "detected, searched or manual", source_raw)
    return ExternalLink(
        ident,
        target,
        url,
        title=_str(obj.get("title", ""), f"{ptr}/title"),
        source=LinkSource(source_raw),
    )


# -- writing ------------------------------------------------------------


def to_dict(w: Workflow) -> dict:
    ordered = canonical_node_order(w)
    index = {n.id: i for i, n in enumerate(ordered)}
    big = len(ordered)

    def idx(nid: str) -> int:
        return index.get(nid, big)

    nodes = [_node_dict(n) for n in ordered]

    edges = sorted(
        (e for e in w.edges if e.kind != EdgeKind.SUMMARY),
        key=lambda e: (_KIND_ORDER[e.kind], idx(e.from_id), idx(e.to_id), e.id),
    )
    edge_dicts = []
    for e in edges:
        d = {"id": e.id, "kind": e.kind.value, "from": e.from_id, "to": e.to_id}
        if e.label:
            d["label"] = e.label
        edge_dicts.append(d)

    video = {"uri": w.video.uri, "duration_s": w.video.duration_s}
    if w.video.title:
        video["title"] = w.video.title

    notes = []
    for n in w.notes:
        d = {"id": n.id, "target": n.target, "text": n.text}
        if n.author:
            d["author"] = n.author
        if n.created_at != _DEFAULT_CREATED_AT:
            d["created_at"] = n.created_at
        notes.append(d)

    links = []
    for l in w.links:
        d = {"id": l.id, "target": l.target, "url": l.url}
        if l.title:
            d["title"] = l.title
        d["source"] = l.source.value
        links.append(d)

    return {
        "version": 1,
        "id": w.id,
        "rev": w.created_rev,
        "video": video,
        "nodes": nodes,
        "edges": edge_dicts,
        "segments": [
            {"id": s.id, "title": s.title, "members": list(s.members)}
            for s in w.segments
        ],
        "notes": notes,
        "links": links,
    }


def _node_dict(node) -> dict:
    d = {"id": node.id, "kind": "", "span": [node.span.start_s, node.span.end_s]}
    if isinstance(node, ThingNode):
        d["kind"] = "thing"
        d["label"] = node.label
        d["detail"] = node.detail.value
        if node.stuff:
            d["stuff"] = list(node.stuff)
        if node.description:
            d["description"] = node.description
    elif isinstance(node, DoingNode):
        d["kind"] = "doing"
        d["label"] = node.label
        d["detail"] = node.detail.value
        if node.tools:
            d["tools"] = list(node.tools)
        if node.description:
            d["description"] = node.description
    else:
        d["kind"] = "reflective"
        d["attached_thing"] = node.attached_thing
        d["sensing"] = node.sensing
        if node.adjustment:
            d["adjustment"] = node.adjustment
        d["detail"] = node.detail.value
    return d


def dumps(w: Workflow) -> str:
    return json.dumps(to_dict(w), indent=2, ensure_ascii=False) + "\n"


def loads(text: str) -> Workflow:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", "valid JSON", str(exc))
    return from_dict(data)
