/**
 * DOM/SVG rendering of the canvas.
 *
 * The graph view draws things as yellow boxes, doings as green ellipses,
 * reflective loops in pink with a double-headed edge, summary edges
 * dashed purple with a hidden-count badge, and revisions dashed red.
 * Mutating controls carry data-mutate and only exist in edit mode.
 */

import type { NodeDoc, WorkflowDoc } from "./types.js";
import { DETAIL_ORDER, detailRank, isReflective, isThing } from "./types.js";
import { flowEdges } from "./graph.js";
import type { GraphView, SummaryEdge } from "./views.js";
import type { CanvasController } from "./state.js";
import { addNote, addStep, deleteNode, spliceOutDoing } from "./edits.js";

export const COLORS = {
  thing: "#ffe066",
  doing: "#8ce99a",
  reflective: "#faa2c1",
  summary: "#9775fa",
  revision: "#e03131",
  stroke: "#343a40",
} as const;

const SVG_NS = "http://www.w3.org/2000/svg";
const COL_W = 170;
const LANE_H = 96;
const NODE_W = 124;
const NODE_H = 44;
const PAD = 48;

function el(
  tag: string,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svg(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

interface Pos {
  x: number;
  lane: number;
}

/** Longest-path columns, branch paths fanned out into parallel lanes. */
function layout(doc: WorkflowDoc, view: GraphView): Map<string, Pos> {
  const byId = new Map(doc.nodes.map((n) => [n.id, n]));
  const chainIds = view.visible.filter((id) => {
    const n = byId.get(id);
    return n !== undefined && !isReflective(n);
  });
  const idset = new Set(chainIds);

  const pairs: Array<[string, string]> = [];
  for (const e of flowEdges(doc)) {
    if (idset.has(e.from) && idset.has(e.to)) pairs.push([e.from, e.to]);
  }
  for (const s of view.summaries) {
    if (idset.has(s.from) && idset.has(s.to)) pairs.push([s.from, s.to]);
  }

  const indeg = new Map<string, number>(chainIds.map((i) => [i, 0]));
  const adj = new Map<string, string[]>(chainIds.map((i) => [i, []]));
  for (const [a, b] of pairs) {
    adj.get(a)!.push(b);
    indeg.set(b, indeg.get(b)! + 1);
  }
  const depth = new Map<string, number>();
  const queue = chainIds.filter((i) => indeg.get(i) === 0);
  for (const i of queue) depth.set(i, 0);
  const topo: string[] = [];
  while (queue.length) {
    const cur = queue.shift()!;
    topo.push(cur);
    for (const nxt of adj.get(cur) ?? []) {
      depth.set(nxt, Math.max(depth.get(nxt) ?? 0, depth.get(cur)! + 1));
      const left = indeg.get(nxt)! - 1;
      indeg.set(nxt, left);
      if (left === 0) queue.push(nxt);
    }
  }
  for (const i of chainIds) {
    if (!depth.has(i)) depth.set(i, topo.length);
  }

  const preds = new Map<string, string[]>(chainIds.map((i) => [i, []]));
  for (const [a, b] of pairs) preds.get(b)!.push(a);

  const pos = new Map<string, Pos>();
  const taken = new Map<number, Set<number>>();
  const claim = (d: number, want: number): number => {
    const lanes = taken.get(d) ?? new Set<number>();
    let lane = want;
    while (lanes.has(lane)) lane++;
    lanes.add(lane);
    taken.set(d, lanes);
    return lane;
  };
  const ordered = chainIds
    .slice()
    .sort((a, b) => depth.get(a)! - depth.get(b)! || view.visible.indexOf(a) - view.visible.indexOf(b));
  for (const id of ordered) {
    const d = depth.get(id)!;
    const predLanes = (preds.get(id) ?? [])
      .map((p) => pos.get(p)?.lane)
      .filter((x): x is number => x !== undefined);
    const want = predLanes.length ? Math.min(...predLanes) : 0;
    pos.set(id, { x: PAD + d * COL_W, lane: claim(d, want) });
  }

  // loops hover above their attached thing
  const loopCount = new Map<string, number>();
  for (const id of view.visible) {
    const n = byId.get(id);
    if (n === undefined || !isReflective(n)) continue;
    const base = pos.get(n.attached_thing);
    if (base === undefined) continue;
    const k = loopCount.get(n.attached_thing) ?? 0;
    loopCount.set(n.attached_thing, k + 1);
    pos.set(id, { x: base.x + 24 + k * 18, lane: base.lane - 0.72 - k * 0.45 });
  }
  return pos;
}

function center(p: Pos): [number, number] {
  return [p.x + NODE_W / 2, PAD + (p.lane + 1) * LANE_H];
}

function defs(): SVGElement {
  const d = svg("defs");
  const marker = (id: string, color: string): SVGElement => {
    const m = svg("marker", {
      id,
      viewBox: "0 0 10 10",
      refX: "9",
      refY: "5",
      markerWidth: "7",
      markerHeight: "7",
      orient: "auto-start-reverse",
    });
    const path = svg("path", { d: "M 0 0 L 10 5 L 0 10 z", fill: color });
    m.appendChild(path);
    return m;
  };
  d.appendChild(marker("arrow", COLORS.stroke));
  d.appendChild(marker("arrow-pink", COLORS.reflective));
  d.appendChild(marker("arrow-red", COLORS.revision));
  d.appendChild(marker("arrow-purple", COLORS.summary));
  return d;
}

function edgeLine(
  a: [number, number],
  b: [number, number],
  cls: string,
  attrs: Record<string, string>,
): SVGElement {
  const line = svg("path", {
    d: `M ${a[0]} ${a[1]} L ${b[0]} ${b[1]}`,
    fill: "none",
    class: cls,
    ...attrs,
  });
  return line;
}

function nodeGroup(
  n: NodeDoc,
  p: Pos,
  ctrl: CanvasController,
): SVGElement {
  const [cx, cy] = center(p);
  const g = svg("g", {
    class: `node node-${n.kind}`,
    "data-node-id": n.id,
    cursor: "pointer",
  });
  const selected = ctrl.state.selection === n.id;
  const stroke = selected ? "#1c7ed6" : COLORS.stroke;
  const strokeW = selected ? "3" : "1.5";
  if (isThing(n)) {
    g.appendChild(
      svg("rect", {
        x: String(p.x),
        y: String(cy - NODE_H / 2),
        width: String(NODE_W),
        height: String(NODE_H),
        rx: "6",
        fill: COLORS.thing,
        stroke,
        "stroke-width": strokeW,
      }),
    );
  } else if (n.kind === "doing") {
    g.appendChild(
      svg("ellipse", {
        cx: String(cx),
        cy: String(cy),
        rx: String(NODE_W / 2),
        ry: String(NODE_H / 2 + 4),
        fill: COLORS.doing,
        stroke,
        "stroke-width": strokeW,
      }),
    );
  } else {
    g.appendChild(
      svg("rect", {
        x: String(p.x + 14),
        y: String(cy - 16),
        width: String(NODE_W - 28),
        height: "32",
        rx: "16",
        fill: COLORS.reflective,
        stroke,
        "stroke-width": strokeW,
      }),
    );
  }
  const label = isReflective(n) ? n.sensing : n.label;
  const text = svg("text", {
    x: String(cx),
    y: String(cy + 4),
    "text-anchor": "middle",
    "font-size": "12",
    "font-family": "system-ui, sans-serif",
  });
  text.textContent = label.length > 18 ? label.slice(0, 17) + "…" : label;
  g.appendChild(text);
  const title = svg("title");
  title.textContent = `${n.id}: ${label} [${n.span[0]}, ${n.span[1]}]`;
  g.appendChild(title);
  g.addEventListener("click", () => ctrl.seek(n.id));
  return g;
}

function violationBadge(
  nodeId: string,
  p: Pos,
  count: number,
  details: string,
): SVGElement {
  const [cx, cy] = center(p);
  const g = svg("g", { class: "violation-badge", "data-node-id": nodeId });
  g.appendChild(
    svg("circle", {
      cx: String(cx + NODE_W / 2 - 6),
      cy: String(cy - NODE_H / 2 - 2),
      r: "9",
      fill: COLORS.revision,
    }),
  );
  const t = svg("text", {
    x: String(cx + NODE_W / 2 - 6),
    y: String(cy - NODE_H / 2 + 2),
    "text-anchor": "middle",
    "font-size": "11",
    fill: "#fff",
  });
  t.textContent = String(count);
  g.appendChild(t);
  const title = svg("title");
  title.textContent = details;
  g.appendChild(title);
  return g;
}

function summaryGroup(s: SummaryEdge, pos: Map<string, Pos>): SVGElement | null {
  const pa = pos.get(s.from);
  const pb = pos.get(s.to);
  if (pa === undefined || pb === undefined) return null;
  const a = center(pa);
  const b = center(pb);
  const g = svg("g", { class: "summary-edge", "data-summary-id": s.id });
  g.appendChild(
    edgeLine([a[0] + NODE_W / 2, a[1]], [b[0] - NODE_W / 2, b[1]], "summary-line", {
      stroke: COLORS.summary,
      "stroke-width": "2",
      "stroke-dasharray": "7 5",
      "marker-end": "url(#arrow-purple)",
    }),
  );
  const mx = (a[0] + b[0]) / 2;
  const my = (a[1] + b[1]) / 2 - 14;
  const badge = svg("g", { class: "summary-badge" });
  badge.appendChild(
    svg("rect", {
      x: String(mx - 14),
      y: String(my - 12),
      width: "28",
      height: "18",
      rx: "9",
      fill: COLORS.summary,
    }),
  );
  const count = svg("text", {
    x: String(mx),
    y: String(my + 1),
    "text-anchor": "middle",
    "font-size": "11",
    fill: "#fff",
  });
  count.textContent = String(s.count);
  badge.appendChild(count);
  g.appendChild(badge);
  const lbl = svg("text", {
    x: String(mx),
    y: String(my + 24),
    "text-anchor": "middle",
    "font-size": "11",
    fill: COLORS.summary,
    class: "summary-label",
  });
  lbl.textContent = s.label;
  g.appendChild(lbl);
  return g;
}

function renderGraph(root: HTMLElement, ctrl: CanvasController): void {
  const doc = ctrl.state.doc;
  if (doc === null) return;
  const view = ctrl.view();
  const pos = layout(doc, view);
  const byId = new Map(doc.nodes.map((n) => [n.id, n]));

  let maxX = 0;
  let maxLane = 0;
  for (const p of pos.values()) {
    maxX = Math.max(maxX, p.x);
    maxLane = Math.max(maxLane, p.lane);
  }
  const width = maxX + NODE_W + PAD;
  const height = PAD + (maxLane + 1) * LANE_H + NODE_H + PAD;

  const canvas = svg("svg", {
    class: "graph",
    width: String(width),
    height: String(height),
    viewBox: `0 0 ${width} ${height}`,
  });
  canvas.appendChild(defs());

  // flow edges between visible nodes
  const visible = new Set(view.visible);
  for (const e of flowEdges(doc)) {
    const pa = pos.get(e.from);
    const pb = pos.get(e.to);
    if (!visible.has(e.from) || !visible.has(e.to)) continue;
    if (pa === undefined || pb === undefined) continue;
    const a = center(pa);
    const b = center(pb);
    const g = svg("g", { class: "flow-edge", "data-edge-id": e.id });
    g.appendChild(
      edgeLine([a[0] + NODE_W / 2, a[1]], [b[0] - NODE_W / 2, b[1]], "flow-line", {
        stroke: COLORS.stroke,
        "stroke-width": "1.6",
        "marker-end": "url(#arrow)",
      }),
    );
    if (e.label) {
      const t = svg("text", {
        x: String((a[0] + b[0]) / 2),
        y: String((a[1] + b[1]) / 2 - 6),
        "text-anchor": "middle",
        "font-size": "11",
        "font-style": "italic",
        class: "branch-label",
      });
      t.textContent = e.label;
      g.appendChild(t);
    }
    canvas.appendChild(g);
  }

  // double-headed reflective edges
  for (const id of view.visible) {
    const n = byId.get(id);
    if (n === undefined || !isReflective(n)) continue;
    const pl = pos.get(n.id);
    const pt = pos.get(n.attached_thing);
    if (pl === undefined || pt === undefined) continue;
    const a = center(pl);
    const b = center(pt);
    canvas.appendChild(
      edgeLine([a[0], a[1] + 16], [b[0], b[1] - NODE_H / 2], "reflective-line", {
        stroke: COLORS.reflective,
        "stroke-width": "2",
        "marker-start": "url(#arrow-pink)",
        "marker-end": "url(#arrow-pink)",
        "data-loop-id": n.id,
      }),
    );
  }

  // revision edges, dashed red, curved under the chain
  for (const e of doc.edges) {
    if (e.kind !== "revision") continue;
    const pa = pos.get(e.from);
    const pb = pos.get(e.to);
    if (pa === undefined || pb === undefined) continue;
    const a = center(pa);
    const b = center(pb);
    const dip = Math.max(a[1], b[1]) + LANE_H * 0.6;
    const g = svg("g", { class: "revision-edge", "data-edge-id": e.id });
    g.appendChild(
      svg("path", {
        d:
          `M ${a[0]} ${a[1] + NODE_H / 2} ` +
          `C ${a[0]} ${dip}, ${b[0]} ${dip}, ${b[0]} ${b[1] + NODE_H / 2}`,
        fill: "none",
        stroke: COLORS.revision,
        "stroke-width": "1.8",
        "stroke-dasharray": "5 4",
        "marker-end": "url(#arrow-red)",
      }),
    );
    if (e.label) {
      const t = svg("text", {
        x: String((a[0] + b[0]) / 2),
        y: String(dip - 6),
        "text-anchor": "middle",
        "font-size": "11",
        fill: COLORS.revision,
      });
      t.textContent = e.label;
      g.appendChild(t);
    }
    canvas.appendChild(g);
  }

  // summary edges with hidden-count badges
  for (const s of view.summaries) {
    const g = summaryGroup(s, pos);
    if (g !== null) canvas.appendChild(g);
  }

  // segment headers over their leftmost visible member
  for (const seg of doc.segments) {
    const memberPos = seg.members
      .filter((m) => visible.has(m))
      .map((m) => pos.get(m))
      .filter((p): p is Pos => p !== undefined);
    if (!memberPos.length) continue;
    const leftmost = memberPos.reduce((a, b) => (b.x < a.x ? b : a));
    const t = svg("text", {
      x: String(leftmost.x),
      y: String(PAD / 2),
      "font-size": "13",
      "font-weight": "bold",
      fill: COLORS.summary,
      class: "segment-header",
      "data-segment-id": seg.id,
    });
    t.textContent = seg.title;
    canvas.appendChild(t);
  }

  // nodes on top
  for (const id of view.visible) {
    const n = byId.get(id);
    const p = pos.get(id);
    if (n === undefined || p === undefined) continue;
    canvas.appendChild(nodeGroup(n, p, ctrl));
    const vios = ctrl.violationsFor(id);
    if (vios.length) {
      canvas.appendChild(
        violationBadge(id, p, vios.length, vios.map((v) => `${v.code}: ${v.detail}`).join("\n")),
      );
    }
  }

  // time cursor
  const duration = doc.video.duration_s;
  if (duration > 0) {
    const px = PAD + (ctrl.state.playheadS / duration) * (width - 2 * PAD);
    const cursor = svg("g", { class: "playhead" });
    cursor.appendChild(
      svg("line", {
        x1: String(px),
        y1: "0",
        x2: String(px),
        y2: String(height),
        stroke: "#868e96",
        "stroke-dasharray": "3 3",
      }),
    );
    const t = svg("text", {
      x: String(px + 4),
      y: String(height - 6),
      "font-size": "11",
      fill: "#868e96",
      class: "playhead-label",
    });
    t.textContent = `t=${ctrl.state.playheadS}s`;
    cursor.appendChild(t);
    canvas.appendChild(cursor);
  }

  const holder = el("div", { class: "graph-holder" });
  holder.appendChild(canvas);
  root.appendChild(holder);
}

function renderToolbar(root: HTMLElement, ctrl: CanvasController): void {
  const s = ctrl.state;
  const bar = el("div", { class: "toolbar" });

  const fidelity = el("label", { class: "fidelity" }, `Fidelity: ${s.level} `);
  const slider = el("input", {
    type: "range",
    min: "0",
    max: "2",
    step: "1",
    value: String(detailRank(s.level)),
    "data-action": "fidelity",
  }) as HTMLInputElement;
  slider.addEventListener("input", () => {
    const level = DETAIL_ORDER[Number(slider.value)];
    if (level !== undefined) ctrl.setFidelity(level);
  });
  fidelity.appendChild(slider);
  bar.appendChild(fidelity);

  for (const seg of s.doc?.segments ?? []) {
    const collapsed = s.collapsed.includes(seg.id);
    const btn = el(
      "button",
      {
        type: "button",
        "data-action": "toggle-segment",
        "data-segment-id": seg.id,
      },
      `${collapsed ? "Expand" : "Collapse"} ${seg.title}`,
    );
    btn.addEventListener("click", () => ctrl.toggleSegment(seg.id));
    bar.appendChild(btn);
  }

  if (s.mode === "edit") {
    const editBox = el("span", { class: "edit-controls" });
    const mk = (
      action: string,
      text: string,
      handler: () => void,
      disabled = false,
    ): HTMLElement => {
      const b = el(
        "button",
        { type: "button", "data-action": action, "data-mutate": "1" },
        text,
      ) as HTMLButtonElement;
      if (disabled) b.disabled = true;
      b.addEventListener("click", handler);
      return b;
    };
    editBox.appendChild(
      mk("add-step", "Add step after selection", () => {
        const sel = s.selection;
        const doc = s.doc;
        if (sel === null || doc === null) return;
        const anchor = doc.nodes.find((n) => n.id === sel);
        if (anchor === undefined || !isThing(anchor)) return;
        const start = anchor.span[1];
        ctrl.apply((d) =>
          addStep(d, sel, "New action", "New state", [start, start]),
        );
      }),
    );
    editBox.appendChild(
      mk("delete-node", "Delete selection", () => {
        const sel = s.selection;
        if (sel === null) return;
        ctrl.apply((d) => deleteNode(d, sel));
      }),
    );
    editBox.appendChild(
      mk("splice-doing", "Splice out doing", () => {
        const sel = s.selection;
        if (sel === null) return;
        ctrl.apply((d) => spliceOutDoing(d, sel));
      }),
    );
    editBox.appendChild(
      mk("add-note", "Note on selection", () => {
        const sel = s.selection;
        if (sel === null) return;
        ctrl.apply((d) => addNote(d, sel, "todo: annotate"));
      }),
    );
    editBox.appendChild(
      mk("save", s.dirty ? "Save" : "Saved", () => void ctrl.save(), !s.dirty),
    );
    bar.appendChild(editBox);
  }

  root.appendChild(bar);
}

function renderViolations(root: HTMLElement, ctrl: CanvasController): void {
  const all = ctrl.allViolations();
  if (!all.length) return;
  const box = el("div", { class: "violations" });
  box.appendChild(el("h3", {}, `${all.length} violation(s)`));
  const list = el("ul", { class: "violation-list" });
  for (const v of all) {
    const item = el(
      "li",
      {
        "data-code": v.code,
        "data-subjects": v.subjects.join(","),
      },
      `${v.code}${v.subjects.length ? ` [${v.subjects.join(", ")}]` : ""}: ${v.detail}`,
    );
    list.appendChild(item);
  }
  box.appendChild(list);
  root.appendChild(box);
}

/** Full re-render of the app into root. */
export function renderApp(root: HTMLElement, ctrl: CanvasController): void {
  const s = ctrl.state;
  root.textContent = "";

  const header = el("header", { class: "app-header" });
  const title =
    s.doc?.video.title || s.doc?.id || "craft workflow canvas";
  header.appendChild(el("h1", {}, title));
  header.appendChild(
    el(
      "span",
      { class: `mode-badge mode-${s.mode}`, "data-mode": s.mode },
      s.mode === "edit" ? "editing" : "read-only",
    ),
  );
  if (s.doc !== null) {
    header.appendChild(
      el("span", { class: "rev-badge" }, `rev ${s.baseRev}${s.dirty ? " *" : ""}`),
    );
  }
  root.appendChild(header);

  if (s.notice) {
    root.appendChild(el("p", { class: "notice", role: "status" }, s.notice));
  }

  if (s.doc === null) {
    root.appendChild(
      el(
        "p",
        { class: "empty" },
        "Open a workflow at /{id}#edit-token or /{id}/restore.",
      ),
    );
    return;
  }

  renderToolbar(root, ctrl);
  renderGraph(root, ctrl);
  renderViolations(root, ctrl);
}
