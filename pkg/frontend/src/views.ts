/**
 * Fidelity views: which nodes stay visible at a granularity level, and
 * summary edges standing in for contracted hidden runs.
 *
 * Matches the server's view computation so whole-graph rendering never
 * needs a round trip when the slider moves.
 */

import type { Detail, NodeDoc, WorkflowDoc } from "./types.js";
import { detailRank, isDoing, isReflective, isThing } from "./types.js";
import { flowEdges, sinkThings, sourceThings, topoOrder } from "./graph.js";

export type FidelityLevel = Detail;

export interface SummaryEdge {
  id: string;
  from: string;
  to: string;
  count: number;
  component: string[];
  label: string;
}

export interface GraphView {
  level: FidelityLevel;
  collapsed: string[];
  visible: string[];
  summaries: SummaryEdge[];
}

function cmp(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0;
}

/** Things and doings in topological order, each loop after its attached node. */
export function canonicalNodeOrder(doc: WorkflowDoc): NodeDoc[] {
  const order = topoOrder(doc);
  const byId = new Map(doc.nodes.map((n) => [n.id, n]));
  const loopsByThing = new Map<string, NodeDoc[]>();
  const stray: NodeDoc[] = [];
  for (const loop of doc.nodes.filter(isReflective)) {
    if (byId.has(loop.attached_thing)) {
      const bucket = loopsByThing.get(loop.attached_thing) ?? [];
      bucket.push(loop);
      loopsByThing.set(loop.attached_thing, bucket);
    } else {
      stray.push(loop);
    }
  }
  const result: NodeDoc[] = [];
  for (const nodeId of order) {
    result.push(byId.get(nodeId)!);
    for (const loop of (loopsByThing.get(nodeId) ?? []).sort((a, b) =>
      cmp(a.id, b.id),
    )) {
      result.push(loop);
    }
  }
  result.push(...stray.sort((a, b) => cmp(a.id, b.id)));
  return result;
}

export function computeView(
  doc: WorkflowDoc,
  level: FidelityLevel,
  collapsed: string[] = [],
): GraphView {
  const order = topoOrder(doc);
  const topoIdx = new Map(order.map((id, i) => [id, i]));
  const byId = new Map(doc.nodes.map((n) => [n.id, n]));
  const levelRank = detailRank(level);

  const anchored = new Set<string>();
  for (const t of sourceThings(doc)) anchored.add(t.id);
  for (const t of sinkThings(doc)) anchored.add(t.id);

  const collapsedMembers = new Set<string>();
  const keepLast = new Set<string>();
  const segById = new Map(doc.segments.map((s) => [s.id, s]));
  for (const segId of collapsed) {
    const seg = segById.get(segId);
    if (seg === undefined) continue;
    for (const m of seg.members) collapsedMembers.add(m);
    const things = seg.members.filter((m) => {
      const n = byId.get(m);
      return n !== undefined && isThing(n);
    });
    if (things.length) {
      let best = things[0]!;
      for (const m of things) {
        if ((topoIdx.get(m) ?? -1) > (topoIdx.get(best) ?? -1)) best = m;
      }
      keepLast.add(best);
    }
  }

  const visible = new Set<string>();
  for (const t of doc.nodes.filter(isThing)) {
    if (anchored.has(t.id) || keepLast.has(t.id)) {
      visible.add(t.id);
    } else if (
      detailRank(t.detail) <= levelRank &&
      !collapsedMembers.has(t.id)
    ) {
      visible.add(t.id);
    }
  }

  const flowNeighbors = new Map<string, Set<string>>();
  const touch = (a: string, b: string) => {
    const set = flowNeighbors.get(a) ?? new Set<string>();
    set.add(b);
    flowNeighbors.set(a, set);
  };
  for (const e of flowEdges(doc)) {
    touch(e.from, e.to);
    touch(e.to, e.from);
  }

  // A doing only makes sense with both its things on screen.
  for (const d of doc.nodes.filter(isDoing)) {
    if (detailRank(d.detail) > levelRank || collapsedMembers.has(d.id)) continue;
    const neighbors = flowNeighbors.get(d.id) ?? new Set<string>();
    let ok = true;
    for (const x of neighbors) {
      if (byId.has(x) && !visible.has(x)) {
        ok = false;
        break;
      }
    }
    if (ok) visible.add(d.id);
  }

  for (const r of doc.nodes.filter(isReflective)) {
    if (detailRank(r.detail) <= levelRank && visible.has(r.attached_thing)) {
      visible.add(r.id);
    }
  }

  const hidden = doc.nodes
    .filter((n) => !isReflective(n) && !visible.has(n.id))
    .map((n) => n.id);
  const summaries = contract(doc, visible, hidden, collapsed, topoIdx);

  const orderedVisible = canonicalNodeOrder(doc)
    .filter((n) => visible.has(n.id))
    .map((n) => n.id);
  return { level, collapsed: [...collapsed], visible: orderedVisible, summaries };
}

function contract(
  doc: WorkflowDoc,
  visible: Set<string>,
  hidden: string[],
  collapsed: string[],
  topoIdx: Map<string, number>,
): SummaryEdge[] {
  const hiddenSet = new Set(hidden);
  const neighbors = new Map<string, Set<string>>(
    hidden.map((h) => [h, new Set<string>()]),
  );
  for (const e of flowEdges(doc)) {
    if (hiddenSet.has(e.from) && hiddenSet.has(e.to)) {
      neighbors.get(e.from)!.add(e.to);
      neighbors.get(e.to)!.add(e.from);
    }
  }

  const sortKey = (x: string): [number, string] => [topoIdx.get(x) ?? -1, x];
  const byKey = (a: string, b: string): number => {
    const [ka, ia] = sortKey(a);
    const [kb, ib] = sortKey(b);
    return ka - kb || cmp(ia, ib);
  };

  const components: string[][] = [];
  const seen = new Set<string>();
  for (const h of hidden) {
    if (seen.has(h)) continue;
    const comp: string[] = [];
    const stack = [h];
    seen.add(h);
    while (stack.length) {
      const cur = stack.pop()!;
      comp.push(cur);
      for (const nxt of neighbors.get(cur) ?? []) {
        if (!seen.has(nxt)) {
          seen.add(nxt);
          stack.push(nxt);
        }
      }
    }
    components.push(comp.sort(byKey));
  }
  components.sort((a, b) => byKey(a[0]!, b[0]!));

  const segById = new Map(doc.segments.map((s) => [s.id, s]));
  const summaries: SummaryEdge[] = [];
  const usedIds = new Set<string>();
  for (const comp of components) {
    const compSet = new Set(comp);
    const entries: string[] = [];
    const exits: string[] = [];
    for (const e of flowEdges(doc)) {
      if (compSet.has(e.to) && visible.has(e.from)) entries.push(e.from);
      if (compSet.has(e.from) && visible.has(e.to)) exits.push(e.to);
    }
    const uniqEntries = [...new Set(entries)].sort(byKey);
    const uniqExits = [...new Set(exits)].sort(byKey);
    let label = `${comp.length} hidden steps`;
    for (const segId of collapsed) {
      const seg = segById.get(segId);
      if (seg !== undefined && comp.every((m) => seg.members.includes(m))) {
        label = seg.title;
        break;
      }
    }
    for (const u of uniqEntries) {
      for (const v of uniqExits) {
        const base = `sum:${u}:${v}`;
        let eid = base;
        let n = 1;
        while (usedIds.has(eid)) {
          n++;
          eid = `${base}:${n}`;
        }
        usedIds.add(eid);
        summaries.push({
          id: eid,
          from: u,
          to: v,
          count: comp.length,
          component: [...comp],
          label,
        });
      }
    }
  }
  return summaries;
}

export class UnknownSegment extends Error {}

/** Fold a segment into summary edges; no-op when nothing would change. */
export function collapseSegment(
  doc: WorkflowDoc,
  view: GraphView,
  segmentId: string,
): GraphView {
  const seg = doc.segments.find((s) => s.id === segmentId);
  if (seg === undefined) throw new UnknownSegment(`no segment '${segmentId}'`);
  if (view.collapsed.includes(segmentId)) return view;
  if (!seg.members.some((m) => view.visible.includes(m))) return view;
  return computeView(doc, view.level, [...view.collapsed, segmentId]);
}

export function expandSegment(
  doc: WorkflowDoc,
  view: GraphView,
  segmentId: string,
): GraphView {
  if (!view.collapsed.includes(segmentId)) return view;
  return computeView(
    doc,
    view.level,
    view.collapsed.filter((s) => s !== segmentId),
  );
}
