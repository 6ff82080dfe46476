/** Read-only graph helpers over a workflow document. */

import type { EdgeDoc, NodeDoc, ThingDoc, WorkflowDoc } from "./types.js";
import { isReflective, isThing } from "./types.js";

export function nodesById(doc: WorkflowDoc): Map<string, NodeDoc> {
  return new Map(doc.nodes.map((n) => [n.id, n]));
}

export function flowEdges(doc: WorkflowDoc): EdgeDoc[] {
  return doc.edges.filter((e) => e.kind === "flow");
}

export function flowIn(doc: WorkflowDoc, id: string): EdgeDoc[] {
  return flowEdges(doc).filter((e) => e.to === id);
}

export function flowOut(doc: WorkflowDoc, id: string): EdgeDoc[] {
  return flowEdges(doc).filter((e) => e.from === id);
}

export function sourceThings(doc: WorkflowDoc): ThingDoc[] {
  const withIncoming = new Set(flowEdges(doc).map((e) => e.to));
  return doc.nodes.filter(
    (n): n is ThingDoc => isThing(n) && !withIncoming.has(n.id),
  );
}

export function sinkThings(doc: WorkflowDoc): ThingDoc[] {
  const withOutgoing = new Set(flowEdges(doc).map((e) => e.from));
  return doc.nodes.filter(
    (n): n is ThingDoc => isThing(n) && !withOutgoing.has(n.id),
  );
}

/** The earliest source thing, ties broken by id; null on an empty graph. */
export function anchorSource(doc: WorkflowDoc): ThingDoc | null {
  const sources = sourceThings(doc).slice();
  sources.sort((a, b) => a.span[0] - b.span[0] || cmp(a.id, b.id));
  return sources[0] ?? null;
}

function cmp(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0;
}

/**
 * Kahn's order over the flow subgraph of things and doings, ties broken
 * by (span start, id); nodes stuck in cycles come last, sorted.
 */
export function topoOrder(doc: WorkflowDoc): string[] {
  const members = doc.nodes.filter((n) => !isReflective(n));
  const ids = new Set(members.map((n) => n.id));
  const byId = nodesById(doc);
  const indeg = new Map<string, number>();
  const adj = new Map<string, string[]>();
  for (const n of members) {
    indeg.set(n.id, 0);
    adj.set(n.id, []);
  }
  for (const e of flowEdges(doc)) {
    if (!ids.has(e.from) || !ids.has(e.to)) continue;
    adj.get(e.from)!.push(e.to);
    indeg.set(e.to, (indeg.get(e.to) ?? 0) + 1);
  }

  const key = (id: string): [number, string] => [
    byId.get(id)!.span[0],
    id,
  ];
  const ready = members
    .filter((n) => indeg.get(n.id) === 0)
    .map((n) => n.id);
  const order: string[] = [];
  while (ready.length) {
    ready.sort((a, b) => {
      const [sa, ia] = key(a);
      const [sb, ib] = key(b);
      return sa - sb || cmp(ia, ib);
    });
    const cur = ready.shift()!;
    order.push(cur);
    for (const nxt of adj.get(cur) ?? []) {
      const left = indeg.get(nxt)! - 1;
      indeg.set(nxt, left);
      if (left === 0) ready.push(nxt);
    }
  }
  const placed = new Set(order);
  const stuck = members
    .filter((n) => !placed.has(n.id))
    .sort((a, b) => a.span[0] - b.span[0] || cmp(a.id, b.id))
    .map((n) => n.id);
  return order.concat(stuck);
}

/** Weakly connected components over every edge kind, each sorted. */
export function weakComponents(doc: WorkflowDoc): string[][] {
  const neighbors = new Map<string, Set<string>>();
  for (const n of doc.nodes) neighbors.set(n.id, new Set());
  for (const e of doc.edges) {
    if (!neighbors.has(e.from) || !neighbors.has(e.to)) continue;
    neighbors.get(e.from)!.add(e.to);
    neighbors.get(e.to)!.add(e.from);
  }
  const seen = new Set<string>();
  const components: string[][] = [];
  for (const n of doc.nodes) {
    if (seen.has(n.id)) continue;
    const comp: string[] = [];
    const stack = [n.id];
    seen.add(n.id);
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
    components.push(comp.sort(cmp));
  }
  return components;
}
