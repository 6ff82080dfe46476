/**
 * Pure edit operations over the wire document.
 *
 * Every operation returns a new document; callers diff revs and PUT the
 * whole graph. Ids follow the server's conventions (f:{from}:{to} flow
 * edges, rev:{from}:{to} revisions, r:{loop}:out/in reflective pairs)
 * with numeric suffixes when taken.
 */

import type {
  DoingDoc,
  EdgeDoc,
  LinkDoc,
  NodeDoc,
  NoteDoc,
  ThingDoc,
  WorkflowDoc,
} from "./types.js";
import { isDoing, isThing } from "./types.js";
import { flowIn, flowOut } from "./graph.js";

export class EditError extends Error {}

function allIds(doc: WorkflowDoc): Set<string> {
  const ids = new Set<string>();
  for (const n of doc.nodes) ids.add(n.id);
  for (const e of doc.edges) ids.add(e.id);
  for (const s of doc.segments) ids.add(s.id);
  for (const n of doc.notes) ids.add(n.id);
  for (const l of doc.links) ids.add(l.id);
  return ids;
}

function freshId(doc: WorkflowDoc, base: string): string {
  const taken = allIds(doc);
  if (!taken.has(base)) return base;
  let n = 2;
  while (taken.has(`${base}:${n}`)) n++;
  return `${base}:${n}`;
}

/** Next free id of the form prefix + number (t4, d5, n2...). */
export function nextNodeId(doc: WorkflowDoc, prefix: string): string {
  const taken = allIds(doc);
  let n = 1;
  while (taken.has(`${prefix}${n}`)) n++;
  return `${prefix}${n}`;
}

function requireNode(doc: WorkflowDoc, id: string): NodeDoc {
  const node = doc.nodes.find((n) => n.id === id);
  if (node === undefined) throw new EditError(`unknown node '${id}'`);
  return node;
}

export function updateNodeLabel(
  doc: WorkflowDoc,
  nodeId: string,
  label: string,
): WorkflowDoc {
  const node = requireNode(doc, nodeId);
  if (node.kind === "reflective") {
    throw new EditError("loops carry sensing text, not a label");
  }
  return {
    ...doc,
    nodes: doc.nodes.map((n) => (n.id === nodeId ? { ...n, label } : n)),
  };
}

export function updateNodeSpan(
  doc: WorkflowDoc,
  nodeId: string,
  span: [number, number],
): WorkflowDoc {
  requireNode(doc, nodeId);
  if (span[1] < span[0]) throw new EditError("span end before start");
  return {
    ...doc,
    nodes: doc.nodes.map((n) => (n.id === nodeId ? { ...n, span } : n)),
  };
}

/**
 * Append a doing and a resulting thing after an existing thing, the
 * smallest well-formed growth step.
 */
export function addStep(
  doc: WorkflowDoc,
  afterThing: string,
  doingLabel: string,
  thingLabel: string,
  span: [number, number],
): WorkflowDoc {
  const anchor = requireNode(doc, afterThing);
  if (!isThing(anchor)) throw new EditError(`'${afterThing}' is not a thing`);
  const doingId = nextNodeId(doc, "d");
  const doing: DoingDoc = {
    id: doingId,
    kind: "doing",
    label: doingLabel,
    span,
    detail: "medium",
  };
  const withDoing: WorkflowDoc = { ...doc, nodes: [...doc.nodes, doing] };
  const thingId = nextNodeId(withDoing, "t");
  const thing: ThingDoc = {
    id: thingId,
    kind: "thing",
    label: thingLabel,
    span: [span[1], span[1]],
    detail: "medium",
  };
  const e1: EdgeDoc = {
    id: freshId(withDoing, `f:${afterThing}:${doingId}`),
    kind: "flow",
    from: afterThing,
    to: doingId,
  };
  const e2: EdgeDoc = {
    id: freshId(withDoing, `f:${doingId}:${thingId}`),
    kind: "flow",
    from: doingId,
    to: thingId,
  };
  return {
    ...withDoing,
    nodes: [...withDoing.nodes, thing],
    edges: [...withDoing.edges, e1, e2],
  };
}

/**
 * Delete a node, annotations included, but keep incident edges: the
 * dangling endpoints are exactly where the validator pins the gap, so
 * the save stays blocked until the chain is resolved or spliced.
 */
export function deleteNode(doc: WorkflowDoc, nodeId: string): WorkflowDoc {
  requireNode(doc, nodeId);
  return {
    ...doc,
    nodes: doc.nodes.filter((n) => n.id !== nodeId),
    segments: doc.segments
      .map((s) => ({ ...s, members: s.members.filter((m) => m !== nodeId) }))
      .filter((s) => s.members.length > 0),
    notes: doc.notes.filter((n) => n.target !== nodeId),
    links: doc.links.filter((l) => l.target !== nodeId),
  };
}

/**
 * Splice a doing out of the chain: the successor thing merges into the
 * predecessor (span extended, references retargeted) and the graph
 * stays well formed. Also repairs the gap a plain delete left behind,
 * since only the flow edges around the hole are consulted.
 */
export function spliceOutDoing(doc: WorkflowDoc, doingId: string): WorkflowDoc {
  const present = doc.nodes.find((n) => n.id === doingId);
  if (present !== undefined && !isDoing(present)) {
    throw new EditError(`'${doingId}' is not a doing`);
  }
  const inbound = flowIn(doc, doingId);
  const outbound = flowOut(doc, doingId);
  if (inbound.length !== 1 || outbound.length !== 1) {
    throw new EditError("splice needs exactly one flow edge each side");
  }
  const pred = doc.nodes.find((n) => n.id === inbound[0]!.from);
  const succ = doc.nodes.find((n) => n.id === outbound[0]!.to);
  if (
    pred === undefined ||
    succ === undefined ||
    !isThing(pred) ||
    !isThing(succ) ||
    pred.id === succ.id
  ) {
    throw new EditError("splice needs distinct things on both sides");
  }
  return mergeAcrossDoing(doc, doingId, pred, succ);
}

function mergeAcrossDoing(
  doc: WorkflowDoc,
  doingId: string,
  pred: ThingDoc,
  succ: ThingDoc,
): WorkflowDoc {
  const merged: ThingDoc = {
    ...pred,
    span: [
      Math.min(pred.span[0], succ.span[0]),
      Math.max(pred.span[1], succ.span[1]),
    ],
  };
  const nodes = doc.nodes
    .filter((n) => n.id !== doingId && n.id !== succ.id)
    .map((n) => {
      if (n.id === pred.id) return merged;
      if (n.kind === "reflective" && n.attached_thing === succ.id) {
        return { ...n, attached_thing: pred.id };
      }
      return n;
    });
  const edges: EdgeDoc[] = [];
  const seen = new Set<string>();
  for (const e of doc.edges) {
    if (e.from === doingId || e.to === doingId) continue;
    let from = e.from === succ.id ? pred.id : e.from;
    let to = e.to === succ.id ? pred.id : e.to;
    if (from === pred.id && to === pred.id) continue;
    let id = e.id;
    if (from !== e.from || to !== e.to) {
      id = e.kind === "flow" ? `f:${from}:${to}` : e.kind === "revision" ? `rev:${from}:${to}` : e.id;
    }
    if (seen.has(id)) {
      let n = 2;
      while (seen.has(`${id}:${n}`)) n++;
      id = `${id}:${n}`;
    }
    seen.add(id);
    edges.push({ ...e, id, from, to });
  }
  const retarget = (t: string): string => (t === succ.id ? pred.id : t);
  return {
    ...doc,
    nodes,
    edges,
    segments: doc.segments
      .map((s) => ({
        ...s,
        members: [
          ...new Set(
            s.members
              .filter((m) => m !== doingId)
              .map((m) => (m === succ.id ? pred.id : m)),
          ),
        ],
      }))
      .filter((s) => s.members.length > 0),
    notes: doc.notes
      .filter((n) => n.target !== doingId)
      .map((n) => ({ ...n, target: retarget(n.target) })),
    links: doc.links
      .filter((l) => l.target !== doingId)
      .map((l) => ({ ...l, target: retarget(l.target) })),
  };
}

export function addNote(
  doc: WorkflowDoc,
  target: string,
  text: string,
  author = "",
): WorkflowDoc {
  const known =
    doc.nodes.some((n) => n.id === target) ||
    doc.edges.some((e) => e.id === target);
  if (!known) throw new EditError(`unknown note target '${target}'`);
  const note: NoteDoc = {
    id: nextNodeId(doc, "n"),
    target,
    text,
    ...(author ? { author } : {}),
  };
  return { ...doc, notes: [...doc.notes, note] };
}

export function addLink(
  doc: WorkflowDoc,
  target: string,
  url: string,
  title = "",
): WorkflowDoc {
  if (!doc.nodes.some((n) => n.id === target)) {
    throw new EditError(`unknown link target '${target}'`);
  }
  const link: LinkDoc = {
    id: nextNodeId(doc, "l"),
    target,
    url,
    ...(title ? { title } : {}),
    source: "manual",
  };
  return { ...doc, links: [...doc.links, link] };
}

export function markRevision(
  doc: WorkflowDoc,
  fromThing: string,
  toThing: string,
  reason: string,
): WorkflowDoc {
  const src = requireNode(doc, fromThing);
  const dst = requireNode(doc, toThing);
  if (!isThing(src) || !isThing(dst)) {
    throw new EditError("revision endpoints must be things");
  }
  const edge: EdgeDoc = {
    id: freshId(doc, `rev:${fromThing}:${toThing}`),
    kind: "revision",
    from: fromThing,
    to: toThing,
    ...(reason ? { label: reason } : {}),
  };
  return { ...doc, edges: [...doc.edges, edge] };
}
