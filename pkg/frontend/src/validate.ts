/**
 * Client-side well-formedness validation.
 *
 * Mirrors the server's verdicts code for code so edits can be checked
 * before a save round-trips. Pure functions over the wire document.
 */

import type { NodeDoc, Violation, ViolationCode, WorkflowDoc } from "./types.js";
import { CODE_ORDER, isDoing, isReflective, isThing } from "./types.js";
import { flowEdges, flowIn, flowOut, sourceThings, weakComponents } from "./graph.js";

export interface ValidateOptions {
  maxGapS?: number;
  requireSingleSource?: boolean;
}

const SEVERITY: Partial<Record<ViolationCode, number>> = {
  FlowCycle: 8,
  SequenceViolation: 4,
  Disconnected: 2,
};

export function severity(code: ViolationCode): number {
  return SEVERITY[code] ?? 1;
}

const CODE_RANK = new Map(CODE_ORDER.map((c, i) => [c, i]));

function cmp(a: string, b: string): number {
  return a < b ? -1 : a > b ? 1 : 0;
}

function cmpSubjects(a: string[], b: string[]): number {
  const n = Math.min(a.length, b.length);
  for (let i = 0; i < n; i++) {
    const c = cmp(a[i]!, b[i]!);
    if (c !== 0) return c;
  }
  return a.length - b.length;
}

/** Format a number the way printf %g does, close enough for spans. */
export function fmtG(x: number): string {
  if (Number.isInteger(x) && Math.abs(x) < 1e15) return String(x);
  const s = x.toPrecision(6);
  if (s.includes("e")) return String(Number(s));
  return s.replace(/(\.\d*?)0+$/, "$1").replace(/\.$/, "");
}

function reprList(items: string[]): string {
  return "[" + items.map((s) => `'${s}'`).join(", ") + "]";
}

/** Maximal uncovered video intervals longer than maxGapS. */
export function checkTemporalCoverage(
  doc: WorkflowDoc,
  maxGapS: number,
): Array<[number, number]> {
  const duration = doc.video.duration_s;
  const spans: Array<[number, number]> = [];
  for (const n of doc.nodes) {
    const start = Math.min(Math.max(n.span[0], 0), duration);
    const end = Math.min(Math.max(n.span[1], 0), duration);
    if (end > start || (end === start && start <= duration)) {
      spans.push([start, end]);
    }
  }
  spans.sort((a, b) => a[0] - b[0] || a[1] - b[1]);

  const gaps: Array<[number, number]> = [];
  let coveredTo = 0;
  for (const [start, end] of spans) {
    if (start > coveredTo) gaps.push([coveredTo, start]);
    coveredTo = Math.max(coveredTo, end);
  }
  if (coveredTo < duration) gaps.push([coveredTo, duration]);
  return gaps.filter(([a, b]) => b - a > maxGapS + 1e-9);
}

function flowAdjacency(doc: WorkflowDoc): Map<string, string[]> {
  const adj = new Map<string, string[]>(doc.nodes.map((n) => [n.id, []]));
  for (const e of flowEdges(doc)) {
    if (adj.has(e.from) && adj.has(e.to)) adj.get(e.from)!.push(e.to);
  }
  return adj;
}

/** Non-member nodes on a forward flow path between two members. */
export function convexityGap(doc: WorkflowDoc, members: Set<string>): Set<string> {
  const adj = flowAdjacency(doc);
  const radj = new Map<string, string[]>(doc.nodes.map((n) => [n.id, []]));
  for (const [src, targets] of adj) {
    for (const t of targets) radj.get(t)!.push(src);
  }

  const closure = (graph: Map<string, string[]>): Set<string> => {
    const seen = new Set(members);
    const queue = [...members];
    while (queue.length) {
      for (const nxt of graph.get(queue.shift()!) ?? []) {
        if (!seen.has(nxt)) {
          seen.add(nxt);
          queue.push(nxt);
        }
      }
    }
    return seen;
  };

  const downstream = closure(adj);
  const upstream = closure(radj);
  const gap = new Set<string>();
  for (const id of downstream) {
    if (upstream.has(id) && !members.has(id)) gap.add(id);
  }
  return gap;
}

function flowSccs(doc: WorkflowDoc): string[][] {
  const ids = doc.nodes.filter((n) => !isReflective(n)).map((n) => n.id);
  const idset = new Set(ids);
  const adj = new Map<string, string[]>(ids.map((i) => [i, []]));
  const selfLoops = new Set<string>();
  for (const e of flowEdges(doc)) {
    if (idset.has(e.from) && idset.has(e.to)) {
      adj.get(e.from)!.push(e.to);
      if (e.from === e.to) selfLoops.add(e.from);
    }
  }

  const index = new Map<string, number>();
  const low = new Map<string, number>();
  const onStack = new Set<string>();
  const stack: string[] = [];
  let counter = 0;
  const sccs: string[][] = [];

  for (const root of ids) {
    if (index.has(root)) continue;
    const work: Array<[string, number]> = [[root, 0]];
    while (work.length) {
      let [node, edgeI] = work[work.length - 1]!;
      if (edgeI === 0) {
        index.set(node, counter);
        low.set(node, counter);
        counter++;
        stack.push(node);
        onStack.add(node);
      }
      let advanced = false;
      const targets = adj.get(node)!;
      while (edgeI < targets.length) {
        const nxt = targets[edgeI]!;
        edgeI++;
        if (!index.has(nxt)) {
          work[work.length - 1] = [node, edgeI];
          work.push([nxt, 0]);
          advanced = true;
          break;
        }
        if (onStack.has(nxt)) {
          low.set(node, Math.min(low.get(node)!, index.get(nxt)!));
        }
      }
      if (advanced) continue;
      work.pop();
      if (low.get(node) === index.get(node)) {
        const comp: string[] = [];
        for (;;) {
          const top = stack.pop()!;
          onStack.delete(top);
          comp.push(top);
          if (top === node) break;
        }
        if (comp.length > 1 || selfLoops.has(node)) sccs.push(comp.sort(cmp));
      }
      if (work.length) {
        const parent = work[work.length - 1]![0];
        low.set(parent, Math.min(low.get(parent)!, low.get(node)!));
      }
    }
  }
  return sccs;
}

/** Every violation in the document, sorted by code, subjects, detail. */
export function validateDoc(
  doc: WorkflowDoc,
  opts: ValidateOptions = {},
): Violation[] {
  const maxGapS = opts.maxGapS ?? 1.0;
  const requireSingleSource = opts.requireSingleSource ?? true;
  const out: Violation[] = [];
  const byId = new Map<string, NodeDoc>(doc.nodes.map((n) => [n.id, n]));
  const duration = doc.video.duration_s;

  // span bounds
  for (const n of doc.nodes) {
    if (n.span[1] > duration) {
      out.push({
        code: "TimestampOutOfRange",
        subjects: [n.id],
        detail:
          `span [${fmtG(n.span[0])}, ${fmtG(n.span[1])}] exceeds ` +
          `duration ${fmtG(duration)}`,
      });
    }
  }

  // flow alternation and doing degree
  for (const e of flowEdges(doc)) {
    const src = byId.get(e.from);
    const dst = byId.get(e.to);
    if (src === undefined || dst === undefined) {
      out.push({
        code: "SequenceViolation",
        subjects: [e.id],
        detail: "flow edge endpoint missing",
      });
      continue;
    }
    const ok =
      (isThing(src) && isDoing(dst)) || (isDoing(src) && isThing(dst));
    if (!ok) {
      out.push({
        code: "SequenceViolation",
        subjects: [e.id],
        detail: "flow edges must alternate thing and doing",
      });
    }
  }
  for (const n of doc.nodes) {
    if (!isDoing(n)) continue;
    const fanIn = flowIn(doc, n.id).length;
    const fanOut = flowOut(doc, n.id).length;
    if (fanIn !== 1) {
      out.push({
        code: "SequenceViolation",
        subjects: [n.id],
        detail: `doing has flow in-degree ${fanIn}, expected 1`,
      });
    }
    if (fanOut !== 1) {
      out.push({
        code: "SequenceViolation",
        subjects: [n.id],
        detail: `doing has flow out-degree ${fanOut}, expected 1`,
      });
    }
  }

  // flow cycles
  for (const comp of flowSccs(doc)) {
    out.push({ code: "FlowCycle", subjects: comp, detail: "flow subgraph cycle" });
  }

  // single source
  if (requireSingleSource) {
    const sources = sourceThings(doc)
      .map((t) => t.id)
      .sort(cmp);
    if (sources.length !== 1) {
      out.push({
        code: "MultipleSources",
        subjects: sources,
        detail: `expected exactly one source thing, found ${sources.length}`,
      });
    }
  }

  // weak connectivity, anchored at the earliest source thing
  const components = weakComponents(doc);
  if (components.length > 1) {
    const sources = sourceThings(doc)
      .map((t) => [t.span[0], t.id] as const)
      .sort((a, b) => a[0] - b[0] || cmp(a[1], b[1]));
    const anchorId = sources.length ? sources[0]![1] : components[0]![0]!;
    for (const comp of components) {
      if (comp.includes(anchorId)) continue;
      out.push({
        code: "Disconnected",
        subjects: comp,
        detail: "not weakly connected to the source component",
      });
    }
  }

  // reflective loops
  const loopIds = new Set(doc.nodes.filter(isReflective).map((n) => n.id));
  const refl = doc.edges.filter((e) => e.kind === "reflective");
  for (const loop of doc.nodes.filter(isReflective)) {
    const attached = byId.get(loop.attached_thing);
    if (attached === undefined || !isThing(attached)) {
      out.push({
        code: "DanglingReflective",
        subjects: [loop.id],
        detail: `attached thing '${loop.attached_thing}' missing`,
      });
      continue;
    }
    const outward = refl.filter(
      (e) => e.from === loop.id && e.to === loop.attached_thing,
    );
    const inward = refl.filter(
      (e) => e.to === loop.id && e.from === loop.attached_thing,
    );
    const strays = refl.filter(
      (e) =>
        (e.from === loop.id || e.to === loop.id) &&
        !outward.includes(e) &&
        !inward.includes(e),
    );
    if (outward.length !== 1 || inward.length !== 1 || strays.length) {
      out.push({
        code: "DanglingReflective",
        subjects: [loop.id],
        detail:
          "loop needs exactly one reflective edge in each direction " +
          "to its attached thing",
      });
    }
  }
  for (const e of refl) {
    if (!loopIds.has(e.from) && !loopIds.has(e.to)) {
      out.push({
        code: "DanglingReflective",
        subjects: [e.id],
        detail: "reflective edge without a loop endpoint",
      });
    }
  }

  // segments: members exist, no repeats, no loops, convex, disjoint
  for (const seg of doc.segments) {
    const missing = seg.members.filter((m) => !byId.has(m));
    if (missing.length) {
      out.push({
        code: "NonConvexSegment",
        subjects: [seg.id],
        detail: `members missing from graph: ${reprList(missing)}`,
      });
      continue;
    }
    if (new Set(seg.members).size !== seg.members.length) {
      out.push({
        code: "NonConvexSegment",
        subjects: [seg.id],
        detail: "members repeat",
      });
      continue;
    }
    const loops = seg.members.filter((m) => isReflective(byId.get(m)!));
    if (loops.length) {
      out.push({
        code: "NonConvexSegment",
        subjects: [seg.id],
        detail: `loops cannot be segment members: ${reprList(loops)}`,
      });
      continue;
    }
    const gap = convexityGap(doc, new Set(seg.members));
    if (gap.size) {
      out.push({
        code: "NonConvexSegment",
        subjects: [seg.id],
        detail: `interior nodes excluded from segment: ${reprList([...gap].sort(cmp))}`,
      });
    }
  }
  for (let i = 0; i < doc.segments.length; i++) {
    for (let j = i + 1; j < doc.segments.length; j++) {
      const a = doc.segments[i]!;
      const b = doc.segments[j]!;
      const overlap = a.members.filter((m) => b.members.includes(m));
      if (overlap.length) {
        out.push({
          code: "NonConvexSegment",
          subjects: [a.id, b.id].sort(cmp),
          detail: `segments share members: ${reprList(overlap.slice().sort(cmp))}`,
        });
      }
    }
  }

  // revisions: thing endpoints, strictly backward in time
  for (const e of doc.edges) {
    if (e.kind !== "revision") continue;
    const src = byId.get(e.from);
    const dst = byId.get(e.to);
    if (src === undefined || dst === undefined || !isThing(src) || !isThing(dst)) {
      out.push({
        code: "SequenceViolation",
        subjects: [e.id],
        detail: "revision endpoints must be existing things",
      });
      continue;
    }
    if (dst.span[0] >= src.span[0]) {
      out.push({
        code: "RevisionForward",
        subjects: [e.id],
        detail:
          `target starts at ${fmtG(dst.span[0])}, not strictly before ` +
          `${fmtG(src.span[0])}`,
      });
    }
  }

  // coverage gaps
  for (const [a, b] of checkTemporalCoverage(doc, maxGapS)) {
    out.push({
      code: "TemporalGap",
      subjects: [],
      detail: `gap [${fmtG(a)}, ${fmtG(b)}]`,
    });
  }

  out.sort(
    (x, y) =>
      CODE_RANK.get(x.code)! - CODE_RANK.get(y.code)! ||
      cmpSubjects(x.subjects, y.subjects) ||
      cmp(x.detail, y.detail),
  );
  return out;
}
