/** Wire types for the workflow JSON documents the service speaks. */

export type Detail = "low" | "medium" | "high";

export const DETAIL_ORDER: readonly Detail[] = ["low", "medium", "high"];

export function detailRank(d: Detail | undefined): number {
  return DETAIL_ORDER.indexOf(d ?? "medium");
}

export interface ThingDoc {
  id: string;
  kind: "thing";
  span: [number, number];
  label: string;
  detail?: Detail;
  stuff?: string[];
  description?: string;
}

export interface DoingDoc {
  id: string;
  kind: "doing";
  span: [number, number];
  label: string;
  detail?: Detail;
  tools?: string[];
  description?: string;
}

export interface ReflectiveDoc {
  id: string;
  kind: "reflective";
  span: [number, number];
  attached_thing: string;
  sensing: string;
  adjustment?: string;
  detail?: Detail;
}

export type NodeDoc = ThingDoc | DoingDoc | ReflectiveDoc;

export type EdgeKind = "flow" | "reflective" | "revision";

export interface EdgeDoc {
  id: string;
  kind: EdgeKind;
  from: string;
  to: string;
  label?: string;
}

export interface SegmentDoc {
  id: string;
  title: string;
  members: string[];
}

export interface NoteDoc {
  id: string;
  target: string;
  text: string;
  author?: string;
  created_at?: string;
}

export interface LinkDoc {
  id: string;
  target: string;
  url: string;
  title?: string;
  source: "detected" | "searched" | "manual";
}

export interface WorkflowDoc {
  version: 1;
  id: string;
  rev: number;
  video: { uri: string; duration_s: number; title?: string };
  nodes: NodeDoc[];
  edges: EdgeDoc[];
  segments: SegmentDoc[];
  notes: NoteDoc[];
  links: LinkDoc[];
}

/** Violation codes, mirroring the service's validator. */
export type ViolationCode =
  | "Disconnected"
  | "TemporalGap"
  | "SequenceViolation"
  | "DanglingReflective"
  | "NonConvexSegment"
  | "TimestampOutOfRange"
  | "RevisionForward"
  | "FlowCycle"
  | "MultipleSources";

export const CODE_ORDER: readonly ViolationCode[] = [
  "Disconnected",
  "TemporalGap",
  "SequenceViolation",
  "DanglingReflective",
  "NonConvexSegment",
  "TimestampOutOfRange",
  "RevisionForward",
  "FlowCycle",
  "MultipleSources",
];

export interface Violation {
  code: ViolationCode;
  subjects: string[];
  detail: string;
}

export function isThing(n: NodeDoc): n is ThingDoc {
  return n.kind === "thing";
}

export function isDoing(n: NodeDoc): n is DoingDoc {
  return n.kind === "doing";
}

export function isReflective(n: NodeDoc): n is ReflectiveDoc {
  return n.kind === "reflective";
}
