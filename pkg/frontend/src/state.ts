/**
 * Canvas state and the edit/restore mode gate.
 *
 * Every mutating path funnels through requireEdit(), so a controller in
 * restore mode can be driven arbitrarily without ever issuing a request
 * that is not a GET. Fetch failures leave the last good state in place.
 */

import type { Violation, WorkflowDoc } from "./types.js";
import type { ApiClient } from "./api.js";
import { validateDoc } from "./validate.js";
import type { FidelityLevel, GraphView } from "./views.js";
import { collapseSegment, computeView, expandSegment } from "./views.js";

export type Mode = "edit" | "restore";

export class EditBlocked extends Error {
  constructor() {
    super("read-only view, editing is disabled");
  }
}

export interface CanvasState {
  workflowId: string | null;
  doc: WorkflowDoc | null;
  baseRev: number;
  dirty: boolean;
  mode: Mode;
  token: string | null;
  level: FidelityLevel;
  collapsed: string[];
  selection: string | null;
  playheadS: number;
  violations: Violation[];
  serverViolations: Violation[];
  notice: string;
}

export class CanvasController {
  readonly state: CanvasState = {
    workflowId: null,
    doc: null,
    baseRev: 0,
    dirty: false,
    mode: "restore",
    token: null,
    level: "high",
    collapsed: [],
    selection: null,
    playheadS: 0,
    violations: [],
    serverViolations: [],
    notice: "",
  };

  private listeners: Array<() => void> = [];

  constructor(private readonly api: ApiClient) {}

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  /** Load a workflow; a token opens it editable, otherwise read-only. */
  async load(workflowId: string, token: string | null): Promise<void> {
    const s = this.state;
    try {
      if (token) {
        const doc = await this.api.getWorkflow(workflowId);
        if (doc === null) {
          s.notice = `no workflow '${workflowId}'`;
          this.emit();
          return;
        }
        s.doc = doc;
        s.mode = "edit";
        s.token = token;
      } else {
        const payload = await this.api.getRestore(workflowId);
        if (payload === null) {
          s.notice = `no workflow '${workflowId}'`;
          this.emit();
          return;
        }
        s.doc = payload.workflow;
        s.mode = "restore";
        s.token = null;
      }
    } catch (err) {
      s.notice = `load failed: ${String(err)}`;
      this.emit();
      return;
    }
    s.workflowId = workflowId;
    s.baseRev = s.doc.rev;
    s.dirty = false;
    s.collapsed = [];
    s.selection = null;
    s.playheadS = 0;
    s.violations = validateDoc(s.doc);
    s.serverViolations = [];
    s.notice = "";
    this.emit();
  }

  view(): GraphView {
    const s = this.state;
    if (s.doc === null) {
      return { level: s.level, collapsed: [], visible: [], summaries: [] };
    }
    return computeView(s.doc, s.level, s.collapsed);
  }

  setFidelity(level: FidelityLevel): void {
    this.state.level = level;
    this.emit();
  }

  toggleSegment(segmentId: string): void {
    const s = this.state;
    if (s.doc === null) return;
    const current = this.view();
    const next = s.collapsed.includes(segmentId)
      ? expandSegment(s.doc, current, segmentId)
      : collapseSegment(s.doc, current, segmentId);
    s.collapsed = next.collapsed;
    this.emit();
  }

  /** Select a node and jump the playhead to its span start. */
  seek(nodeId: string): void {
    const s = this.state;
    const node = s.doc?.nodes.find((n) => n.id === nodeId);
    if (node === undefined) return;
    s.selection = nodeId;
    s.playheadS = node.span[0];
    this.emit();
  }

  private requireEdit(): void {
    if (this.state.mode !== "edit" || this.state.token === null) {
      throw new EditBlocked();
    }
  }

  /** Apply a pure edit; client-side verdicts refresh immediately. */
  apply(edit: (doc: WorkflowDoc) => WorkflowDoc): void {
    this.requireEdit();
    const s = this.state;
    if (s.doc === null) throw new EditBlocked();
    s.doc = edit(s.doc);
    s.dirty = true;
    s.violations = validateDoc(s.doc);
    this.emit();
  }

  /**
   * PUT the whole graph. Refuses while client-side violations stand,
   * checks for a newer revision first, and downgrades to read-only when
   * the token is rejected.
   */
  async save(): Promise<boolean> {
    this.requireEdit();
    const s = this.state;
    if (s.doc === null || s.workflowId === null) throw new EditBlocked();
    if (s.violations.length) {
      s.notice = `resolve ${s.violations.length} violation(s) before saving`;
      this.emit();
      return false;
    }

    let latest: WorkflowDoc | null = null;
    try {
      latest = await this.api.getWorkflow(s.workflowId);
    } catch (err) {
      s.notice = `save aborted, revision check failed: ${String(err)}`;
      this.emit();
      return false;
    }
    if (latest !== null && latest.rev !== s.baseRev) {
      s.notice =
        `workflow changed elsewhere (rev ${latest.rev}, ` +
        `loaded rev ${s.baseRev}); reload before saving`;
      this.emit();
      return false;
    }

    let result;
    try {
      result = await this.api.update(s.workflowId, s.doc, s.token!);
    } catch (err) {
      s.notice = `save failed: ${String(err)}`;
      this.emit();
      return false;
    }
    if (result.kind === "forbidden") {
      s.mode = "restore";
      s.token = null;
      s.notice = "edit token rejected; switched to read-only";
      this.emit();
      return false;
    }
    if (result.kind === "missing") {
      s.notice = "workflow no longer exists";
      this.emit();
      return false;
    }
    if (result.kind === "rejected") {
      s.serverViolations = result.violations;
      s.notice = "server rejected the save; see the violation list";
      this.emit();
      return false;
    }
    s.doc = { ...s.doc, rev: result.rev };
    s.baseRev = result.rev;
    s.dirty = false;
    s.serverViolations = result.violations;
    s.notice = `saved rev ${result.rev}`;
    this.emit();
    return true;
  }

  /** Re-fetch the current workflow, dropping local edits. */
  async refresh(): Promise<void> {
    const s = this.state;
    if (s.workflowId === null) return;
    await this.load(s.workflowId, s.token);
  }

  /** Client and server verdicts together, for inline display. */
  allViolations(): Violation[] {
    const s = this.state;
    const seen = new Set<string>();
    const out: Violation[] = [];
    for (const v of [...s.violations, ...s.serverViolations]) {
      const key = `${v.code}|${v.subjects.join(",")}|${v.detail}`;
      if (!seen.has(key)) {
        seen.add(key);
        out.push(v);
      }
    }
    return out;
  }

  violationsFor(nodeId: string): Violation[] {
    return this.allViolations().filter((v) => v.subjects.includes(nodeId));
  }
}
