/**
 * Thin HTTP client for the workflow service.
 *
 * All traffic goes through a Transport so tests can swap in a recording
 * or scripted fake; FetchTransport is the real one.
 */

import type { Violation, WorkflowDoc } from "./types.js";

export interface TransportResponse {
  status: number;
  body: unknown;
}

export interface Transport {
  request(
    method: string,
    path: string,
    body?: unknown,
    headers?: Record<string, string>,
  ): Promise<TransportResponse>;
}

export class FetchTransport implements Transport {
  constructor(private readonly baseUrl: string) {}

  async request(
    method: string,
    path: string,
    body?: unknown,
    headers?: Record<string, string>,
  ): Promise<TransportResponse> {
    const init: RequestInit = { method, headers: { ...headers } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      (init.headers as Record<string, string>)["Content-Type"] =
        "application/json";
    }
    const res = await fetch(this.baseUrl + path, init);
    const text = await res.text();
    let parsed: unknown = text;
    const ctype = res.headers.get("content-type") ?? "";
    if (ctype.includes("json") && text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = text;
      }
    }
    return { status: res.status, body: parsed };
  }
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly body: unknown,
  ) {
    super(message);
  }
}

export interface CreateResult {
  id: string;
  editToken: string;
  rev: number;
  violations: Violation[];
}

export type SaveResult =
  | { kind: "ok"; rev: number; violations: Violation[] }
  | { kind: "rejected"; violations: Violation[] }
  | { kind: "forbidden" }
  | { kind: "missing" };

export interface RestorePayload {
  capability: string;
  workflow: WorkflowDoc;
}

function asRecord(x: unknown): Record<string, unknown> {
  return typeof x === "object" && x !== null ? (x as Record<string, unknown>) : {};
}

function violationsOf(body: unknown): Violation[] {
  const v = asRecord(body)["violations"];
  return Array.isArray(v) ? (v as Violation[]) : [];
}

export class ApiClient {
  constructor(private readonly transport: Transport) {}

  async health(): Promise<boolean> {
    try {
      const res = await this.transport.request("GET", "/healthz");
      return res.status === 200;
    } catch {
      return false;
    }
  }

  async create(doc: WorkflowDoc): Promise<CreateResult> {
    const res = await this.transport.request("POST", "/workflows", doc);
    if (res.status !== 201) {
      throw new ApiError(`create failed (${res.status})`, res.status, res.body);
    }
    const rec = asRecord(res.body);
    return {
      id: String(rec["id"]),
      editToken: String(rec["edit_token"]),
      rev: Number(rec["rev"]),
      violations: violationsOf(res.body),
    };
  }

  async getWorkflow(id: string, rev?: number): Promise<WorkflowDoc | null> {
    const query = rev === undefined ? "" : `?rev=${rev}`;
    const res = await this.transport.request(
      "GET",
      `/workflows/${encodeURIComponent(id)}${query}`,
    );
    if (res.status === 404) return null;
    if (res.status !== 200) {
      throw new ApiError(`fetch failed (${res.status})`, res.status, res.body);
    }
    return res.body as WorkflowDoc;
  }

  async getRestore(id: string): Promise<RestorePayload | null> {
    const res = await this.transport.request(
      "GET",
      `/workflows/${encodeURIComponent(id)}/restore`,
    );
    if (res.status === 404) return null;
    if (res.status !== 200) {
      throw new ApiError(`fetch failed (${res.status})`, res.status, res.body);
    }
    const rec = asRecord(res.body);
    return {
      capability: String(rec["capability"]),
      workflow: rec["workflow"] as WorkflowDoc,
    };
  }

  async update(id: string, doc: WorkflowDoc, token: string): Promise<SaveResult> {
    const res = await this.transport.request(
      "PUT",
      `/workflows/${encodeURIComponent(id)}`,
      doc,
      { "X-Edit-Token": token },
    );
    if (res.status === 403) return { kind: "forbidden" };
    if (res.status === 404) return { kind: "missing" };
    if (res.status === 422) {
      return { kind: "rejected", violations: violationsOf(res.body) };
    }
    if (res.status !== 200) {
      throw new ApiError(`save failed (${res.status})`, res.status, res.body);
    }
    const rec = asRecord(res.body);
    return {
      kind: "ok",
      rev: Number(rec["rev"]),
      violations: violationsOf(res.body),
    };
  }
}
