/** Shared fixtures and transport fakes for the UI tests. */

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import type { Transport, TransportResponse } from "../src/api.js";
import type { WorkflowDoc } from "../src/types.js";

const HERE = dirname(fileURLToPath(import.meta.url));

export function loadFixture(name: string): WorkflowDoc {
  const raw = readFileSync(join(HERE, "fixtures", name), "utf8");
  return JSON.parse(raw) as WorkflowDoc;
}

export function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

/** Three-node chain in even thirds, the smallest clean workflow. */
export function chainDoc(): WorkflowDoc {
  return {
    version: 1,
    id: "w1",
    rev: 1,
    video: { uri: "video/demo.mp4", duration_s: 60 },
    nodes: [
      { id: "t1", kind: "thing", span: [0, 20], label: "Stock", detail: "medium" },
      { id: "d1", kind: "doing", span: [20, 40], label: "Cut", detail: "medium" },
      { id: "t2", kind: "thing", span: [40, 60], label: "Parts", detail: "medium" },
    ],
    edges: [
      { id: "f:t1:d1", kind: "flow", from: "t1", to: "d1" },
      { id: "f:d1:t2", kind: "flow", from: "d1", to: "t2" },
    ],
    segments: [],
    notes: [],
    links: [],
  };
}

export interface LoggedRequest {
  method: string;
  path: string;
  body?: unknown;
}

type Handler = (
  method: string,
  path: string,
  body?: unknown,
  headers?: Record<string, string>,
) => TransportResponse;

/** Scripted transport; `log` records every request made through it. */
export class FakeTransport implements Transport {
  readonly log: LoggedRequest[] = [];

  constructor(private readonly handler: Handler) {}

  request(
    method: string,
    path: string,
    body?: unknown,
    headers?: Record<string, string>,
  ): Promise<TransportResponse> {
    this.log.push({ method, path, body });
    return Promise.resolve(this.handler(method, path, body, headers));
  }

  requestsOtherThanGet(): LoggedRequest[] {
    return this.log.filter((r) => r.method !== "GET");
  }
}

/** Transport serving one workflow the way the real service would. */
export function serviceFake(
  doc: WorkflowDoc,
  opts: {
    token?: string;
    onPut?: (body: WorkflowDoc) => TransportResponse | null;
  } = {},
): FakeTransport {
  const token = opts.token ?? "secret-token";
  let stored = clone(doc);
  return new FakeTransport((method, path, body, headers) => {
    if (method === "GET" && path === "/healthz") {
      return { status: 200, body: { status: "ok" } };
    }
    if (method === "GET" && path === `/workflows/${stored.id}`) {
      return { status: 200, body: clone(stored) };
    }
    if (method === "GET" && path === `/workflows/${stored.id}/restore`) {
      return {
        status: 200,
        body: { capability: "read-only", workflow: clone(stored) },
      };
    }
    if (method === "PUT" && path === `/workflows/${stored.id}`) {
      if (headers?.["X-Edit-Token"] !== token) {
        return { status: 403, body: { detail: "bad edit token" } };
      }
      const custom = opts.onPut?.(body as WorkflowDoc);
      if (custom) return custom;
      stored = clone(body as WorkflowDoc);
      stored.rev = stored.rev + 1;
      return { status: 200, body: { id: stored.id, rev: stored.rev } };
    }
    return { status: 404, body: { detail: "not found" } };
  });
}
