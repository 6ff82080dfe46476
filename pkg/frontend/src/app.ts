/**
 * URL routing and boot.
 *
 * /{id}            read-only (no token in hand)
 * /{id}#token      editable with that token
 * /{id}/restore    the share view, read-only by capability
 */

import { ApiClient, FetchTransport } from "./api.js";
import type { Transport } from "./api.js";
import { CanvasController } from "./state.js";
import { renderApp } from "./render.js";

export interface Route {
  workflowId: string;
  restore: boolean;
  token: string | null;
}

export function parseRoute(pathname: string, hash: string): Route | null {
  const parts = pathname.split("/").filter((p) => p.length > 0);
  if (parts.length === 0 || parts.length > 2) return null;
  const workflowId = decodeURIComponent(parts[0]!);
  if (parts.length === 2) {
    if (parts[1] !== "restore") return null;
    return { workflowId, restore: true, token: null };
  }
  const token = hash.startsWith("#") ? hash.slice(1) : hash;
  return { workflowId, restore: false, token: token.length ? token : null };
}

export function apiBase(doc: Document): string {
  const meta = doc.querySelector('meta[name="api-base"]');
  return meta?.getAttribute("content") ?? "";
}

export async function boot(
  root: HTMLElement,
  route: Route | null,
  transport?: Transport,
): Promise<CanvasController> {
  const api = new ApiClient(
    transport ?? new FetchTransport(apiBase(document)),
  );
  const ctrl = new CanvasController(api);
  ctrl.onChange(() => renderApp(root, ctrl));
  renderApp(root, ctrl);
  if (route !== null) {
    await ctrl.load(route.workflowId, route.restore ? null : route.token);
  }
  return ctrl;
}
