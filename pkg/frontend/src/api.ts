import type { AskResponse, GraphPayload, HealthResponse, TtpDocument } from "./types";

/**
 * Service base URL: a <meta name="ttpkit-service-url"> tag overrides at
 * runtime (desk setups serve the UI and the API from different ports);
 * otherwise same-origin relative paths are used.
 */
export function serviceUrl(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="ttpkit-service-url"]');
  const value = meta?.content?.trim() ?? "";
  return value.replace(/\/+$/, "");
}

/** HTTP-level failure; `kind` carries the service's error taxonomy name. */
export class ApiError extends Error {
  constructor(
    public status: number,
    public kind: string,
  ) {
    super(`${status}: ${kind}`);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(serviceUrl() + path, init);
  if (!response.ok) {
    let kind = response.statusText || `HTTP ${response.status}`;
    try {
      const body = await response.json();
      if (typeof body?.detail === "string") kind = body.detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(response.status, kind);
  }
  return (await response.json()) as T;
}

export function ask(question: string, topK?: number): Promise<AskResponse> {
  return request<AskResponse>("/ask", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(topK === undefined ? { question } : { question, top_k: topK }),
  });
}

export function getPackage(name: string): Promise<TtpDocument[]> {
  return request<TtpDocument[]>(`/packages/${encodeURIComponent(name)}`);
}

export function getGraph(): Promise<GraphPayload> {
  return request<GraphPayload>("/graph?format=json");
}

export function getHealth(): Promise<HealthResponse> {
  return request<HealthResponse>("/healthz");
}
