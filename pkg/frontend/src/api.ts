// Thin typed client for the service. The estimate is kept as the raw
// response text: the bytes the CLI prints and the bytes shown here must be
// the same document, so no parse/re-serialize round trip touches it.

import type {
  EstimateDoc,
  Mutation,
  MutationResponse,
  OpenResponse,
  ProjectDoc,
  WarningsResponse,
} from "./types.js";

export interface EstimateResult {
  raw: string;
  doc: EstimateDoc;
  revision: number;
}

export class ApiError extends Error {
  status: number;
  missing: string[];

  constructor(status: number, message: string, missing: string[] = []) {
    super(message);
    this.status = status;
    this.missing = missing;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private base: string;
  private fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = (u, i) => fetch(u, i)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let message = `${resp.status}`;
      let missing: string[] = [];
      try {
        const body = await resp.json();
        if (typeof body.error === "string") message = body.error;
        if (Array.isArray(body.missing)) missing = body.missing;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(resp.status, message, missing);
    }
    return resp;
  }

  async openSession(path: string): Promise<OpenResponse> {
    const resp = await this.request("/session", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ path }),
    });
    return resp.json();
  }

  async getProject(sid: string): Promise<{ project: ProjectDoc; revision: number }> {
    const resp = await this.request(`/session/${sid}/project`);
    const revision = Number(resp.headers.get("X-Revision") ?? "0");
    return { project: await resp.json(), revision };
  }

  async getWarnings(sid: string): Promise<WarningsResponse> {
    const resp = await this.request(`/session/${sid}/warnings`);
    return resp.json();
  }

  async postMutations(sid: string, mutations: Mutation[]): Promise<MutationResponse> {
    const resp = await this.request(`/session/${sid}/mutations`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mutations }),
    });
    return resp.json();
  }

  async getEstimate(sid: string, prefixTable = false): Promise<EstimateResult> {
    const query = prefixTable ? "?prefix_table=true" : "";
    const resp = await this.request(`/session/${sid}/estimate${query}`);
    const raw = await resp.text();
    return {
      raw,
      doc: JSON.parse(raw) as EstimateDoc,
      revision: Number(resp.headers.get("X-Revision") ?? "0"),
    };
  }

  async save(sid: string): Promise<{ revision: number; path: string }> {
    const resp = await this.request(`/session/${sid}/save`, { method: "POST" });
    return resp.json();
  }

  frameUrl(sid: string, index: number): string {
    return `${this.base}/frames/${index}.png?session=${encodeURIComponent(sid)}`;
  }

  previewUrl(sid: string, frame?: number, pxPerM = 40): string {
    const params = new URLSearchParams({ px_per_m: String(pxPerM) });
    if (frame !== undefined) params.set("frame", String(frame));
    return `${this.base}/session/${sid}/rectified-preview.png?${params}`;
  }
}
