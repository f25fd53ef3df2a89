// Session state: one open project, the server as the single source of
// truth. Every mutation round-trips; we re-fetch rather than patching the
// local copy, so the UI can never drift from what the service holds.

import { ApiError, Client } from "./api.js";
import type { EstimateResult } from "./api.js";
import type { Mutation, PixelPoint, ProjectDoc } from "./types.js";

export class SessionStore {
  client: Client;
  sid: string | null = null;
  revision = 0;
  project: ProjectDoc | null = null;
  warnings: string[] = [];
  estimate: EstimateResult | null = null;
  estimateMissing: string[] = [];
  estimateError: string | null = null;
  stagedCorners = 0;
  lastError: string | null = null;
  prefixTable = false;

  private listeners: Array<() => void> = [];

  constructor(client: Client) {
    this.client = client;
  }

  subscribe(fn: () => void): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((f) => f !== fn);
    };
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  async open(path: string): Promise<void> {
    const opened = await this.client.openSession(path);
    this.sid = opened.session_id;
    this.revision = opened.revision;
    this.project = opened.project;
    this.lastError = null;
    await this.refreshDerived();
  }

  private async refreshDerived(): Promise<void> {
    if (this.sid === null) return;
    const w = await this.client.getWarnings(this.sid);
    this.warnings = w.warnings;
    try {
      this.estimate = await this.client.getEstimate(this.sid, this.prefixTable);
      this.estimateMissing = [];
      this.estimateError = null;
    } catch (e) {
      this.estimate = null;
      if (e instanceof ApiError && e.status === 422) {
        this.estimateMissing = e.missing;
        this.estimateError = e.missing.length > 0 ? null : e.message;
      } else {
        throw e;
      }
    }
    this.emit();
  }

  async mutate(mutations: Mutation[]): Promise<boolean> {
    if (this.sid === null) throw new Error("no open session");
    try {
      const resp = await this.client.postMutations(this.sid, mutations);
      this.revision = resp.revision;
      this.stagedCorners = resp.staged_grid_corners;
      this.lastError = null;
    } catch (e) {
      if (e instanceof ApiError && e.status === 409) {
        this.lastError = e.message;
        this.emit();
        return false;
      }
      throw e;
    }
    const got = await this.client.getProject(this.sid);
    this.project = got.project;
    await this.refreshDerived();
    return true;
  }

  async setPrefixTable(on: boolean): Promise<void> {
    this.prefixTable = on;
    await this.refreshDerived();
  }

  async save(): Promise<string> {
    if (this.sid === null) throw new Error("no open session");
    const saved = await this.client.save(this.sid);
    return saved.path;
  }

  // mutation shorthands used by the UI event handlers

  addContactPoint(frame: number, p: PixelPoint, m: number): Promise<boolean> {
    return this.mutate([{ op: "add_contact_point", frame, x: p.x, y: p.y, m }]);
  }

  moveContactPoint(index: number, p: PixelPoint): Promise<boolean> {
    return this.mutate([{ op: "move_contact_point", index, x: p.x, y: p.y }]);
  }

  deleteContactPoint(index: number): Promise<boolean> {
    return this.mutate([{ op: "delete_contact_point", index }]);
  }

  setM(index: number, m: number): Promise<boolean> {
    return this.mutate([{ op: "set_m", index, m }]);
  }

  addGridCorner(p: PixelPoint): Promise<boolean> {
    return this.mutate([{ op: "add_grid_corner", x: p.x, y: p.y }]);
  }

  setGridSize(widthM: number, heightM: number): Promise<boolean> {
    return this.mutate([{ op: "set_grid_size", width_m: widthM, height_m: heightM }]);
  }

  clearGrid(): Promise<boolean> {
    return this.mutate([{ op: "clear_grid" }]);
  }

  setDeltaT(deltaTs: number): Promise<boolean> {
    return this.mutate([{ op: "set_delta_t", delta_t_s: deltaTs }]);
  }
}
