import { describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function respond(handler: (url: string, init?: RequestInit) => Response) {
  const calls: Call[] = [];
  const fn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return handler(url, init);
  };
  return { fn, calls };
}

function json(body: unknown, status = 200, headers: Record<string, string> = {}): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json", ...headers },
  });
}

describe("Client", () => {
  it("opens a session by posting the project path", async () => {
    const { fn, calls } = respond(() =>
      json({ session_id: "abc", revision: 0, project: { schema_version: 1 } }),
    );
    const client = new Client("", fn);
    const opened = await client.openSession("/tmp/pass1.fsp");
    expect(opened.session_id).toBe("abc");
    expect(calls[0]?.url).toBe("/session");
    expect(calls[0]?.init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ path: "/tmp/pass1.fsp" });
  });

  it("reads the revision from the X-Revision header", async () => {
    const { fn } = respond(() => json({ schema_version: 1 }, 200, { "X-Revision": "7" }));
    const client = new Client("", fn);
    const got = await client.getProject("abc");
    expect(got.revision).toBe(7);
  });

  it("keeps the estimate body byte for byte", async () => {
    const raw = '{\n  "v_mph": 30.0,\n  "schema_version": 1\n}\n';
    const { fn, calls } = respond(() => new Response(raw, { status: 200, headers: { "X-Revision": "3" } }));
    const client = new Client("", fn);
    const est = await client.getEstimate("abc");
    expect(est.raw).toBe(raw);
    expect(est.doc.v_mph).toBe(30.0);
    expect(est.revision).toBe(3);
    expect(calls[0]?.url).toBe("/session/abc/estimate");
  });

  it("requests the prefix table via the query string", async () => {
    const { fn, calls } = respond(() => new Response("{}", { status: 200 }));
    const client = new Client("", fn);
    await client.getEstimate("abc", true);
    expect(calls[0]?.url).toBe("/session/abc/estimate?prefix_table=true");
  });

  it("posts mutation batches unchanged", async () => {
    const { fn, calls } = respond(() => json({ revision: 2, staged_grid_corners: 1 }));
    const client = new Client("", fn);
    const muts = [{ op: "add_grid_corner", x: 1.5, y: 2.5 }];
    const resp = await client.postMutations("abc", muts);
    expect(resp.staged_grid_corners).toBe(1);
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ mutations: muts });
  });

  it("maps service errors onto ApiError with the missing list", async () => {
    const { fn } = respond(() =>
      json({ error: "incomplete annotation", missing: ["grid"], revision: 0 }, 422),
    );
    const client = new Client("", fn);
    const err = await client.getEstimate("abc").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.message).toBe("incomplete annotation");
    expect(err.missing).toEqual(["grid"]);
  });

  it("falls back to the status code for non-JSON error bodies", async () => {
    const { fn } = respond(() => new Response("boom", { status: 500 }));
    const client = new Client("", fn);
    const err = await client.getProject("abc").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(500);
    expect(err.message).toBe("500");
    expect(err.missing).toEqual([]);
  });

  it("builds frame and preview URLs against its base", async () => {
    const client = new Client("http://127.0.0.1:8765/");
    expect(client.frameUrl("abc", 3)).toBe("http://127.0.0.1:8765/frames/3.png?session=abc");
    expect(client.previewUrl("abc", 0, 10)).toBe(
      "http://127.0.0.1:8765/session/abc/rectified-preview.png?px_per_m=10&frame=0",
    );
    expect(client.previewUrl("abc")).toBe(
      "http://127.0.0.1:8765/session/abc/rectified-preview.png?px_per_m=40",
    );
  });
});
