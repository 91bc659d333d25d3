import { describe, expect, it } from "vitest";
import { ApiError, VesselForgeClient, type FetchLike } from "../src/api.js";
import { CanvasState } from "../src/state.js";

type Call = { url: string; init?: Parameters<FetchLike>[1] };

function mockFetch(
  responder: (url: string, body: unknown) => { status: number; body: unknown },
): { fetchFn: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const parsed = init?.body ? JSON.parse(init.body) : undefined;
    const { status, body } = responder(url, parsed);
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => body,
    };
  };
  return { fetchFn, calls };
}

const PARAMS = { seed: 3, density: 0.07, streakLen: 5, blurSigma: 1.2 };

describe("VesselForgeClient.forge", () => {
  it("posts the snake_case payload the service expects", async () => {
    const { fetchFn, calls } = mockFetch(() => ({
      status: 200,
      body: { image_b64: "abc", provenance: { seed: 3 } },
    }));
    const client = new VesselForgeClient("http://svc", fetchFn);
    const result = await client.forge("DOODLE", PARAMS);
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://svc/forge");
    expect(calls[0].init?.headers).toEqual({ "Content-Type": "application/json" });
    expect(JSON.parse(calls[0].init!.body!)).toEqual({
      image_b64: "DOODLE",
      seed: 3,
      density: 0.07,
      streak_len: 5,
      blur_sigma: 1.2,
    });
    expect(result.imageB64).toBe("abc");
    expect(result.provenance.seed).toBe(3);
  });

  it("raises ApiError with the service detail on 4xx", async () => {
    const { fetchFn } = mockFetch(() => ({
      status: 400,
      body: { detail: "dims (33, 32) not divisible by N=4" },
    }));
    const client = new VesselForgeClient("", fetchFn);
    const err = await client.forge("x", PARAMS).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).message).toContain("divisible");
  });

  it("wraps network failures as status 0", async () => {
    const fetchFn: FetchLike = async () => {
      throw new TypeError("connection refused");
    };
    const client = new VesselForgeClient("", fetchFn);
    const err = await client.forge("x", PARAMS).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(0);
  });
});

describe("VesselForgeClient.superres", () => {
  it("posts only the image payload", async () => {
    const { fetchFn, calls } = mockFetch(() => ({
      status: 200,
      body: { image_b64: "hi", provenance: { scale: 4 } },
    }));
    const client = new VesselForgeClient("", fetchFn);
    const result = await client.superres("LOWRES");
    expect(calls[0].url).toBe("/superres");
    expect(JSON.parse(calls[0].init!.body!)).toEqual({ image_b64: "LOWRES" });
    expect(result.imageB64).toBe("hi");
  });

  it("surfaces the no-model 400", async () => {
    const { fetchFn } = mockFetch(() => ({
      status: 400,
      body: { detail: "no SR model loaded" },
    }));
    const client = new VesselForgeClient("", fetchFn);
    await expect(client.superres("x")).rejects.toThrow(/no SR model/);
  });
});

describe("VesselForgeClient.health", () => {
  it("parses the model listing", async () => {
    const { fetchFn } = mockFetch(() => ({
      status: 200,
      body: { status: "ok", models: { generator: "generator.ckpt" } },
    }));
    const client = new VesselForgeClient("", fetchFn);
    const h = await client.health();
    expect(h.status).toBe("ok");
    expect(h.models.generator).toBe("generator.ckpt");
  });
});

describe("failure leaves drawing state intact", () => {
  it("strokes and params survive a failed forge round-trip", async () => {
    const state = new CanvasState(64, 64);
    state.beginStroke({ x: 1, y: 1 }, 4);
    state.extendStroke({ x: 50, y: 50 });
    const before = JSON.stringify(state.snapshotStrokes());

    const { fetchFn } = mockFetch(() => ({
      status: 413,
      body: { detail: "image too large" },
    }));
    const client = new VesselForgeClient("", fetchFn);
    state.pending = true;
    try {
      await client.forge("payload", state.params);
    } catch (err) {
      state.lastError = (err as ApiError).message;
    } finally {
      state.pending = false;
    }

    expect(state.lastError).toContain("413");
    expect(state.pending).toBe(false);
    expect(JSON.stringify(state.snapshotStrokes())).toBe(before);
    expect(state.params.seed).toBe(0);
    expect(state.gallery).toHaveLength(0);
  });
});
