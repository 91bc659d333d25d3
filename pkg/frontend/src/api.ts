import type { ForgeParams, ForgeResult, Provenance } from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
  }
}

interface ImageResponse {
  image_b64: string;
  provenance: Record<string, unknown>;
}

async function postJson(
  fetchFn: FetchLike,
  url: string,
  payload: unknown,
): Promise<ImageResponse> {
  let resp;
  try {
    resp = await fetchFn(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  } catch (err) {
    throw new ApiError(0, `network failure: ${String(err)}`);
  }
  const body = (await resp.json().catch(() => ({}))) as Record<string, unknown>;
  if (!resp.ok) {
    const detail =
      typeof body.detail === "string" ? body.detail : JSON.stringify(body);
    throw new ApiError(resp.status, detail);
  }
  return body as unknown as ImageResponse;
}

/** Thin client for the forgery service; fetch is injectable for tests. */
export class VesselForgeClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn =
      fetchFn ?? ((globalThis as { fetch?: FetchLike }).fetch as FetchLike);
    if (!this.fetchFn) throw new Error("no fetch implementation available");
  }

  async health(): Promise<{ status: string; models: Record<string, string> }> {
    const resp = await this.fetchFn(`${this.base}/health`);
    if (!resp.ok) throw new ApiError(resp.status, "health check failed");
    return (await resp.json()) as { status: string; models: Record<string, string> };
  }

  async forge(doodleB64: string, params: ForgeParams): Promise<ForgeResult> {
    const body = await postJson(this.fetchFn, `${this.base}/forge`, {
      image_b64: doodleB64,
      seed: params.seed,
      density: params.density,
      streak_len: params.streakLen,
      blur_sigma: params.blurSigma,
    });
    return {
      imageB64: body.image_b64,
      provenance: body.provenance as unknown as Provenance,
    };
  }

  async superres(imageB64: string): Promise<ForgeResult> {
    const body = await postJson(this.fetchFn, `${this.base}/superres`, {
      image_b64: imageB64,
    });
    return {
      imageB64: body.image_b64,
      provenance: body.provenance as unknown as Provenance,
    };
  }
}
