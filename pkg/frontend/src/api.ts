/** Thin typed wrappers over the matting service HTTP API. */

import type { PatchBox } from "./patches.js";
import type { ServerState } from "./state.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function expectJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = `${resp.status}`;
    try {
      detail = ((await resp.json()) as { detail?: string }).detail ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class MattingApi {
  constructor(private base = "") {}

  async createSession(file: File): Promise<ServerState> {
    const form = new FormData();
    form.append("image", file);
    return expectJson(await fetch(`${this.base}/session`, { method: "POST", body: form }));
  }

  async click(id: string, row: number, col: number, polarity: "fg" | "bg"):
      Promise<ServerState> {
    return expectJson(await fetch(`${this.base}/session/${id}/click`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ row, col, polarity }),
    }));
  }

  async undo(id: string): Promise<ServerState> {
    return expectJson(await fetch(`${this.base}/session/${id}/undo`, { method: "POST" }));
  }

  async refine(id: string, k: number): Promise<{ id: string; K: number; patches: PatchBox[] }> {
    return expectJson(await fetch(`${this.base}/session/${id}/refine`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ K: k }),
    }));
  }

  async state(id: string): Promise<ServerState> {
    return expectJson(await fetch(`${this.base}/session/${id}/state`));
  }

  imageUrl(id: string): string {
    return `${this.base}/session/${id}/image.png`;
  }

  alphaUrl(id: string): string {
    // cache-bust: the matte changes under the same URL after each click
    return `${this.base}/session/${id}/alpha.png?t=${Date.now()}`;
  }

  async uncertainty(id: string):
      Promise<{ blob: Blob; sigmaMin: number; sigmaMax: number }> {
    const resp = await fetch(`${this.base}/session/${id}/uncertainty.png?t=${Date.now()}`);
    if (!resp.ok) throw new ApiError(resp.status, "uncertainty unavailable");
    return {
      blob: await resp.blob(),
      sigmaMin: parseFloat(resp.headers.get("X-Sigma-Min") ?? "0"),
      sigmaMax: parseFloat(resp.headers.get("X-Sigma-Max") ?? "1"),
    };
  }
}
