/**
 * Gateway client: POST text, receive WAV bytes plus header metadata.
 *
 * The vowelized echo arrives percent-encoded in X-Vowelized-Text because
 * HTTP headers cannot carry raw Arabic.
 */

import type { Emotion } from "./state.js";

export interface SynthesisResult {
  audio: Blob;
  vowelized: string;
  vowelizerApplied: boolean;
  backend: string;
  durationS: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export async function synthesize(
  baseUrl: string,
  text: string,
  emotion: Emotion | null,
  fetchFn: FetchLike = fetch,
): Promise<SynthesisResult> {
  const payload: Record<string, unknown> = { text };
  if (emotion !== null) {
    payload.emotion = emotion;
  }
  const response = await fetchFn(`${baseUrl}/v1/synthesize`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  });
  if (!response.ok) {
    let message = `gateway returned HTTP ${response.status}`;
    try {
      const body = (await response.json()) as { error?: string };
      if (body.error) {
        message = body.error;
      }
    } catch {
      // keep the status-based message
    }
    throw new Error(message);
  }
  const encoded = response.headers.get("X-Vowelized-Text") ?? "";
  return {
    audio: await response.blob(),
    vowelized: decodeURIComponent(encoded),
    vowelizerApplied: response.headers.get("X-Vowelized") === "true",
    backend: response.headers.get("X-Backend") ?? "",
    durationS: Number(response.headers.get("X-Duration-S") ?? "0"),
  };
}

export async function checkHealth(baseUrl: string, fetchFn: FetchLike = fetch): Promise<boolean> {
  try {
    const response = await fetchFn(`${baseUrl}/health`);
    return response.ok;
  } catch {
    return false;
  }
}
