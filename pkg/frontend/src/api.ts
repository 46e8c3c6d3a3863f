/** Fetch plumbing with the studio's one concurrency rule: at most one
 * request is in flight. A sample requested while another is loading is
 * remembered (latest wins) and dispatched when the current one settles,
 * so slider-era UI code can fire requests freely without racing the
 * server or reordering responses.
 */

import { Meta, SamplePayload } from "./types.js";

export type FetchLike = typeof fetch;

export type LoadOutcome =
  | { id: number; payload: SamplePayload; error?: undefined }
  | { id: number; payload?: undefined; error: string };

async function errorText(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { error?: string };
    if (body && typeof body.error === "string") {
      return body.error;
    }
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `request failed with status ${res.status}`;
}

export async function fetchMeta(fetchFn: FetchLike = fetch): Promise<Meta> {
  const res = await fetchFn("/api/meta");
  if (!res.ok) {
    throw new Error(await errorText(res));
  }
  return (await res.json()) as Meta;
}

export class SampleLoader {
  private inflight = false;
  private nextId: number | null = null;

  constructor(
    private readonly onResult: (outcome: LoadOutcome) => void,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  get busy(): boolean {
    return this.inflight;
  }

  /** Ask for a sample; while busy only the latest request is kept. */
  request(id: number): void {
    if (this.inflight) {
      this.nextId = id;
      return;
    }
    void this.run(id);
  }

  private async run(id: number): Promise<void> {
    this.inflight = true;
    let outcome: LoadOutcome;
    try {
      const res = await this.fetchFn(`/api/sample/${id}`);
      if (res.ok) {
        outcome = { id, payload: (await res.json()) as SamplePayload };
      } else {
        outcome = { id, error: await errorText(res) };
      }
    } catch (exc) {
      outcome = { id, error: `sample ${id}: ${String(exc)}` };
    }
    this.inflight = false;
    this.onResult(outcome);
    if (this.nextId !== null) {
      const next = this.nextId;
      this.nextId = null;
      this.request(next);
    }
  }
}
