/** Shared test plumbing: fixture loading and a tiny binary-PGM reader. */

import { readFileSync } from "node:fs";

import { Meta, SamplePayload, SynthResponse } from "../src/types.js";

export interface SynthCase {
  label: string;
  sample: number;
  sigma: number[];
  /** the POST /api/synth response for this sigma */
  response: SynthResponse;
  /** exact text of the edit file the CLI consumed */
  edit_file: string;
  /** bytes of the image the CLI synthesizer wrote, base64 */
  pgm_b64: string;
}

export interface DecomposeFixture {
  sample: number;
  sidecar: {
    sample: number;
    sigma: number[];
    files: { original: string; components: string[]; sum: string };
  };
  sum_pgm_b64: string;
  comp_pgm_b64: string[];
}

export interface Bundle {
  meta: Meta;
  samples: Record<string, SamplePayload>;
  synth: SynthCase[];
  decompose: DecomposeFixture;
}

export function loadBundle(): Bundle {
  const url = new URL("./fixtures/bundle.json", import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as Bundle;
}

export interface Pgm {
  width: number;
  height: number;
  maxval: number;
  pixels: Uint8Array;
}

/** Parse a binary (P5) PGM with maxval <= 255. */
export function parsePgm(bytes: Uint8Array): Pgm {
  const fields: string[] = [];
  let pos = 0;
  while (fields.length < 4) {
    while (pos < bytes.length && isSpace(bytes[pos])) {
      pos++;
    }
    let end = pos;
    while (end < bytes.length && !isSpace(bytes[end])) {
      end++;
    }
    fields.push(new TextDecoder().decode(bytes.subarray(pos, end)));
    pos = end;
  }
  pos++; // single whitespace byte after maxval
  if (fields[0] !== "P5") {
    throw new Error(`not a binary PGM: ${fields[0]}`);
  }
  const width = Number(fields[1]);
  const height = Number(fields[2]);
  const maxval = Number(fields[3]);
  if (maxval > 255) {
    throw new Error("test reader only handles single-byte samples");
  }
  const pixels = bytes.subarray(pos, pos + width * height);
  if (pixels.length !== width * height) {
    throw new Error("truncated pixel data");
  }
  return { width, height, maxval, pixels: Uint8Array.from(pixels) };
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x0a || byte === 0x0d || byte === 0x09;
}

export function fromBase64(b64: string): Uint8Array {
  return Uint8Array.from(Buffer.from(b64, "base64"));
}

/** Largest |a - b| over two equal-length pixel arrays. */
export function maxAbsDiff(
  a: ArrayLike<number>,
  b: ArrayLike<number>,
): number {
  if (a.length !== b.length) {
    throw new Error(`length mismatch: ${a.length} vs ${b.length}`);
  }
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    const d = Math.abs(a[i] - b[i]);
    if (d > worst) {
      worst = d;
    }
  }
  return worst;
}
