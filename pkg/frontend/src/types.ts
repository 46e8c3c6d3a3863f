/** Wire types of the JSON API the studio consumes. */

export interface Meta {
  n_branches: number;
  d: number;
  image_shape: [number, number] | null;
  n_samples: number;
  schema_version: number;
}

export interface Stats {
  mu: number[];
  s: number[];
}

export interface SamplePayload {
  sample: number;
  /** standardized input vector, length d */
  original: number[];
  /** unit-normalized per-branch parts, N rows of length d */
  components: number[][];
  /** per-branch scales in absorbed form, length N */
  sigma: number[];
  stats: Stats;
  image_shape: [number, number] | null;
}

export interface SynthResponse {
  image: number[];
  scale: number;
  offset: number;
}

export type ViewMode =
  | { kind: "composite" }
  | { kind: "component"; index: number }
  | { kind: "side-by-side" };
