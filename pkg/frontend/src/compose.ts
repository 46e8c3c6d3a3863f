/** Client-side resynthesis: pure functions from (components, sigma, stats)
 * to 0..255 pixels.
 *
 * The render pipeline mirrors the server's exactly — weighted component
 * sum in standardized space, de-standardize (v*s + mu), then min/max
 * rescale with round-half-to-even — so a composite at the model's own
 * sigma reproduces the server's reconstruction render pixel for pixel.
 * Everything here is deterministic and allocation-only: no state, no
 * mutation of the inputs.
 */

import { Stats } from "./types.js";

export interface Render {
  /** gray levels in 0..255, length d */
  pixels: Int32Array;
  /** raw ~= pixels * scale + offset; scale is 0 for a constant image */
  scale: number;
  offset: number;
}

/** Round half to even (IEEE "banker's rounding", numpy's rint). */
export function rint(x: number): number {
  const f = Math.floor(x);
  const frac = x - f;
  if (frac > 0.5) {
    return f + 1;
  }
  if (frac < 0.5) {
    return f;
  }
  return f % 2 === 0 ? f : f + 1;
}

/** out[p] = sum_i sigma[i] * components[i][p] (standardized space). */
export function weightedSum(
  components: ReadonlyArray<ArrayLike<number>>,
  sigma: ArrayLike<number>,
  d: number,
): Float64Array {
  const n = components.length;
  if (sigma.length !== n) {
    throw new Error(`sigma has length ${sigma.length}, expected ${n}`);
  }
  const out = new Float64Array(d);
  for (let p = 0; p < d; p++) {
    let acc = 0.0;
    for (let i = 0; i < n; i++) {
      acc += sigma[i] * components[i][p];
    }
    out[p] = acc;
  }
  return out;
}

/** Map a standardized vector back to raw space: v * s + mu. */
export function toRawSpace(v: ArrayLike<number>, stats: Stats): Float64Array {
  const d = v.length;
  const out = new Float64Array(d);
  for (let p = 0; p < d; p++) {
    out[p] = v[p] * stats.s[p] + stats.mu[p];
  }
  return out;
}

/** Min/max-rescale one raw vector to 0..255 gray levels. */
export function renderGray(raw: ArrayLike<number>): Render {
  const d = raw.length;
  let lo = Infinity;
  let hi = -Infinity;
  for (let p = 0; p < d; p++) {
    const v = raw[p];
    if (v < lo) {
      lo = v;
    }
    if (v > hi) {
      hi = v;
    }
  }
  const pixels = new Int32Array(d);
  if (hi - lo < 1e-30) {
    return { pixels, scale: 0.0, offset: lo };
  }
  for (let p = 0; p < d; p++) {
    let g = rint(((raw[p] - lo) / (hi - lo)) * 255.0);
    if (g < 0) {
      g = 0;
    } else if (g > 255) {
      g = 255;
    }
    pixels[p] = g;
  }
  return { pixels, scale: (hi - lo) / 255.0, offset: lo };
}

/** Full composite pipeline: render of sum_i sigma[i]*comp[i] in raw space. */
export function compositePixels(
  components: ReadonlyArray<ArrayLike<number>>,
  sigma: ArrayLike<number>,
  stats: Stats,
): Render {
  const d = components.length > 0 ? components[0].length : stats.mu.length;
  return renderGray(toRawSpace(weightedSum(components, sigma, d), stats));
}

/** One component's contribution, rescaled on its own: sigma_i * comp_i. */
export function componentPixels(
  component: ArrayLike<number>,
  sigmaI: number,
  stats: Stats,
): Render {
  const d = component.length;
  const scaled = new Float64Array(d);
  for (let p = 0; p < d; p++) {
    scaled[p] = sigmaI * component[p];
  }
  return renderGray(toRawSpace(scaled, stats));
}

/** Render of the raw-space difference between two sigma settings.
 *
 * The de-standardization offset mu cancels in the subtraction, so the
 * difference is sum_i (a_i - b_i) * comp_i scaled by s; doubling one
 * slider therefore shows exactly that component's contribution.
 */
export function diffPixels(
  components: ReadonlyArray<ArrayLike<number>>,
  sigmaA: ArrayLike<number>,
  sigmaB: ArrayLike<number>,
  stats: Stats,
): Render {
  const n = components.length;
  if (sigmaA.length !== n || sigmaB.length !== n) {
    throw new Error(`diff needs two sigma vectors of length ${n}`);
  }
  const delta = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    delta[i] = sigmaA[i] - sigmaB[i];
  }
  const d = n > 0 ? components[0].length : stats.mu.length;
  const sum = weightedSum(components, delta, d);
  for (let p = 0; p < d; p++) {
    sum[p] *= stats.s[p];
  }
  return renderGray(sum);
}
