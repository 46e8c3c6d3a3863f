/** Slider curve: position in [0, 1] to a scale in [0, sigmaMax].
 *
 * The mapping is exponential, sigma = sigmaMax * (e^(k*t) - 1) / (e^k - 1),
 * which stretches the low end: at k = 5 the bottom half of the slider
 * covers roughly the lowest tenth of the range, giving fine control near
 * zero where small scale edits matter most. Monotone with exact
 * endpoints sigma(0) = 0 and sigma(1) = sigmaMax.
 */

const CURVE_K = 5.0;
const CURVE_DENOM = Math.expm1(CURVE_K);

/** Slider range cap: three times the model's own scale. */
export function sigmaCap(modelSigmaI: number): number {
  return 3.0 * modelSigmaI;
}

export function sliderToSigma(t: number, sigmaMax: number): number {
  if (sigmaMax <= 0) {
    return 0.0;
  }
  const clamped = t < 0 ? 0 : t > 1 ? 1 : t;
  return (sigmaMax * Math.expm1(CURVE_K * clamped)) / CURVE_DENOM;
}

export function sigmaToSlider(sigma: number, sigmaMax: number): number {
  if (sigmaMax <= 0 || sigma <= 0) {
    return 0.0;
  }
  const clamped = sigma > sigmaMax ? sigmaMax : sigma;
  return Math.log1p((clamped / sigmaMax) * CURVE_DENOM) / CURVE_K;
}
