/** Studio state and its transitions.
 *
 * State is replaced, never mutated, and the fetched sample payload is
 * deep-frozen on arrival: every render is a pure function of
 * (components, edited sigma, stats), so re-rendering identical state is
 * pixel-identical and nothing the UI does can corrupt the source data.
 */

import { SamplePayload, ViewMode } from "./types.js";

export interface StudioState {
  /** fetched sample, frozen; null before the first successful load */
  sample: SamplePayload | null;
  /** the model's own scales, the A side of compare and the reset target */
  modelSigma: readonly number[];
  /** user-edited scales; each entry >= 0, same length as modelSigma */
  editedSigma: readonly number[];
  viewMode: ViewMode;
  /** inline error banner text; null when the last action succeeded */
  error: string | null;
}

export function initialState(): StudioState {
  return {
    sample: null,
    modelSigma: [],
    editedSigma: [],
    viewMode: { kind: "composite" },
    error: null,
  };
}

function deepFreeze<T>(value: T): T {
  if (value !== null && typeof value === "object") {
    for (const key of Object.keys(value as object)) {
      deepFreeze((value as Record<string, unknown>)[key]);
    }
    Object.freeze(value);
  }
  return value;
}

/** Install a freshly fetched sample: sliders start at the model sigma. */
export function applySample(
  state: StudioState,
  payload: SamplePayload,
): StudioState {
  deepFreeze(payload);
  return {
    ...state,
    sample: payload,
    modelSigma: payload.sigma,
    editedSigma: payload.sigma.slice(),
    error: null,
  };
}

/** A failed load shows a banner and leaves everything else as it was. */
export function applyLoadError(
  state: StudioState,
  message: string,
): StudioState {
  return { ...state, error: message };
}

/** Set one edited scale; the floor is 0 and non-numbers are rejected. */
export function setSigma(
  state: StudioState,
  index: number,
  value: number,
): StudioState {
  if (index < 0 || index >= state.editedSigma.length) {
    throw new Error(`no slider ${index}`);
  }
  const clamped = Number.isFinite(value) && value > 0 ? value : 0;
  const edited = state.editedSigma.slice();
  edited[index] = clamped;
  return { ...state, editedSigma: edited };
}

/** Back to exactly the scales the sample loaded with. */
export function resetSigma(state: StudioState): StudioState {
  return { ...state, editedSigma: state.modelSigma.slice() };
}

export function setViewMode(state: StudioState, mode: ViewMode): StudioState {
  if (mode.kind === "component" && state.sample !== null) {
    const n = state.sample.components.length;
    if (mode.index < 0 || mode.index >= n) {
      throw new Error(`no component ${mode.index}`);
    }
  }
  return { ...state, viewMode: mode };
}
