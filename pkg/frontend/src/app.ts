/** DOM wiring for the studio: one immutable-ish state object, one
 * coalesced render loop, one in-flight fetch at a time.
 */

import { fetchMeta, SampleLoader } from "./api.js";
import {
  componentPixels,
  compositePixels,
  diffPixels,
  Render,
} from "./compose.js";
import { exportEdit, exportFilename } from "./edits.js";
import { coalesced } from "./raf.js";
import { sigmaCap, sigmaToSlider, sliderToSigma } from "./sliders.js";
import {
  applyLoadError,
  applySample,
  initialState,
  resetSigma,
  setSigma,
  setViewMode,
  StudioState,
} from "./state.js";
import { Meta, ViewMode } from "./types.js";

const SLIDER_STEPS = 1000;

let state: StudioState = initialState();
let meta: Meta | null = null;
let sigmaCaps: number[] = [];

const el = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

// ------------------------------------------------------------ rendering --

function imageShape(): [number, number] {
  if (state.sample === null) {
    return [1, 1];
  }
  // datasets without an image shape render as a single pixel row
  return state.sample.image_shape ?? [1, state.sample.original.length];
}

function paint(canvas: HTMLCanvasElement, render: Render): void {
  const [h, w] = imageShape();
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    return;
  }
  const img = ctx.createImageData(w, h);
  const data = img.data;
  for (let p = 0; p < render.pixels.length; p++) {
    const g = render.pixels[p];
    const o = 4 * p;
    data[o] = g;
    data[o + 1] = g;
    data[o + 2] = g;
    data[o + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
}

function panel(label: string, render: Render): HTMLElement {
  const fig = document.createElement("figure");
  fig.className = "panel";
  const canvas = document.createElement("canvas");
  paint(canvas, render);
  const cap = document.createElement("figcaption");
  cap.textContent = `${label} · scale ${render.scale.toPrecision(3)} · offset ${render.offset.toPrecision(3)}`;
  fig.append(canvas, cap);
  return fig;
}

function renderPanels(): void {
  const host = el<HTMLDivElement>("panels");
  host.replaceChildren();
  if (state.sample === null) {
    return;
  }
  const { components, sigma, stats, original } = state.sample;
  const edited = state.editedSigma;
  const mode = state.viewMode;

  if (mode.kind === "component") {
    const i = mode.index;
    host.append(
      panel(
        `component ${i + 1} at sigma ${edited[i].toPrecision(4)}`,
        componentPixels(components[i], edited[i], stats),
      ),
    );
    return;
  }

  if (mode.kind === "side-by-side") {
    host.append(
      panel("A: model sigma", compositePixels(components, sigma, stats)),
      panel("B: edited sigma", compositePixels(components, edited, stats)),
      panel("diff (B - A)", diffPixels(components, edited, sigma, stats)),
    );
    return;
  }

  host.append(
    panel("original", compositePixelsOfOriginal(original)),
    panel("composite at edited sigma", compositePixels(components, edited, stats)),
  );
  const gallery = document.createElement("div");
  gallery.className = "gallery";
  for (let i = 0; i < components.length; i++) {
    gallery.append(
      panel(
        `component ${i + 1} (sigma ${edited[i].toPrecision(4)})`,
        componentPixels(components[i], edited[i], stats),
      ),
    );
  }
  host.append(gallery);
}

function compositePixelsOfOriginal(original: number[]): Render {
  // the original is a plain standardized vector: reuse the composite
  // pipeline with a single identity "component" at sigma 1
  if (state.sample === null) {
    throw new Error("no sample loaded");
  }
  return compositePixels([original], [1.0], state.sample.stats);
}

function renderSliderLabels(): void {
  for (let i = 0; i < state.editedSigma.length; i++) {
    const label = document.getElementById(`sigma-value-${i}`);
    if (label !== null) {
      label.textContent = state.editedSigma[i].toPrecision(4);
    }
  }
}

function renderBanner(): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = state.error ?? "";
  banner.classList.toggle("hidden", state.error === null);
}

function renderAll(): void {
  renderBanner();
  renderSliderLabels();
  renderPanels();
}

const scheduleRender = coalesced(renderAll);

// -------------------------------------------------------------- sliders --

function buildSliders(): void {
  const host = el<HTMLDivElement>("sliders");
  host.replaceChildren();
  sigmaCaps = state.modelSigma.map((s) => sigmaCap(s));
  state.modelSigma.forEach((model, i) => {
    const row = document.createElement("div");
    row.className = "slider-row";
    const name = document.createElement("span");
    name.className = "slider-name";
    name.textContent = `sigma ${i + 1}`;
    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = String(SLIDER_STEPS);
    input.step = "1";
    input.id = `sigma-slider-${i}`;
    input.value = String(
      Math.round(sigmaToSlider(model, sigmaCaps[i]) * SLIDER_STEPS),
    );
    if (sigmaCaps[i] <= 0) {
      input.disabled = true;
      input.title = "this component is dead (model sigma is 0)";
    }
    input.addEventListener("input", () => {
      const t = Number(input.value) / SLIDER_STEPS;
      state = setSigma(state, i, sliderToSigma(t, sigmaCaps[i]));
      scheduleRender();
    });
    const value = document.createElement("span");
    value.className = "slider-value";
    value.id = `sigma-value-${i}`;
    value.textContent = model.toPrecision(4);
    row.append(name, input, value);
    host.append(row);
  });
}

function syncSliderPositions(): void {
  state.editedSigma.forEach((sigma, i) => {
    const input = document.getElementById(
      `sigma-slider-${i}`,
    ) as HTMLInputElement | null;
    if (input !== null) {
      input.value = String(
        Math.round(sigmaToSlider(sigma, sigmaCaps[i]) * SLIDER_STEPS),
      );
    }
  });
}

// ------------------------------------------------------------- view mode --

function buildViewModeOptions(nBranches: number): void {
  const select = el<HTMLSelectElement>("view-mode");
  select.replaceChildren();
  const add = (value: string, label: string) => {
    const opt = document.createElement("option");
    opt.value = value;
    opt.textContent = label;
    select.append(opt);
  };
  add("composite", "composite + gallery");
  add("side-by-side", "A/B + diff");
  for (let i = 0; i < nBranches; i++) {
    add(`component:${i}`, `component ${i + 1}`);
  }
  select.addEventListener("change", () => {
    state = setViewMode(state, parseViewMode(select.value));
    scheduleRender();
  });
}

function parseViewMode(value: string): ViewMode {
  if (value === "side-by-side") {
    return { kind: "side-by-side" };
  }
  if (value.startsWith("component:")) {
    return { kind: "component", index: Number(value.split(":")[1]) };
  }
  return { kind: "composite" };
}

// -------------------------------------------------------- load / export --

const loader = new SampleLoader((outcome) => {
  if (outcome.error !== undefined) {
    state = applyLoadError(state, outcome.error);
  } else {
    state = applySample(state, outcome.payload);
    buildSliders();
  }
  renderAll();
});

function requestedSampleId(): number {
  return Number(el<HTMLInputElement>("sample-id").value) || 0;
}

function stepSample(delta: number): void {
  const input = el<HTMLInputElement>("sample-id");
  const limit = meta !== null ? meta.n_samples - 1 : Infinity;
  const next = Math.min(limit, Math.max(0, requestedSampleId() + delta));
  input.value = String(next);
  loader.request(next);
}

function bindToolbar(): void {
  el<HTMLButtonElement>("load").addEventListener("click", () =>
    loader.request(requestedSampleId()),
  );
  el<HTMLButtonElement>("prev").addEventListener("click", () => stepSample(-1));
  el<HTMLButtonElement>("next").addEventListener("click", () => stepSample(1));
  el<HTMLButtonElement>("reset").addEventListener("click", () => {
    state = resetSigma(state);
    syncSliderPositions();
    renderAll();
  });
  el<HTMLButtonElement>("export").addEventListener("click", () => {
    if (state.sample === null) {
      return;
    }
    const text = exportEdit(state.sample.sample, state.editedSigma);
    const blob = new Blob([text], { type: "application/json" });
    const url = URL.createObjectURL(blob);
    const a = document.createElement("a");
    a.href = url;
    a.download = exportFilename(state.sample.sample);
    a.click();
    URL.revokeObjectURL(url);
  });
}

async function boot(): Promise<void> {
  bindToolbar();
  try {
    meta = await fetchMeta();
  } catch (exc) {
    state = applyLoadError(state, `cannot reach the server: ${String(exc)}`);
    renderAll();
    return;
  }
  const shape =
    meta.image_shape !== null
      ? `${meta.image_shape[0]}x${meta.image_shape[1]}`
      : "no image shape";
  el<HTMLSpanElement>("meta-line").textContent =
    `${meta.n_branches} branches · d=${meta.d} (${shape}) · ${meta.n_samples} samples`;
  el<HTMLInputElement>("sample-id").max = String(meta.n_samples - 1);
  buildViewModeOptions(meta.n_branches);
  loader.request(0);
}

void boot();
