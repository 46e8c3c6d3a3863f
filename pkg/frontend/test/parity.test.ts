/** Client/server parity against fixtures generated by the real backend
 * (frontend/tools/make_fixtures.py): the composite a browser computes
 * must match the server's own renders to within one gray level, and an
 * exported edit must be the exact document the command-line synthesizer
 * reproduces the image from.
 */

import { beforeAll, describe, expect, it } from "vitest";

import { compositePixels, componentPixels, renderGray } from "../src/compose.js";
import { exportEdit } from "../src/edits.js";
import {
  Bundle,
  fromBase64,
  loadBundle,
  maxAbsDiff,
  parsePgm,
} from "./helpers.js";

let bundle: Bundle;

beforeAll(() => {
  bundle = loadBundle();
});

describe("fixture sanity", () => {
  it("the payloads agree with the meta document", () => {
    const { meta, samples } = bundle;
    for (const payload of Object.values(samples)) {
      expect(payload.components.length).toBe(meta.n_branches);
      expect(payload.sigma.length).toBe(meta.n_branches);
      expect(payload.original.length).toBe(meta.d);
      for (const comp of payload.components) {
        expect(comp.length).toBe(meta.d);
      }
      expect(payload.stats.mu.length).toBe(meta.d);
      expect(payload.stats.s.length).toBe(meta.d);
      expect(payload.image_shape).toEqual(meta.image_shape);
    }
  });

  it("covers the edit shapes the studio produces", () => {
    const labels = bundle.synth.map((c) => c.label);
    for (const needed of ["model-sigma", "all-zero", "first-doubled"]) {
      expect(labels).toContain(needed);
    }
  });
});

describe("client composite vs server renders", () => {
  it("matches POST /api/synth within one gray level for every edit", () => {
    for (const synthCase of bundle.synth) {
      const payload = bundle.samples[String(synthCase.sample)];
      const client = compositePixels(
        payload.components,
        synthCase.sigma,
        payload.stats,
      );
      const diff = maxAbsDiff(client.pixels, synthCase.response.image);
      expect(diff, `${synthCase.label}: max pixel diff`).toBeLessThanOrEqual(1);
      expect(client.scale).toBeCloseTo(synthCase.response.scale, 10);
      expect(client.offset).toBeCloseTo(synthCase.response.offset, 10);
    }
  });

  it("matches the server reconstruction at the model's own sigma", () => {
    const modelCase = bundle.synth.find((c) => c.label === "model-sigma");
    expect(modelCase).toBeDefined();
    if (modelCase === undefined) {
      return;
    }
    const payload = bundle.samples[String(modelCase.sample)];
    expect(modelCase.sigma).toEqual(payload.sigma);
    const client = compositePixels(
      payload.components,
      payload.sigma,
      payload.stats,
    );
    expect(maxAbsDiff(client.pixels, modelCase.response.image)).toBeLessThanOrEqual(1);
  });

  it("renders the mean image at all-zero sigma", () => {
    const zeroCase = bundle.synth.find((c) => c.label === "all-zero");
    expect(zeroCase).toBeDefined();
    if (zeroCase === undefined) {
      return;
    }
    const payload = bundle.samples[String(zeroCase.sample)];
    const mean = renderGray(payload.stats.mu);
    expect(
      maxAbsDiff(mean.pixels, zeroCase.response.image),
    ).toBeLessThanOrEqual(1);
  });
});

describe("export -> command-line synth round trip", () => {
  it("exportEdit emits exactly the document the synthesizer consumed", () => {
    for (const synthCase of bundle.synth) {
      const exported = JSON.parse(exportEdit(synthCase.sample, synthCase.sigma));
      expect(exported).toEqual(JSON.parse(synthCase.edit_file));
    }
  });

  it("the synthesized image bytes match the panel within one gray level", () => {
    const shape = bundle.meta.image_shape;
    expect(shape).not.toBeNull();
    if (shape === null) {
      return;
    }
    for (const synthCase of bundle.synth) {
      const payload = bundle.samples[String(synthCase.sample)];
      const pgm = parsePgm(fromBase64(synthCase.pgm_b64));
      expect([pgm.height, pgm.width]).toEqual(shape);
      const client = compositePixels(
        payload.components,
        synthCase.sigma,
        payload.stats,
      );
      const diff = maxAbsDiff(client.pixels, pgm.pixels);
      expect(diff, `${synthCase.label}: vs CLI image`).toBeLessThanOrEqual(1);
    }
  });

  it("an export at the model sigma reproduces the decompose sum image", () => {
    const { decompose } = bundle;
    const payload = bundle.samples[String(decompose.sample)];
    expect(decompose.sidecar.sigma).toEqual(payload.sigma);
    const sum = parsePgm(fromBase64(decompose.sum_pgm_b64));
    const client = compositePixels(
      payload.components,
      payload.sigma,
      payload.stats,
    );
    expect(maxAbsDiff(client.pixels, sum.pixels)).toBeLessThanOrEqual(1);
  });
});

describe("gallery panels vs decompose images", () => {
  it("component renders match the per-component files", () => {
    const { decompose } = bundle;
    const payload = bundle.samples[String(decompose.sample)];
    expect(decompose.comp_pgm_b64.length).toBe(payload.components.length);
    decompose.comp_pgm_b64.forEach((b64, i) => {
      const pgm = parsePgm(fromBase64(b64));
      const client = componentPixels(
        payload.components[i],
        payload.sigma[i],
        payload.stats,
      );
      const diff = maxAbsDiff(client.pixels, pgm.pixels);
      expect(diff, `component ${i + 1}`).toBeLessThanOrEqual(1);
    });
  });
});
