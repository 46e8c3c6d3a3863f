#!/usr/bin/env python3
"""Regenerate the studio's parity fixtures.

Trains a small masked two-branch model on synthetic half-image data,
serves it with the real HTTP handler, and records everything the
TypeScript tests need to prove client/server parity:

- exact /api/meta and /api/sample response bodies,
- /api/synth responses for a set of edited scale vectors,
- the PGM bytes the `synth --sigma-file` command writes for the same
  edits (plus the exact edit-file text it consumed),
- the `decompose` outputs for one sample (sum + component images).

Rendering rounds to whole gray levels, so fixtures regenerated on a
different backend (RESDECOMP_NUMBA=0) stay within the tests' +/-1
tolerance even though float solver outputs differ at ~1e-12.

Usage: python3 frontend/tools/make_fixtures.py [outdir]
"""

import base64
import http.client
import json
import subprocess
import sys
import tempfile
import threading
from http.server import ThreadingHTTPServer
from pathlib import Path

import numpy as np

from resdecomp import (BranchSpec, DecomposerModel, MLP_AE, MaskSpec,
                       ModelConfig, GRAD_DETACH, SIGMA_ONES, SIGMA_RIDGE,
                       TrainStage, export_dataset, export_model,
                       gaussian_mask, init_model, synth_spatial_halves,
                       train_stages)
from resdecomp.server import make_handler

SHAPE = (8, 8)
N_SAMPLES = 60
SEED = 7
SAMPLE_IDS = (0, 3)
EDIT_SAMPLE = 0


def build_model_and_data():
    ds, _ = synth_spatial_halves(SHAPE, N_SAMPLES, 0.01, seed=SEED,
                                 per_half=2, envelope_std=1.33)
    h, w = SHAPE
    masks = np.stack([
        gaussian_mask(MaskSpec(center=(h / 2 - 0.5, w / 4 - 0.5),
                               area_fraction=0.5, shape=SHAPE)),
        gaussian_mask(MaskSpec(center=(h / 2 - 0.5, 3 * w / 4 - 0.5),
                               area_fraction=0.5, shape=SHAPE)),
    ])
    base = ModelConfig(n_branches=2, branch_spec=BranchSpec(MLP_AE, (8, 2)),
                       sweeps=3, damping=0.7, sigma_mode=SIGMA_RIDGE,
                       residual_grad_mode=GRAD_DETACH, seed=0)
    warm = base.with_(sweeps=1, damping=0.95, sigma_mode=SIGMA_ONES)
    model = init_model(base, ds.d)
    model = DecomposerModel(config=base, branches=model.branches, masks=masks)
    model, _ = train_stages(model, ds, [
        TrainStage(config=warm, epochs=300, lr=0.01, optimizer="sgd"),
        TrainStage(config=base, epochs=120, lr=1e-3, optimizer="adam"),
    ])
    return model, ds


def spawn(model, ds):
    server = ThreadingHTTPServer(("127.0.0.1", 0),
                                 make_handler(model, ds, None))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread


def get(port: int, path: str) -> str:
    conn = http.client.HTTPConnection("127.0.0.1", port)
    conn.request("GET", path)
    resp = conn.getresponse()
    body = resp.read().decode("utf-8")
    conn.close()
    assert resp.status == 200, f"GET {path} -> {resp.status}: {body}"
    return body


def post(port: int, path: str, payload: dict) -> str:
    conn = http.client.HTTPConnection("127.0.0.1", port)
    conn.request("POST", path, body=json.dumps(payload),
                 headers={"Content-Type": "application/json"})
    resp = conn.getresponse()
    body = resp.read().decode("utf-8")
    conn.close()
    assert resp.status == 200, f"POST {path} -> {resp.status}: {body}"
    return body


def run_cli(*argv: str) -> None:
    proc = subprocess.run(["resdecomp", *argv], capture_output=True, text=True)
    assert proc.returncode == 0, f"resdecomp {argv}: {proc.stderr}"


def edit_vectors(sigma: np.ndarray) -> list:
    rng = np.random.default_rng(11)
    doubled = sigma.copy()
    doubled[0] *= 2.0
    solo = np.zeros_like(sigma)
    solo[1] = sigma[1]
    return [
        ("model-sigma", sigma.copy()),
        ("all-zero", np.zeros_like(sigma)),
        ("first-doubled", doubled),
        ("second-solo", solo),
        ("random", rng.uniform(0.0, 2.0, size=sigma.shape) * sigma),
    ]


def main() -> None:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "test" / "fixtures")
    outdir.mkdir(parents=True, exist_ok=True)

    model, ds = build_model_and_data()
    server, thread = spawn(model, ds)
    port = server.server_address[1]
    try:
        meta_raw = get(port, "/api/meta")
        samples = {str(sid): json.loads(get(port, f"/api/sample/{sid}"))
                   for sid in SAMPLE_IDS}
        model_sigma = np.asarray(samples[str(EDIT_SAMPLE)]["sigma"])

        with tempfile.TemporaryDirectory() as tmp:
            tmpdir = Path(tmp)
            model_path = tmpdir / "model.json"
            data_path = tmpdir / "data.json"
            export_model(model, model_path)
            export_dataset(ds, data_path)

            synth_cases = []
            for label, sigma in edit_vectors(model_sigma):
                response = json.loads(post(port, "/api/synth", {
                    "sample": EDIT_SAMPLE, "sigma": sigma.tolist()}))
                edit_file = json.dumps(
                    {"sample": EDIT_SAMPLE, "sigma": sigma.tolist()},
                    indent=2) + "\n"
                edit_path = tmpdir / f"edit_{label}.json"
                edit_path.write_text(edit_file)
                out_path = tmpdir / f"synth_{label}.pgm"
                run_cli("synth", "--model", str(model_path),
                        "--data", str(data_path),
                        "--sigma-file", str(edit_path),
                        "--out", str(out_path))
                synth_cases.append({
                    "label": label,
                    "sample": EDIT_SAMPLE,
                    "sigma": sigma.tolist(),
                    "response": response,
                    "edit_file": edit_file,
                    "pgm_b64": base64.b64encode(
                        out_path.read_bytes()).decode("ascii"),
                })

            decomp_dir = tmpdir / "decomp"
            run_cli("decompose", "--model", str(model_path),
                    "--data", str(data_path),
                    "--samples", str(EDIT_SAMPLE),
                    "--outdir", str(decomp_dir))
            stem = f"sample{EDIT_SAMPLE:04d}"
            sidecar = json.loads((decomp_dir / f"{stem}.json").read_text())
            decompose = {
                "sample": EDIT_SAMPLE,
                "sidecar": sidecar,
                "sum_pgm_b64": base64.b64encode(
                    (decomp_dir / f"{stem}_sum.pgm").read_bytes()
                ).decode("ascii"),
                "comp_pgm_b64": [
                    base64.b64encode(
                        (decomp_dir / name).read_bytes()).decode("ascii")
                    for name in sidecar["files"]["components"]
                ],
            }
    finally:
        server.shutdown()
        server.server_close()
        thread.join()

    bundle = {
        "meta": json.loads(meta_raw),
        "samples": samples,
        "synth": synth_cases,
        "decompose": decompose,
    }
    path = outdir / "bundle.json"
    path.write_text(json.dumps(bundle) + "\n")
    size_kb = path.stat().st_size / 1024
    print(f"wrote {path} ({size_kb:.0f} KiB, sigma = {model_sigma.tolist()})")


if __name__ == "__main__":
    main()
