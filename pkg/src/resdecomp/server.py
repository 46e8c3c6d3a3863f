"""HTTP facade over a trained model plus the published-decomposition math.

The JSON API exposes exactly what an interactive client needs: per-sample
components in standardized space with the standardization stats, so a
client can re-composite `sum_i sigma_i * comp_i` locally, and a synth
endpoint whose rendering matches the command-line synthesizer bit for
bit (both call the same helpers in this module).
"""

from __future__ import annotations

import json
import logging
import mimetypes
import posixpath
from dataclasses import dataclass
from functools import lru_cache
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

import numpy as np

from .dataio import render_gray
from .errors import ShapeError
from .model import Dataset, DecomposerModel
from .training import infer

log = logging.getLogger("resdecomp.server")

SCHEMA_VERSION = 1


# ----------------------------------------------- published decomposition --- #

@dataclass
class PublishedSample:
    """One sample's decomposition in reporting form.

    ``components`` are unit-norm when the model normalizes (collapsed
    branches give a zero column and a zero scale), raw otherwise;
    ``sigma`` is the matching per-sample scale vector, so
    ``components.T @ sigma`` is the model's reconstruction.
    """

    sample_id: int
    original: np.ndarray      # (d,), standardized space
    components: np.ndarray    # (N, d), standardized space
    sigma: np.ndarray         # (N,)
    reconstruction: np.ndarray  # (d,), standardized space


def published_sample(model: DecomposerModel, dataset: Dataset,
                     sample_id: int) -> PublishedSample:
    """Run inference on one sample and put it in reporting form."""
    x = dataset.sample(sample_id)
    state, sig = infer(model, x)
    comps = state.components[0]           # (N, d) raw branch outputs
    if model.config.normalize_components:
        norms = np.linalg.norm(comps, axis=1)
        safe = np.where(norms < 1e-10, 1.0, norms)
        comps = np.where((norms < 1e-10)[:, None], 0.0, comps / safe[:, None])
    return PublishedSample(sample_id=sample_id, original=x,
                           components=comps, sigma=sig.sigma[0],
                           reconstruction=comps.T @ sig.sigma[0])


def synth_pixels(model: DecomposerModel, dataset: Dataset, sample_id: int,
                 sigma: np.ndarray):
    """Render ``sum_i sigma_i * comp_i`` to 0..255 pixels.

    Returns (pixels int64 (d,), scale, offset). This is the single
    source of truth for both the synth command and POST /api/synth.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    pub = published_sample(model, dataset, sample_id)
    if sigma.shape != pub.sigma.shape:
        raise ShapeError(f"sigma must have length {pub.sigma.shape[0]}")
    composite = pub.components.T @ sigma
    return render_gray(dataset, composite)


# ------------------------------------------------------------ HTTP layer --- #

def _json_bytes(obj) -> bytes:
    return json.dumps(obj).encode("utf-8")


def make_handler(model: DecomposerModel, dataset: Dataset,
                 frontend_dir: Optional[Path]):
    """Build a request handler class closed over an immutable model."""

    meta = {
        "n_branches": model.config.n_branches,
        "d": dataset.d,
        "image_shape": list(dataset.image_shape) if dataset.image_shape else None,
        "n_samples": dataset.n,
        "schema_version": SCHEMA_VERSION,
    }
    root = frontend_dir.resolve() if frontend_dir is not None else None

    @lru_cache(maxsize=256)
    def sample_payload(sample_id: int) -> bytes:
        pub = published_sample(model, dataset, sample_id)
        return _json_bytes({
            "sample": sample_id,
            "original": pub.original.tolist(),
            "components": pub.components.tolist(),
            "sigma": pub.sigma.tolist(),
            "stats": {"mu": dataset.mu.tolist(), "s": dataset.s.tolist()},
            "image_shape": meta["image_shape"],
        })

    class Handler(BaseHTTPRequestHandler):
        server_version = "resdecomp/1"

        def log_message(self, fmt, *args):  # keep stdout clean
            log.debug("%s - %s", self.address_string(), fmt % args)

        # -- plumbing ---------------------------------------------------- #
        def _send(self, status: int, body: bytes, ctype="application/json"):
            self.send_response(status)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _error(self, status: int, message: str):
            self._send(status, _json_bytes({"error": message}))

        # -- GET --------------------------------------------------------- #
        def do_GET(self):
            path = self.path.split("?", 1)[0]
            if path == "/api/meta":
                self._send(200, _json_bytes(meta))
            elif path.startswith("/api/sample/"):
                tail = path[len("/api/sample/"):]
                if not tail.isdigit():
                    self._error(400, f"malformed sample id: {tail!r}")
                    return
                sid = int(tail)
                if not (0 <= sid < dataset.n):
                    self._error(404, f"unknown sample id: {sid}")
                    return
                self._send(200, sample_payload(sid))
            elif path.startswith("/api/"):
                self._error(404, f"unknown endpoint: {path}")
            else:
                self._static(path)

        # -- POST -------------------------------------------------------- #
        def do_POST(self):
            path = self.path.split("?", 1)[0]
            if path != "/api/synth":
                self._error(404, f"unknown endpoint: {path}")
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length) or b"{}")
                if not isinstance(body, dict):
                    raise ValueError("body must be a JSON object")
                sid = body["sample"]
                sigma = body["sigma"]
                if not isinstance(sid, int):
                    raise ValueError("sample must be an integer")
                sigma = np.asarray(sigma, dtype=np.float64)
                if sigma.ndim != 1 or sigma.shape[0] != meta["n_branches"]:
                    raise ValueError(f"sigma must have length {meta['n_branches']}")
                if not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
                    raise ValueError("sigma entries must be finite and >= 0")
            except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
                self._error(400, f"malformed synth request: {exc}")
                return
            if not (0 <= sid < dataset.n):
                self._error(404, f"unknown sample id: {sid}")
                return
            pixels, scale, offset = synth_pixels(model, dataset, sid, sigma)
            self._send(200, _json_bytes({"image": pixels.tolist(),
                                         "scale": scale, "offset": offset}))

        # -- static frontend ---------------------------------------------- #
        def _static(self, path: str):
            if root is None:
                self._error(404, "no frontend bundle configured")
                return
            clean = posixpath.normpath(path.lstrip("/")) or "."
            target = (root / clean).resolve()
            if clean == ".":
                target = root / "index.html"
            if root not in target.parents and target != root:
                self._error(404, "not found")
                return
            if target.is_dir():
                target = target / "index.html"
            if not target.is_file():
                self._error(404, f"not found: {path}")
                return
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            self._send(200, target.read_bytes(), ctype)

    return Handler


def serve(model: DecomposerModel, dataset: Dataset, port: int,
          frontend_dir: Optional[Path] = None, host: str = "127.0.0.1"):
    """Serve until interrupted. Raises OSError if the port is taken."""
    handler = make_handler(model, dataset, frontend_dir)
    with ThreadingHTTPServer((host, port), handler) as httpd:
        log.info("serving on http://%s:%d", host, httpd.server_address[1])
        print(f"serving on http://{host}:{httpd.server_address[1]}", flush=True)
        httpd.serve_forever()
