"""Dataset ingestion, synthetic generators, spatial masks, serialization.

File formats:
- PGM (P2/P5) per the Netpbm rules, including '#' comments and two-byte
  big-endian samples when maxval > 255.
- Models and datasets as canonical UTF-8 JSON (sorted keys, no spaces):
  top level {schema_version: 1, kind: "model"|"dataset", float_enc, ...}.
  Arrays are {shape, data} with every value a string — either the
  float's hex bit pattern (default; bitwise round trip by construction)
  or a 17-significant-digit decimal (also exact for binary64).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .branches import (LinearAEParams, MlpAEParams, Rank1TiedParams,
                       Rank1UntiedParams)
from .errors import ConfigError, LoadError, ParseError, ShapeError
from .model import (BranchSpec, Dataset, DecomposerModel, LINEAR_AE, MLP_AE,
                    ModelConfig, RANK1_TIED, RANK1_UNTIED, validate_config)

SCHEMA_VERSION = 1


@dataclass
class GrayImage:
    height: int
    width: int
    maxval: int
    pixels: np.ndarray  # (height, width) integer intensities in 0..maxval

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.int64)
        if self.pixels.shape != (self.height, self.width):
            raise ShapeError("pixels must be a (height, width) array")


# ---------------------------------------------------------------- PGM --- #

_WS = b" \t\r\n\v\f"


def _next_token(buf: bytes, pos: int):
    """Skip whitespace/comments, return (token, start_offset, end_pos)."""
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c in (b"#",):
            while pos < n and buf[pos:pos + 1] != b"\n":
                pos += 1
        elif c in _WS:
            pos += 1
        else:
            break
    if pos >= n:
        raise ParseError(pos, "unexpected end of header")
    start = pos
    while pos < n and buf[pos:pos + 1] not in _WS and buf[pos:pos + 1] != b"#":
        pos += 1
    return buf[start:pos], start, pos


def _header_int(buf: bytes, pos: int, what: str, lo: int, hi: int):
    tok, start, pos = _next_token(buf, pos)
    try:
        val = int(tok)
    except ValueError:
        raise ParseError(start, f"{what} is not an integer: {tok[:20]!r}") from None
    if not lo <= val <= hi:
        raise ParseError(start, f"{what} must be in [{lo}, {hi}], got {val}")
    return val, pos


def load_pgm(path) -> GrayImage:
    """Parse a P2 (ASCII) or P5 (binary) PGM file."""
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, start, pos = _next_token(buf, 0)
    if magic not in (b"P2", b"P5"):
        raise ParseError(start, f"bad magic {magic[:8]!r}, expected P2 or P5")
    width, pos = _header_int(buf, pos, "width", 1, 1 << 30)
    height, pos = _header_int(buf, pos, "height", 1, 1 << 30)
    maxval, pos = _header_int(buf, pos, "maxval", 1, 65535)
    count = width * height
    if magic == b"P5":
        if pos >= len(buf):
            raise ParseError(pos, "missing raster")
        if buf[pos:pos + 1] not in _WS:
            raise ParseError(pos, "maxval must be followed by one whitespace byte")
        pos += 1
        nbytes = count * (2 if maxval > 255 else 1)
        raster = buf[pos:pos + nbytes]
        if len(raster) < nbytes:
            raise ParseError(len(buf),
                             f"truncated raster: expected {nbytes} bytes, got {len(raster)}")
        dt = ">u2" if maxval > 255 else "u1"
        pix = np.frombuffer(raster, dtype=dt).astype(np.int64)
        over = np.nonzero(pix > maxval)[0]
        if over.size:
            off = pos + int(over[0]) * (2 if maxval > 255 else 1)
            raise ParseError(off, f"sample value {int(pix[over[0]])} exceeds maxval {maxval}")
    else:
        vals = []
        for _ in range(count):
            v, pos = _header_int(buf, pos, "sample", 0, maxval)
            vals.append(v)
        tail = buf[pos:].strip(bytes(_WS))
        if tail and not tail.startswith(b"#"):
            raise ParseError(pos, "trailing data after the raster")
        pix = np.array(vals, dtype=np.int64)
    return GrayImage(height=height, width=width, maxval=maxval,
                     pixels=pix.reshape(height, width))


def write_pgm(path, img: GrayImage) -> None:
    """Write binary (P5) PGM; two bytes per sample when maxval > 255."""
    if not 1 <= img.maxval <= 65535:
        raise ConfigError("maxval must be in [1, 65535]")
    if img.pixels.min() < 0 or img.pixels.max() > img.maxval:
        raise ConfigError("pixel values must lie in [0, maxval]")
    header = f"P5\n{img.width} {img.height}\n{img.maxval}\n".encode("ascii")
    dt = ">u2" if img.maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.pixels.astype(dt).tobytes())


def downsample(pixels: np.ndarray, factor: int) -> np.ndarray:
    """Block-average a 2-D image by an integer factor."""
    pixels = np.asarray(pixels, dtype=np.float64)
    h, w = pixels.shape
    if factor < 1 or h % factor or w % factor:
        raise ConfigError(f"factor {factor} must divide image shape {h}x{w}")
    return pixels.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


# ----------------------------------------------------- standardization --- #

def standardize(data, image_shape: Optional[tuple[int, int]] = None) -> Dataset:
    """Per-feature zero-mean/unit-variance dataset from vectors or images.

    ``data`` is an (n, d) array or a list of GrayImage (flattened
    row-major). Population std is used; zero-variance features keep
    s = 1 so they become inert zeros.
    """
    if isinstance(data, (list, tuple)) and data and isinstance(data[0], GrayImage):
        shapes = {(im.height, im.width) for im in data}
        if len(shapes) != 1:
            raise ShapeError(f"images disagree on shape: {sorted(shapes)}")
        image_shape = next(iter(shapes))
        data = np.stack([im.pixels.reshape(-1).astype(np.float64) for im in data])
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError("expected an (n, d) array of samples")
    if X.shape[0] < 2:
        raise ValueError("standardize needs at least 2 samples")
    mu = X.mean(axis=0)
    s = X.std(axis=0)  # population (ddof=0)
    s = np.where(s < 1e-30, 1.0, s)
    return Dataset(X=(X - mu) / s, mu=mu, s=s, image_shape=image_shape)


def inverse_standardize(dataset: Dataset, v: np.ndarray) -> np.ndarray:
    """Map standardized vectors back to raw space: v * s + mu."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != dataset.d:
        raise ShapeError(f"vector has width {v.shape[-1]}, dataset d = {dataset.d}")
    return v * dataset.s + dataset.mu


def render_gray(dataset: Dataset, v: np.ndarray):
    """Inverse-standardize and min/max-rescale one vector to 0..255.

    Returns (pixels int64 in 0..255, scale, offset) with
    raw ~= pixels * scale + offset; a constant image gets scale 0.
    """
    raw = inverse_standardize(dataset, np.asarray(v, dtype=np.float64).reshape(-1))
    lo = float(raw.min())
    hi = float(raw.max())
    if hi - lo < 1e-30:
        return np.zeros(raw.shape, dtype=np.int64), 0.0, lo
    pix = np.rint((raw - lo) / (hi - lo) * 255.0).astype(np.int64)
    return np.clip(pix, 0, 255), (hi - lo) / 255.0, lo


# -------------------------------------------------- synthetic datasets --- #

def synth_lowrank(d: int, n_samples: int, rank: int, noise_std: float, seed: int):
    """Planted low-rank data: x = sum_k c_k * s_k * a_k + noise.

    {a_k} are orthonormal random directions, the spectrum is the
    strictly decreasing 2^(rank-k), coefficients are standard normal.
    Returns (Dataset, truth) where truth holds directions (d, rank),
    spectrum (rank,) and coefficients (n, rank).

    The Dataset carries identity standardization stats on purpose:
    re-standardizing would warp the planted directions that the
    deflation oracle is supposed to recover.
    """
    if rank > d:
        raise ConfigError(f"rank {rank} exceeds d = {d}")
    if rank < 1 or n_samples < 2:
        raise ConfigError("need rank >= 1 and n_samples >= 2")
    if noise_std < 0:
        raise ConfigError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    for k in range(rank):  # fix QR's sign ambiguity
        if Q[np.argmax(np.abs(Q[:, k])), k] < 0:
            Q[:, k] = -Q[:, k]
    spectrum = 2.0 ** np.arange(rank - 1, -1, -1)
    coeff = rng.standard_normal((n_samples, rank))
    X = (coeff * spectrum) @ Q.T
    if noise_std > 0:
        X = X + noise_std * rng.standard_normal((n_samples, d))
    ds = Dataset(X=X, mu=np.zeros(d), s=np.ones(d))
    truth = {"directions": Q, "spectrum": spectrum, "coefficients": coeff}
    return ds, truth


def synth_spatial_halves(image_shape: tuple[int, int], n_samples: int,
                         noise_std: float, seed: int, per_half: int = 2,
                         envelope_std: Optional[float] = None):
    """Images whose signal factorizes over the left/right halves.

    Each half gets ``per_half`` fixed unit-norm random patterns supported
    only on that half; samples mix them with independent N(0,1)
    coefficients plus optional noise. ``envelope_std`` (pixels) applies a
    Gaussian envelope centered mid-half so each pattern's energy
    concentrates around its half's center instead of spreading uniformly.
    Returns (Dataset, truth) with truth = {patterns: (2*per_half, d),
    half_of_pattern, left_cols}.
    """
    h, w = image_shape
    if w < 2:
        raise ConfigError("image must be at least 2 columns wide")
    if n_samples < 2:
        raise ConfigError("need n_samples >= 2")
    if envelope_std is not None and envelope_std <= 0:
        raise ConfigError("envelope_std must be > 0")
    rng = np.random.default_rng(seed)
    d = h * w
    left = np.tile(np.arange(w) < w // 2, h)  # row-major flattened selector
    rows = np.repeat(np.arange(h, dtype=np.float64), w)
    cols = np.tile(np.arange(w, dtype=np.float64), h)

    def envelope(center):
        if envelope_std is None:
            return np.ones(d)
        d2 = (rows - center[0]) ** 2 + (cols - center[1]) ** 2
        return np.exp(-d2 / (2.0 * envelope_std ** 2))

    centers = {0: (h / 2 - 0.5, w / 4 - 0.5), 1: (h / 2 - 0.5, 3 * w / 4 - 0.5)}
    patterns = []
    half_of = []
    for side, sel in ((0, left), (1, ~left)):
        env = envelope(centers[side])
        for _ in range(per_half):
            p = np.zeros(d)
            p[sel] = rng.standard_normal(int(sel.sum()))
            p *= env
            p /= np.linalg.norm(p)
            patterns.append(p)
            half_of.append(side)
    P = np.stack(patterns)
    coeff = rng.standard_normal((n_samples, P.shape[0]))
    X = coeff @ P
    if noise_std > 0:
        X = X + noise_std * rng.standard_normal((n_samples, d))
    ds = Dataset(X=X, mu=np.zeros(d), s=np.ones(d), image_shape=(h, w))
    truth = {"patterns": P, "half_of_pattern": np.array(half_of),
             "left_cols": left}
    return ds, truth


# ------------------------------------------------------ Gaussian masks --- #

@dataclass
class MaskSpec:
    center: tuple[float, float]       # (row, col)
    area_fraction: float              # target area of the 0.5-level disc
    shape: tuple[int, int]            # (height, width)

    def validate(self) -> None:
        h, w = self.shape
        r, c = self.center
        if not (0 < self.area_fraction < 1):
            raise ConfigError("area_fraction must lie in (0, 1)")
        if not (0 <= r < h and 0 <= c < w):
            raise ConfigError(f"center {self.center} outside {h}x{w} image")


def mask_tau(spec: MaskSpec) -> float:
    """Gaussian width making the 0.5-level disc cover area_fraction*h*w."""
    h, w = spec.shape
    return math.sqrt(spec.area_fraction * h * w / (2.0 * math.pi * math.log(2.0)))


def half_level_radius(spec: MaskSpec) -> float:
    """Radius of the m >= 0.5 disc: pi * rho^2 = area_fraction * h * w."""
    return mask_tau(spec) * math.sqrt(2.0 * math.log(2.0))


def gaussian_mask(spec: MaskSpec) -> np.ndarray:
    """m(p) = exp(-|p - center|^2 / (2 tau^2)), flattened row-major."""
    spec.validate()
    h, w = spec.shape
    tau = mask_tau(spec)
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    d2 = (rows - spec.center[0]) ** 2 + (cols - spec.center[1]) ** 2
    m = np.exp(-d2 / (2.0 * tau * tau))
    return np.minimum(m, 1.0).reshape(-1)


def random_mask_specs(shape: tuple[int, int], n_masks: int, area_fraction: float,
                      seed: int) -> list[MaskSpec]:
    """Seeded random centers, resampled while within 10% of the border."""
    h, w = shape
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(n_masks):
        while True:
            r = rng.uniform(0, h)
            c = rng.uniform(0, w)
            if 0.1 * h <= r <= 0.9 * h and 0.1 * w <= c <= 0.9 * w:
                break
        specs.append(MaskSpec(center=(r, c), area_fraction=area_fraction,
                              shape=(h, w)))
    return specs


# -------------------------------------------------------- serialization --- #

def _enc_float(x: float, enc: str) -> str:
    if enc == "hex":
        return float(x).hex()
    return format(float(x), ".17g")


def _dec_float(sv, enc: str, path: str) -> float:
    try:
        if enc == "hex":
            return float.fromhex(sv)
        return float(sv)
    except (ValueError, TypeError):
        raise LoadError(path, f"bad float literal {sv!r}") from None


def _enc_array(arr: np.ndarray, enc: str) -> dict:
    arr = np.asarray(arr, dtype=np.float64)
    return {"shape": list(arr.shape),
            "data": [_enc_float(v, enc) for v in arr.ravel(order="C")]}


def _need(obj: dict, key: str, path: str):
    if not isinstance(obj, dict) or key not in obj:
        raise LoadError(f"{path}.{key}" if path else key, "missing field")
    return obj[key]


def _dec_array(obj, enc: str, path: str, expect_shape=None) -> np.ndarray:
    shape = _need(obj, "shape", path)
    data = _need(obj, "data", path)
    try:
        size = int(np.prod([int(s) for s in shape], dtype=np.int64)) if shape else 1
    except (TypeError, ValueError):
        raise LoadError(f"{path}.shape", f"bad shape {shape!r}") from None
    if len(data) != size:
        raise LoadError(f"{path}.data", f"expected {size} values, got {len(data)}")
    vals = np.array([_dec_float(v, enc, f"{path}.data[{i}]")
                     for i, v in enumerate(data)], dtype=np.float64)
    arr = vals.reshape([int(s) for s in shape])
    if expect_shape is not None and tuple(arr.shape) != tuple(expect_shape):
        raise LoadError(path, f"shape {tuple(arr.shape)} != expected {tuple(expect_shape)}")
    if not np.all(np.isfinite(arr)):
        raise LoadError(path, "non-finite value")
    return arr


def _branch_payload(branch, enc: str) -> dict:
    if isinstance(branch, Rank1TiedParams):
        return {"kind": branch.kind, "params": {"u": _enc_array(branch.u, enc)}}
    if isinstance(branch, Rank1UntiedParams):
        return {"kind": branch.kind,
                "params": {"u": _enc_array(branch.u, enc), "v": _enc_array(branch.v, enc)}}
    if isinstance(branch, LinearAEParams):
        return {"kind": branch.kind,
                "params": {"W": _enc_array(branch.W, enc), "V": _enc_array(branch.V, enc)}}
    return {"kind": branch.kind, "params": {
        "enc_w": [_enc_array(a, enc) for a in branch.enc_w],
        "enc_b": [_enc_array(a, enc) for a in branch.enc_b],
        "dec_w": [_enc_array(a, enc) for a in branch.dec_w],
        "dec_b": [_enc_array(a, enc) for a in branch.dec_b]}}


def _config_payload(cfg: ModelConfig) -> dict:
    return {"n_branches": cfg.n_branches,
            "branch_spec": {"kind": cfg.branch_spec.kind,
                            "widths": list(cfg.branch_spec.widths)},
            "sweeps": cfg.sweeps, "schedule": cfg.schedule,
            "damping": cfg.damping, "lambda_s": cfg.lambda_s,
            "lambda_perp": cfg.lambda_perp, "ridge": cfg.ridge,
            "sigma_mode": cfg.sigma_mode,
            "normalize_components": cfg.normalize_components,
            "residual_grad_mode": cfg.residual_grad_mode, "seed": cfg.seed}


def _dump_canonical(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True) + "\n"


def export_model(model: DecomposerModel, path, float_enc: str = "hex") -> None:
    """Write the model as canonical JSON (bitwise round trip in hex mode)."""
    if float_enc not in ("hex", "dec17"):
        raise ConfigError(f"unknown float_enc: {float_enc!r}")
    obj = {"schema_version": SCHEMA_VERSION, "kind": "model",
           "float_enc": float_enc,
           "config": _config_payload(model.config),
           "branches": [_branch_payload(b, float_enc) for b in model.branches],
           "masks": None if model.masks is None else _enc_array(model.masks, float_enc)}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_canonical(obj))


def _load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise LoadError("<document>", f"invalid JSON: {e}") from None


def _check_envelope(obj: dict, kind: str) -> str:
    ver = _need(obj, "schema_version", "")
    if ver != SCHEMA_VERSION:
        raise LoadError("schema_version", f"unsupported schema_version: {ver!r}")
    got = _need(obj, "kind", "")
    if got != kind:
        raise LoadError("kind", f"expected {kind!r}, got {got!r}")
    enc = _need(obj, "float_enc", "")
    if enc not in ("hex", "dec17"):
        raise LoadError("float_enc", f"unknown float_enc: {enc!r}")
    return enc


def load_model(path) -> DecomposerModel:
    """Load and validate a model file written by export_model."""
    obj = _load_json(path)
    enc = _check_envelope(obj, "model")
    craw = _need(obj, "config", "")
    spec_raw = _need(craw, "branch_spec", "config")
    spec = BranchSpec(kind=_need(spec_raw, "kind", "config.branch_spec"),
                      widths=tuple(_need(spec_raw, "widths", "config.branch_spec")))
    cfg = ModelConfig(
        n_branches=_need(craw, "n_branches", "config"),
        branch_spec=spec,
        sweeps=_need(craw, "sweeps", "config"),
        schedule=_need(craw, "schedule", "config"),
        damping=_need(craw, "damping", "config"),
        lambda_s=_need(craw, "lambda_s", "config"),
        lambda_perp=_need(craw, "lambda_perp", "config"),
        ridge=_need(craw, "ridge", "config"),
        sigma_mode=_need(craw, "sigma_mode", "config"),
        normalize_components=_need(craw, "normalize_components", "config"),
        residual_grad_mode=_need(craw, "residual_grad_mode", "config"),
        seed=_need(craw, "seed", "config"))
    errs = validate_config(cfg)
    if errs:
        raise LoadError("config", "; ".join(errs))
    braw = _need(obj, "branches", "")
    if len(braw) != cfg.n_branches:
        raise LoadError("branches", f"expected {cfg.n_branches} entries, got {len(braw)}")
    branches = []
    d = None
    for i, b in enumerate(braw):
        path_i = f"branches[{i}]"
        kind = _need(b, "kind", path_i)
        if kind != spec.kind:
            raise LoadError(f"{path_i}.kind", f"{kind!r} != config kind {spec.kind!r}")
        params = _need(b, "params", path_i)
        branches.append(_load_branch(kind, spec, params, enc, f"{path_i}.params"))
        bd = _branch_d(branches[-1])
        if d is None:
            d = bd
        elif bd != d:
            raise LoadError(path_i, f"branch dimension {bd} != {d}")
    masks = obj.get("masks")
    mask_arr = None
    if masks is not None:
        mask_arr = _dec_array(masks, enc, "masks", expect_shape=(cfg.n_branches, d))
        if mask_arr.min() < 0 or mask_arr.max() > 1:
            raise LoadError("masks", "entries must lie in [0, 1]")
    return DecomposerModel(config=cfg, branches=branches, masks=mask_arr)


def _branch_d(branch) -> int:
    from .branches import branch_dim
    return branch_dim(branch)


def _load_branch(kind: str, spec: BranchSpec, params: dict, enc: str, path: str):
    if kind == RANK1_TIED:
        return Rank1TiedParams(u=_dec_array(_need(params, "u", path), enc, f"{path}.u"))
    if kind == RANK1_UNTIED:
        return Rank1UntiedParams(
            u=_dec_array(_need(params, "u", path), enc, f"{path}.u"),
            v=_dec_array(_need(params, "v", path), enc, f"{path}.v"))
    if kind == LINEAR_AE:
        W = _dec_array(_need(params, "W", path), enc, f"{path}.W")
        V = _dec_array(_need(params, "V", path), enc, f"{path}.V")
        if W.ndim != 2 or V.ndim != 2 or W.shape[0] != spec.widths[0] \
                or V.shape != (W.shape[1], W.shape[0]):
            raise LoadError(path, f"inconsistent linear shapes {W.shape} / {V.shape}")
        return LinearAEParams(W=W, V=V)
    if kind == MLP_AE:
        lists = {}
        for name in ("enc_w", "enc_b", "dec_w", "dec_b"):
            raw = _need(params, name, path)
            lists[name] = [_dec_array(a, enc, f"{path}.{name}[{j}]")
                           for j, a in enumerate(raw)]
        br = MlpAEParams(**lists)
        widths = [w.shape[0] for w in br.enc_w]
        if tuple(widths) != tuple(spec.widths):
            raise LoadError(path, f"encoder widths {widths} != spec {list(spec.widths)}")
        for j in range(1, len(br.enc_w)):
            if br.enc_w[j].shape[1] != br.enc_w[j - 1].shape[0]:
                raise LoadError(f"{path}.enc_w[{j}]", "layer shapes do not compose")
        for j in range(1, len(br.dec_w)):
            if br.dec_w[j].shape[1] != br.dec_w[j - 1].shape[0]:
                raise LoadError(f"{path}.dec_w[{j}]", "layer shapes do not compose")
        return br
    raise LoadError(f"{path}", f"unknown branch kind: {kind!r}")


def export_dataset(ds: Dataset, path, float_enc: str = "hex") -> None:
    if float_enc not in ("hex", "dec17"):
        raise ConfigError(f"unknown float_enc: {float_enc!r}")
    obj = {"schema_version": SCHEMA_VERSION, "kind": "dataset",
           "float_enc": float_enc, "d": ds.d,
           "image_shape": None if ds.image_shape is None else list(ds.image_shape),
           "ids": [int(i) for i in ds.ids],
           "X": _enc_array(ds.X, float_enc),
           "mu": _enc_array(ds.mu, float_enc),
           "s": _enc_array(ds.s, float_enc)}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_canonical(obj))


def load_dataset(path) -> Dataset:
    obj = _load_json(path)
    enc = _check_envelope(obj, "dataset")
    d = _need(obj, "d", "")
    ids = np.array(_need(obj, "ids", ""), dtype=np.int64)
    X = _dec_array(_need(obj, "X", ""), enc, "X", expect_shape=(len(ids), d))
    mu = _dec_array(_need(obj, "mu", ""), enc, "mu", expect_shape=(d,))
    s = _dec_array(_need(obj, "s", ""), enc, "s", expect_shape=(d,))
    shape = obj.get("image_shape")
    image_shape = None if shape is None else (int(shape[0]), int(shape[1]))
    try:
        return Dataset(X=X, mu=mu, s=s, image_shape=image_shape, ids=ids)
    except ConfigError as e:
        raise LoadError("<dataset>", str(e)) from None
