"""Command-line front door: data generation, training, decomposition,
synthesis, SVD evaluation, and an HTTP serve mode.

Exit codes: 0 success; 1 eval-svd below threshold; 2 usage or input
error; 3 training divergence. Error messages are single lines on
stderr. Every command is deterministic given its arguments and seed
(serve request ordering excepted).

Settings resolve with documented precedence: built-in defaults, then
the chosen --preset, then the --config JSON file, then explicit flags
(strongest).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .dataio import (GrayImage, MaskSpec, downsample, export_dataset,
                     export_model, gaussian_mask, load_dataset, load_model,
                     load_pgm, random_mask_specs, render_gray, standardize,
                     synth_lowrank, synth_spatial_halves, write_pgm)
from .errors import DivergenceError
from .model import (GAUSS_SEIDEL, GRAD_DETACH, GRAD_FULL, JACOBI, LINEAR_AE,
                    MLP_AE, RANK1_TIED, RANK1_UNTIED, SIGMA_NNLS, SIGMA_ONES,
                    SIGMA_RIDGE, BranchSpec, DecomposerModel, ModelConfig,
                    init_model, validate_config)
from .server import published_sample, serve, synth_pixels
from .svd import compare_branches_to_svd, svd_deflation
from .training import TrainStage, train_stages

log = logging.getLogger("resdecomp.cli")

EXIT_OK = 0
EXIT_BELOW_THRESHOLD = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

_KINDS = {
    "rank1_tied": RANK1_TIED,
    "rank1_untied": RANK1_UNTIED,
    "linear": LINEAR_AE,
    "mlp": MLP_AE,
}
_SCHEDULES = {"gauss_seidel": GAUSS_SEIDEL, "jacobi": JACOBI}
_SIGMA_MODES = {"ridge": SIGMA_RIDGE, "nnls": SIGMA_NNLS, "ones": SIGMA_ONES}
_GRAD_MODES = {"full": GRAD_FULL, "detach": GRAD_DETACH}


class CliError(ValueError):
    """Maps to exit code 2 with a one-line message."""


# ------------------------------------------------------------ RunConfig --- #

@dataclass
class RunConfig:
    """Everything a training run needs, resolved from all setting layers.

    ``curriculum`` selects the schedule shape: "single" runs one stage
    with the settings below; "two_stage" runs a specialization stage
    (one sweep, damping 0.95, unit scales, detached residuals, plain
    SGD) before a calibration stage at the final configuration with
    ``stage2_*`` settings.
    """

    # model
    kind: str = RANK1_TIED
    widths: tuple = ()
    n_branches: int = 5
    sweeps: int = 3
    schedule: str = GAUSS_SEIDEL
    damping: float = 0.7
    lambda_s: float = 0.0
    lambda_perp: float = 0.0
    ridge: float = 1e-8
    sigma_mode: str = SIGMA_RIDGE
    grad_mode: str = GRAD_FULL
    normalize_components: bool = True
    seed: int = 0
    # training
    epochs: int = 100
    batch_size: Optional[int] = None
    lr: float = 1e-3
    optimizer: str = "adam"
    sigma_warmup: int = 0
    tol: float = 0.0
    curriculum: str = "single"
    stage2_epochs: int = 100
    stage2_lr: float = 1e-3
    stage2_optimizer: str = "sgd"
    # masks
    with_masks: bool = False
    mask_area: float = 0.5
    mask_centers: Optional[str] = None

    def model_config(self) -> ModelConfig:
        cfg = ModelConfig(
            n_branches=self.n_branches,
            branch_spec=BranchSpec(kind=self.kind, widths=tuple(self.widths)),
            sweeps=self.sweeps, schedule=self.schedule, damping=self.damping,
            lambda_s=self.lambda_s, lambda_perp=self.lambda_perp,
            ridge=self.ridge, sigma_mode=self.sigma_mode,
            normalize_components=self.normalize_components,
            residual_grad_mode=self.grad_mode, seed=self.seed)
        errs = validate_config(cfg)
        if errs:
            raise CliError("; ".join(errs))
        return cfg

    def stages(self) -> list:
        base = self.model_config()
        if self.curriculum == "single":
            return [TrainStage(config=base, epochs=self.epochs, lr=self.lr,
                               optimizer=self.optimizer,
                               batch_size=self.batch_size,
                               sigma_warmup_epochs=self.sigma_warmup,
                               tol=self.tol)]
        if self.curriculum == "two_stage":
            spec = base.with_(sweeps=1, damping=0.95, sigma_mode=SIGMA_ONES,
                              residual_grad_mode=GRAD_DETACH)
            return [TrainStage(config=spec, epochs=self.epochs, lr=self.lr,
                               optimizer="sgd", batch_size=self.batch_size),
                    TrainStage(config=base, epochs=self.stage2_epochs,
                               lr=self.stage2_lr,
                               optimizer=self.stage2_optimizer)]
        raise CliError(f"unknown curriculum: {self.curriculum!r}")


_PRESETS = {
    # rank-one branches recover principal directions; the two-stage
    # schedule first aligns directions by sequential deflation, then
    # calibrates scales at the final sweep configuration.
    "exp1": dict(kind=RANK1_TIED, widths=(), n_branches=5, sweeps=3,
                 damping=0.7, sigma_mode=SIGMA_RIDGE, grad_mode=GRAD_DETACH,
                 lambda_s=0.0, lambda_perp=0.0, curriculum="two_stage",
                 epochs=3000, lr=0.03, optimizer="sgd",
                 stage2_epochs=100, stage2_lr=1e-3, stage2_optimizer="sgd"),
    # nonlinear branches without masks: generic adaptive training.
    "exp2": dict(kind=MLP_AE, widths=(64, 16), n_branches=5, sweeps=3,
                 damping=0.7, sigma_mode=SIGMA_RIDGE, grad_mode=GRAD_FULL,
                 curriculum="single", epochs=150, lr=1e-3, optimizer="adam",
                 sigma_warmup=20),
    # nonlinear branches behind fixed Gaussian input masks: the
    # specialization stage lets mask-gain asymmetry decide which branch
    # claims which region before scales are calibrated.
    "exp3": dict(kind=MLP_AE, widths=(16, 2), n_branches=2, sweeps=3,
                 damping=0.7, sigma_mode=SIGMA_RIDGE, grad_mode=GRAD_DETACH,
                 curriculum="two_stage", epochs=600, lr=0.01, optimizer="sgd",
                 stage2_epochs=200, stage2_lr=1e-3, stage2_optimizer="adam",
                 with_masks=True, mask_area=0.5),
}

_RUN_FIELDS = {f.name for f in fields(RunConfig)}


def resolve_run_config(args) -> RunConfig:
    """defaults <- preset <- --config file <- explicit flags."""
    settings = {}
    if args.preset:
        if args.preset not in _PRESETS:
            raise CliError(f"unknown preset: {args.preset!r}")
        settings.update(_PRESETS[args.preset])
    if args.config:
        try:
            overlay = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise CliError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CliError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(overlay, dict):
            raise CliError("config file must hold a JSON object")
        unknown = sorted(set(overlay) - _RUN_FIELDS)
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(unknown)}")
        if "widths" in overlay:
            overlay["widths"] = tuple(overlay["widths"])
        settings.update(overlay)
    for name in _RUN_FIELDS:
        val = getattr(args, name, None)
        if val is not None:
            settings[name] = val
    if "kind" in settings:
        settings["kind"] = _lookup(settings["kind"], _KINDS, "branch kind")
    if "schedule" in settings:
        settings["schedule"] = _lookup(settings["schedule"], _SCHEDULES,
                                       "schedule")
    if "sigma_mode" in settings:
        settings["sigma_mode"] = _lookup(settings["sigma_mode"], _SIGMA_MODES,
                                         "sigma mode")
    if "grad_mode" in settings:
        settings["grad_mode"] = _lookup(settings["grad_mode"], _GRAD_MODES,
                                        "residual gradient mode")
    return RunConfig(**settings)


def _lookup(value: str, table: dict, what: str) -> str:
    if value in table:
        return table[value]
    if value in table.values():
        return value
    raise CliError(f"unknown {what}: {value!r} (choose from "
                   f"{', '.join(sorted(table))})")


# ------------------------------------------------------------- helpers --- #

def _parse_kv(spec: str, what: str) -> dict:
    out = {}
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "=" not in tok:
            raise CliError(f"malformed {what} entry {tok!r}: expected key=value")
        key, _, val = tok.partition("=")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise CliError(f"bad number in {what}: {tok!r}") from exc
    if not out:
        raise CliError(f"empty {what} specification")
    return out


def _need_keys(kv: dict, required, what: str):
    missing = [k for k in required if k not in kv]
    if missing:
        raise CliError(f"{what} is missing {', '.join(missing)}")
    unknown = sorted(set(kv) - set(required))
    if unknown:
        raise CliError(f"{what} has unknown keys: {', '.join(unknown)}")


def _load_dataset(path: str):
    try:
        return load_dataset(path)
    except OSError as exc:
        raise CliError(f"cannot read dataset: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"bad dataset file: {exc}") from exc


def _load_model(path: str):
    try:
        return load_model(path)
    except OSError as exc:
        raise CliError(f"cannot read model: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"bad model file: {exc}") from exc


def _check_dims(model, ds):
    if model.d != ds.d:
        raise CliError(f"model expects d={model.d}, dataset has d={ds.d}")


def _sample_ids(spec: str, n: int) -> list:
    ids = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            sid = int(tok)
        except ValueError as exc:
            raise CliError(f"bad sample id: {tok!r}") from exc
        if not 0 <= sid < n:
            raise CliError(f"sample id {sid} out of range [0, {n})")
        ids.append(sid)
    if not ids:
        raise CliError("no sample ids given")
    return ids


def _write_image(path: Path, dataset, pixels: np.ndarray):
    h, w = dataset.image_shape
    write_pgm(path, GrayImage(height=h, width=w, maxval=255,
                              pixels=pixels.reshape(h, w)))


# ------------------------------------------------------------- gen-data --- #

def cmd_gen_data(args) -> int:
    sources = [s for s in (args.synth, args.synth_halves, args.pgm_dir)
               if s is not None]
    if len(sources) != 1:
        raise CliError("exactly one of --synth, --synth-halves, --pgm-dir "
                       "is required")
    if args.synth:
        kv = _parse_kv(args.synth, "--synth")
        _need_keys(kv, ("d", "n", "rank", "noise", "seed"), "--synth")
        ds, truth = synth_lowrank(d=int(kv["d"]), n_samples=int(kv["n"]),
                                  rank=int(kv["rank"]), noise_std=kv["noise"],
                                  seed=int(kv["seed"]))
        export_dataset(ds, args.out)
        spectrum = ", ".join(f"{s:g}" for s in truth["spectrum"])
        print(f"d={ds.d} n={ds.n} spectrum=[{spectrum}]")
        return EXIT_OK
    if args.synth_halves:
        kv = _parse_kv(args.synth_halves, "--synth-halves")
        allowed = ("h", "w", "n", "noise", "seed", "per_half", "envelope")
        _need_keys({k: kv[k] for k in kv if k in ("h", "w", "n", "noise", "seed")},
                   ("h", "w", "n", "noise", "seed"), "--synth-halves")
        unknown = sorted(set(kv) - set(allowed))
        if unknown:
            raise CliError(f"--synth-halves has unknown keys: {', '.join(unknown)}")
        ds, _ = synth_spatial_halves(
            (int(kv["h"]), int(kv["w"])), int(kv["n"]), kv["noise"],
            seed=int(kv["seed"]), per_half=int(kv.get("per_half", 2)),
            envelope_std=kv.get("envelope"))
        export_dataset(ds, args.out)
        print(f"d={ds.d} n={ds.n} image_shape={ds.image_shape[0]}x{ds.image_shape[1]}")
        return EXIT_OK
    src = Path(args.pgm_dir)
    if not src.is_dir():
        raise CliError(f"not a directory: {src}")
    paths = sorted(src.glob("**/*.pgm"))
    if len(paths) < 2:
        raise CliError(f"need at least 2 .pgm files under {src}, found {len(paths)}")
    imgs = []
    for p in paths:
        img = load_pgm(p)
        pix = img.pixels.astype(np.float64)
        if args.downsample > 1:
            pix = downsample(pix, args.downsample)
        imgs.append(pix)
    shapes = {a.shape for a in imgs}
    if len(shapes) != 1:
        raise CliError(f"images disagree on shape after downsampling: {sorted(shapes)}")
    shape = imgs[0].shape
    ds = standardize(np.stack([a.reshape(-1) for a in imgs]), image_shape=shape)
    export_dataset(ds, args.out)
    print(f"d={ds.d} n={ds.n} image_shape={shape[0]}x{shape[1]}")
    return EXIT_OK


# ---------------------------------------------------------------- train --- #

def _build_masks(rc: RunConfig, ds) -> Optional[np.ndarray]:
    if not rc.with_masks:
        return None
    if ds.image_shape is None:
        raise CliError("masked training needs a dataset with an image shape")
    shape = tuple(ds.image_shape)
    if rc.mask_centers:
        specs = []
        for part in rc.mask_centers.split(";"):
            bits = part.split(",")
            if len(bits) != 2:
                raise CliError(f"bad mask center {part!r}: expected row,col")
            try:
                r, c = float(bits[0]), float(bits[1])
            except ValueError as exc:
                raise CliError(f"bad mask center {part!r}") from exc
            specs.append(MaskSpec(center=(r, c), area_fraction=rc.mask_area,
                                  shape=shape))
        if len(specs) != rc.n_branches:
            raise CliError(f"{len(specs)} mask centers for {rc.n_branches} branches")
    else:
        specs = random_mask_specs(shape, rc.n_branches, rc.mask_area, rc.seed)
    try:
        return np.stack([gaussian_mask(s) for s in specs])
    except ValueError as exc:
        raise CliError(f"bad mask geometry: {exc}") from exc


def _report_lines(stage_idx: int, report) -> list:
    lines = []
    for e in report.epochs:
        row = e.as_dict()
        row["stage"] = stage_idx
        lines.append(json.dumps(row))
    summary = {"stage": stage_idx, "converged": report.converged,
               "reason": report.reason,
               "fingerprint": hashlib.sha256(
                   report.fingerprint().encode()).hexdigest()}
    lines.append(json.dumps(summary))
    return lines


def cmd_train(args) -> int:
    rc = resolve_run_config(args)
    ds = _load_dataset(args.data)
    masks = _build_masks(rc, ds)
    stages = rc.stages()
    model = init_model(stages[0].config, d=ds.d)
    if masks is not None:
        model = DecomposerModel(config=model.config, branches=model.branches,
                                masks=masks)
    report_path = Path(args.report) if args.report else \
        Path(args.out).with_suffix(".report.jsonl")
    if Path(args.out).resolve() == report_path.resolve():
        raise CliError("--out and --report must be distinct paths")

    lines = []
    if rc.epochs > 0:
        model, reports = train_stages(model, ds, stages)  # divergence -> exit 3
        for k, rep in enumerate(reports):
            lines.extend(_report_lines(k, rep))
        final_loss = reports[-1].epochs[-1].loss.total if reports[-1].epochs \
            else float("nan")
        log.info("trained %d stage(s), final loss %.6g", len(reports), final_loss)
    else:
        # epoch budget 0: publish the untouched initialization, but under
        # the final-stage (inference) configuration
        model = DecomposerModel(config=stages[-1].config,
                                branches=model.branches, masks=model.masks)
    export_model(model, args.out)
    report_path.write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"model written to {args.out}")
    print(f"report written to {report_path}")
    return EXIT_OK


# ------------------------------------------------------------ decompose --- #

def _per_term_stats(x: np.ndarray, pub) -> list:
    terms = []
    for i in range(pub.components.shape[0]):
        contrib = pub.sigma[i] * pub.components[i]
        terms.append({
            "energy": float(np.dot(contrib, contrib)),
            "solo_loss": float(np.sum((x - contrib) ** 2)),
        })
    return terms


def cmd_decompose(args) -> int:
    model = _load_model(args.model)
    ds = _load_dataset(args.data)
    _check_dims(model, ds)
    if ds.image_shape is None:
        raise CliError("decompose writes images; dataset has no image shape")
    ids = _sample_ids(args.samples, ds.n)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for sid in ids:
        pub = published_sample(model, ds, sid)
        x = pub.original
        files = {}
        renders = {}

        pix, scale, offset = render_gray(ds, x)
        name = f"sample{sid:04d}_original.pgm"
        _write_image(outdir / name, ds, pix)
        files["original"] = name
        renders["original"] = {"scale": scale, "offset": offset}

        comp_files, comp_renders = [], []
        for i in range(model.n_branches):
            contrib = pub.sigma[i] * pub.components[i]
            pix, scale, offset = render_gray(ds, contrib)
            name = f"sample{sid:04d}_comp{i + 1}.pgm"
            _write_image(outdir / name, ds, pix)
            comp_files.append(name)
            comp_renders.append({"scale": scale, "offset": offset})
        files["components"] = comp_files
        renders["components"] = comp_renders

        pix, scale, offset = render_gray(ds, pub.reconstruction)
        name = f"sample{sid:04d}_sum.pgm"
        _write_image(outdir / name, ds, pix)
        files["sum"] = name
        renders["sum"] = {"scale": scale, "offset": offset}

        resid = x - pub.reconstruction
        sidecar = {
            "sample": sid,
            "sigma": pub.sigma.tolist(),
            "per_term": _per_term_stats(x, pub),
            "loss": {"recon": float(np.dot(resid, resid))},
            "files": files,
            "renders": renders,
        }
        (outdir / f"sample{sid:04d}.json").write_text(
            json.dumps(sidecar, indent=2) + "\n")
    print(f"wrote {len(ids)} sample(s) to {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------- synth --- #

def _parse_sigma_args(args, model, ds):
    """Returns (sample_id, sigma vector) from flags or the override file."""
    if args.sigma is not None and args.sigma_file is not None:
        raise CliError("--sigma and --sigma-file are mutually exclusive")
    sample = args.sample
    file_sigma = None
    if args.sigma_file:
        try:
            body = json.loads(Path(args.sigma_file).read_text())
        except OSError as exc:
            raise CliError(f"cannot read sigma file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CliError(f"sigma file is not valid JSON: {exc}") from exc
        if not isinstance(body, dict) or "sigma" not in body:
            raise CliError('sigma file must be {"sample": id, "sigma": [...]}')
        if sample is None:
            sample = body.get("sample")
        values = body["sigma"]
        if not isinstance(values, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool)
                for v in values):
            raise CliError("sigma file field 'sigma' must be a list of numbers")
        file_sigma = np.asarray(values, dtype=np.float64)

    if sample is None:
        raise CliError("no sample id: pass --sample (or put it in the sigma file)")
    if isinstance(sample, bool) or not isinstance(sample, int):
        raise CliError("sample id must be an integer")
    if not 0 <= sample < ds.n:
        raise CliError(f"sample id {sample} out of range [0, {ds.n})")

    if file_sigma is not None:
        sigma = file_sigma
    elif args.sigma is not None:
        spec = args.sigma
        if "=" in spec:
            # sparse override on top of the model's own estimate
            overrides = {}
            for key, val in _parse_kv(spec, "--sigma").items():
                try:
                    idx = int(key)
                except ValueError as exc:
                    raise CliError(f"bad sigma index {key!r}") from exc
                if not 0 <= idx < model.n_branches:
                    raise CliError(f"sigma index {idx} out of range "
                                   f"[0, {model.n_branches})")
                overrides[idx] = val
            sigma = published_sample(model, ds, sample).sigma.copy()
            for idx, val in overrides.items():
                sigma[idx] = val
        else:
            try:
                sigma = np.asarray(
                    [float(t) for t in spec.split(",") if t.strip()],
                    dtype=np.float64)
            except ValueError as exc:
                raise CliError(f"bad --sigma vector: {spec!r}") from exc
    else:
        raise CliError("one of --sigma or --sigma-file is required")

    if sigma.ndim != 1 or sigma.shape[0] != model.n_branches:
        raise CliError(f"sigma must have length {model.n_branches}")
    if not np.all(np.isfinite(sigma)):
        raise CliError("sigma entries must be finite")
    if np.any(sigma < 0):
        raise CliError("sigma entries must be >= 0")
    return sample, sigma


def cmd_synth(args) -> int:
    model = _load_model(args.model)
    ds = _load_dataset(args.data)
    _check_dims(model, ds)
    if ds.image_shape is None:
        raise CliError("synth writes an image; dataset has no image shape")
    sample, sigma = _parse_sigma_args(args, model, ds)
    pixels, scale, offset = synth_pixels(model, ds, sample, sigma)
    out = Path(args.out)
    _write_image(out, ds, pixels)
    sidecar = {"sample": sample, "sigma": sigma.tolist(),
               "scale": scale, "offset": offset}
    out.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    print(f"synthesized image written to {out}")
    return EXIT_OK


# ------------------------------------------------------------- eval-svd --- #

def cmd_eval_svd(args) -> int:
    model = _load_model(args.model)
    ds = _load_dataset(args.data)
    _check_dims(model, ds)
    if model.config.branch_spec.kind not in (RANK1_TIED, RANK1_UNTIED):
        raise CliError("eval-svd needs a rank-1 model")
    oracle = svd_deflation(ds.X, model.n_branches)
    rep = compare_branches_to_svd(model, oracle)
    for i, (c, k) in enumerate(zip(rep.cosines, rep.matched_index)):
        print(f"branch {i}: |cos|={c:.9f} matched_direction={k}")
    angles = " ".join(f"{a:.6f}" for a in rep.angles_deg)
    print(f"principal angles (deg): {angles}")
    ok = bool(np.all(rep.cosines >= args.min_cos))
    print(f"min |cos| = {rep.cosines.min():.9f} "
          f"(threshold {args.min_cos:g}) -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_BELOW_THRESHOLD


# ---------------------------------------------------------------- serve --- #

def cmd_serve(args) -> int:
    model = _load_model(args.model)
    ds = _load_dataset(args.data)
    _check_dims(model, ds)
    frontend = Path(args.frontend) if args.frontend else None
    if frontend is not None and not frontend.is_dir():
        raise CliError(f"frontend directory not found: {frontend}")
    try:
        serve(model, ds, args.port, frontend_dir=frontend, host=args.host)
    except OSError as exc:
        raise CliError(f"cannot bind port {args.port}: {exc}") from exc
    except KeyboardInterrupt:
        pass
    return EXIT_OK


# ----------------------------------------------------------------- main --- #

def _add_run_config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("model settings (override preset/config file)")
    g.add_argument("--kind", choices=sorted(_KINDS), default=None)
    g.add_argument("--widths", type=lambda s: tuple(int(t) for t in s.split(",") if t),
                   default=None, metavar="W1,W2,...")
    g.add_argument("--n-branches", dest="n_branches", type=int, default=None)
    g.add_argument("--sweeps", type=int, default=None)
    g.add_argument("--schedule", choices=sorted(_SCHEDULES), default=None)
    g.add_argument("--damping", type=float, default=None)
    g.add_argument("--lambda-s", dest="lambda_s", type=float, default=None)
    g.add_argument("--lambda-perp", dest="lambda_perp", type=float, default=None)
    g.add_argument("--ridge", type=float, default=None)
    g.add_argument("--sigma-mode", dest="sigma_mode",
                   choices=sorted(_SIGMA_MODES), default=None)
    g.add_argument("--grad-mode", dest="grad_mode",
                   choices=sorted(_GRAD_MODES), default=None)
    g.add_argument("--seed", type=int, default=None)
    t = p.add_argument_group("training settings")
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--optimizer", choices=("adam", "sgd"), default=None)
    t.add_argument("--sigma-warmup", dest="sigma_warmup", type=int, default=None)
    t.add_argument("--tol", type=float, default=None)
    t.add_argument("--curriculum", choices=("single", "two_stage"), default=None)
    t.add_argument("--stage2-epochs", dest="stage2_epochs", type=int, default=None)
    t.add_argument("--stage2-lr", dest="stage2_lr", type=float, default=None)
    t.add_argument("--stage2-optimizer", dest="stage2_optimizer",
                   choices=("adam", "sgd"), default=None)
    m = p.add_argument_group("mask settings")
    m.add_argument("--with-masks", dest="with_masks", action="store_const",
                   const=True, default=None)
    m.add_argument("--mask-area", dest="mask_area", type=float, default=None)
    m.add_argument("--mask-centers", dest="mask_centers", default=None,
                   metavar="R,C;R,C;...")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="resdecomp",
        description="Residual-decomposition networks: train, decompose, "
                    "synthesize, evaluate, serve.")
    p.add_argument("--verbose", action="store_true",
                   help="log progress details to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate or ingest a dataset")
    g.add_argument("--synth", metavar="d=..,n=..,rank=..,noise=..,seed=..")
    g.add_argument("--synth-halves",
                   metavar="h=..,w=..,n=..,noise=..,seed=..[,per_half=..][,envelope=..]")
    g.add_argument("--pgm-dir", metavar="DIR")
    g.add_argument("--downsample", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a decomposer model")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--report", default=None,
                   help="JSON-lines report path (default: <out>.report.jsonl)")
    t.add_argument("--preset", choices=sorted(_PRESETS), default=None)
    t.add_argument("--config", default=None,
                   help="JSON file with RunConfig fields; flags override it")
    _add_run_config_flags(t)
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("decompose", help="write per-sample component images")
    d.add_argument("--model", required=True)
    d.add_argument("--data", required=True)
    d.add_argument("--samples", required=True, metavar="ID[,ID...]")
    d.add_argument("--outdir", required=True)
    d.set_defaults(func=cmd_decompose)

    s = sub.add_parser("synth", help="re-synthesize a sample at edited scales")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--sample", type=int, default=None)
    s.add_argument("--sigma", default=None,
                   metavar="V1,V2,... | I=V,I=V,...")
    s.add_argument("--sigma-file", dest="sigma_file", default=None,
                   help='JSON {"sample": id, "sigma": [...]}')
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval-svd", help="compare rank-1 branches to the SVD")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--min-cos", dest="min_cos", type=float, default=0.99)
    e.set_defaults(func=cmd_eval_svd)

    v = sub.add_parser("serve", help="serve a model over HTTP")
    v.add_argument("--model", required=True)
    v.add_argument("--data", required=True)
    v.add_argument("--port", type=int, default=8000)
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--frontend", default=None,
                   help="directory with the static studio bundle")
    v.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, ValueError) as exc:  # CliError/ParseError/LoadError included
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
