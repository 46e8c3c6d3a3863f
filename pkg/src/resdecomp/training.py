"""Alternating training: per-sample scale estimation, then weight updates.

Step A holds weights fixed, runs the sweeps under the previous scales
(all-ones on the first pass), forms each sample's component matrix H and
solves for the scales. Step B holds the scales fixed, re-runs the sweeps,
and takes one bias-corrected adaptive-moment (Adam) step on the branch
weights through the full unrolled recurrence.

Scale conventions. The recurrences always consume the "raw" sigma that
multiplies the stored components. When normalize_components is on, the
solve runs against unit-normalized H columns and reports the absorbed
form sigma' = sigma_raw * ||xhat_i|| — the singular-value analog that is
invariant to component scale (and to the damping shrink (1-(1-a)^K) at
inference). SigmaStep carries both; the two coincide when normalization
is off or in fixed-ones mode.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .branches import param_items
from .errors import ConfigError, NumericError
from .loss import LossBreakdown, batch_loss, batch_loss_gradients
from .model import (Dataset, DecomposerModel, RANK1_TIED, RANK1_UNTIED,
                    SIGMA_NNLS, SIGMA_ONES, SIGMA_RIDGE)
from .sigma import solve_sigma_nnls
from .sweeps import batch_backward, batch_forward


@dataclass
class OptimizerState:
    """Optimizer rule plus per-parameter moment accumulators.

    algo "adam" applies the standard bias-corrected adaptive-moment
    update; algo "sgd" applies plain gradient descent and leaves the
    moment buffers untouched. Adaptive moments equalize step sizes
    across coordinates, which suits the generic presets; the spectral
    alignment curriculum needs raw gradient directions (plain descent),
    so both rules are first-class here.
    """

    algo: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    floor: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def init_adam(model: DecomposerModel, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, floor: float = 1e-8) -> OptimizerState:
    opt = OptimizerState(algo="adam", lr=lr, beta1=beta1, beta2=beta2, floor=floor)
    for branch in model.branches:
        opt.m.append({name: np.zeros_like(p) for name, p in param_items(branch)})
        opt.v.append({name: np.zeros_like(p) for name, p in param_items(branch)})
    return opt


def init_sgd(model: DecomposerModel, lr: float = 1e-3) -> OptimizerState:
    return OptimizerState(algo="sgd", lr=lr)


def _init_opt(model: DecomposerModel, optimizer: str, lr: float) -> OptimizerState:
    if optimizer == "adam":
        return init_adam(model, lr=lr)
    if optimizer == "sgd":
        return init_sgd(model, lr=lr)
    raise ConfigError(f"unknown optimizer: {optimizer!r}")


@dataclass
class SigmaStep:
    """Step-A output: reported scales and their recurrence-space form."""

    sigma: np.ndarray      # (B, N) solver output (absorbed form when normalizing)
    sigma_raw: np.ndarray  # (B, N) values the sweep recurrences consume


def _solve_batch_sigma(model: DecomposerModel, X: np.ndarray,
                       components: np.ndarray) -> SigmaStep:
    """Per-sample scale solve against each sample's component matrix."""
    cfg = model.config
    B, N, _ = components.shape
    if cfg.sigma_mode == SIGMA_ONES:
        ones = np.ones((B, N))
        return SigmaStep(sigma=ones, sigma_raw=ones.copy())

    comps = components
    norms = np.ones((B, N))
    dead = None
    if cfg.normalize_components:
        norms = np.linalg.norm(components, axis=2)
        # a collapsed component's unit column is pure noise, and dividing
        # the solved scale back by its norm would amplify it enormously;
        # freeze such entries at zero instead (contribution was <= 1e-10)
        dead = norms < 1e-10
        norms = np.where(dead, 1.0, norms)
        comps = np.where(dead[:, :, None], 0.0, components / norms[:, :, None])

    if cfg.sigma_mode == SIGMA_RIDGE:
        G = np.einsum("bid,bjd->bij", comps, comps)
        G += cfg.ridge * np.eye(N)
        rhs = np.einsum("bid,bd->bi", comps, X)
        # stacked solve wants (..., N, 1) rhs
        sigma = np.linalg.solve(G, rhs[:, :, None])[:, :, 0]
        sigma = np.maximum(sigma, 0.0)
    elif cfg.sigma_mode == SIGMA_NNLS:
        sigma = np.empty((B, N))
        for b in range(B):
            sigma[b], _ = solve_sigma_nnls(comps[b].T, X[b])
    else:
        raise ConfigError(f"unknown sigma_mode: {cfg.sigma_mode!r}")
    return SigmaStep(sigma=sigma, sigma_raw=sigma / norms)


def step_a_sigma(model: DecomposerModel, X: np.ndarray,
                 prev_sigma_raw: np.ndarray | None = None) -> SigmaStep:
    """Estimate per-sample scales with branch weights held fixed.

    Sweeps run under prev_sigma_raw (all-ones when absent), the solve
    uses the resulting final components. Branch parameters are not
    touched.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    B = X.shape[0]
    N = model.config.n_branches
    if model.config.sigma_mode == SIGMA_ONES:
        ones = np.ones((B, N))
        return SigmaStep(sigma=ones, sigma_raw=ones.copy())
    if prev_sigma_raw is None:
        prev_sigma_raw = np.ones((B, N))
    state = batch_forward(model, X, prev_sigma_raw)
    return _solve_batch_sigma(model, X, state.components)


def step_b_weights(model: DecomposerModel, X: np.ndarray, sigma_raw: np.ndarray,
                   opt: OptimizerState):
    """One optimizer step on branch weights under fixed scales.

    Re-runs the sweeps at sigma_raw (pass SigmaStep.sigma_raw), evaluates
    the composite loss, backpropagates through the unrolled recurrence,
    and applies one update under opt's rule (Adam or plain SGD). Rank-1
    directions are re-projected to unit norm afterwards when
    normalize_components is on. Returns (LossBreakdown, per-branch
    gradient l2 norms).
    """
    cfg = model.config
    if opt.algo not in ("adam", "sgd"):
        raise ConfigError(f"unknown optimizer: {opt.algo!r}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    sigma_raw = np.atleast_2d(np.asarray(sigma_raw, dtype=np.float64))
    B = X.shape[0]

    state = batch_forward(model, X, sigma_raw)
    codes = state.codes[-1]
    breakdown = batch_loss(X, state.components, codes, sigma_raw,
                           cfg.lambda_s, cfg.lambda_perp)
    comp_grads, code_grads = batch_loss_gradients(
        X, state.components, codes, sigma_raw, cfg.lambda_s, cfg.lambda_perp)
    grads = batch_backward(model, sigma_raw, state, comp_grads, code_grads)

    grad_norms = np.zeros(len(model.branches))
    for i, gd in enumerate(grads):
        sq = 0.0
        for name, g in gd.items():
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient in branch {i} ({name})")
            sq += float(np.vdot(g, g))
        grad_norms[i] = np.sqrt(sq)

    opt.step_count += 1
    t = opt.step_count
    bc1 = 1.0 - opt.beta1 ** t
    bc2 = 1.0 - opt.beta2 ** t
    for i, branch in enumerate(model.branches):
        for name, p in param_items(branch):
            g = grads[i][name]
            if opt.algo == "sgd":
                p -= opt.lr * g
                continue
            m = opt.m[i][name]
            v = opt.v[i][name]
            m *= opt.beta1
            m += (1.0 - opt.beta1) * g
            v *= opt.beta2
            v += (1.0 - opt.beta2) * g * g
            p -= opt.lr * (m / bc1) / (np.sqrt(v / bc2) + opt.floor)
        if cfg.normalize_components and cfg.branch_spec.kind in (RANK1_TIED, RANK1_UNTIED):
            branch.u /= np.linalg.norm(branch.u)
    return breakdown, grad_norms


@dataclass
class EpochStats:
    epoch: int
    loss: LossBreakdown
    sigma_mean: np.ndarray   # (N,) mean reported scale per branch
    grad_norms: np.ndarray   # (N,) batch-mean gradient l2 norm per branch
    wall_time: float

    def as_dict(self) -> dict:
        return {"epoch": self.epoch, "loss": self.loss.as_dict(),
                "sigma_mean": list(map(float, self.sigma_mean)),
                "grad_norms": list(map(float, self.grad_norms)),
                "wall_time": self.wall_time}


@dataclass
class TrainReport:
    epochs: list
    converged: bool = False
    reason: str = ""

    def as_dict(self) -> dict:
        return {"epochs": [e.as_dict() for e in self.epochs],
                "converged": self.converged, "reason": self.reason}

    def fingerprint(self) -> str:
        """Canonical hex encoding of every numeric field except wall-time.

        Two reports are bit-identical (up to timing) iff their
        fingerprints match; used by the determinism tests.
        """
        parts = []
        for e in self.epochs:
            parts.append(str(e.epoch))
            bd = e.loss
            for val in (bd.total, bd.recon_term, bd.sparsity_term, bd.orthogonality_term):
                parts.append(float(val).hex())
            parts.extend(float(x).hex() for x in e.sigma_mean)
            parts.extend(float(x).hex() for x in e.grad_norms)
        parts.append(str(int(self.converged)))
        parts.append(self.reason)
        return "|".join(parts)


def train(model: DecomposerModel, dataset: Dataset, epochs: int,
          batch_size: int | None = None, tol: float = 1e-10,
          lr: float = 1e-3, sigma_warmup_epochs: int = 0,
          opt: OptimizerState | None = None, optimizer: str = "adam"):
    """Run the alternating loop for up to ``epochs`` epochs.

    Each epoch shuffles the data with a seeded generator, then per batch
    runs Step A (scales, warm-started from the previous visit of each
    sample) and Step B (one weight update). The first
    ``sigma_warmup_epochs`` epochs force all-ones scales, which keeps
    every branch in play before the solver starts reallocating weight.
    Stops early when the relative change of the epoch-mean total loss
    stays below tol for 5 consecutive epochs (tol=0 disables the early
    stop). Returns (model, TrainReport); the model is updated in place.
    Pass opt to continue with existing optimizer state; otherwise one is
    created per ``optimizer`` ("adam" or "sgd") at learning rate lr.
    """
    cfg = model.config
    n = dataset.n
    if n == 0:
        raise ConfigError("dataset is empty")
    if batch_size is None:
        batch_size = n
    if not 1 <= batch_size <= n:
        raise ConfigError("batch_size must be in [1, n]")
    if epochs < 0:
        raise ConfigError("epochs must be >= 0")

    X = dataset.X
    N = cfg.n_branches
    if opt is None:
        opt = _init_opt(model, optimizer, lr)
    rng = np.random.default_rng(cfg.seed)
    sigma_store = np.ones((n, N))  # raw scales, warm-started across epochs

    report = TrainReport(epochs=[])
    prev_loss = None
    flat_streak = 0
    for epoch in range(epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        loss_sums = np.zeros(4)
        sig_sum = np.zeros(N)
        gn_sum = np.zeros(N)
        n_batches = 0
        warmup = epoch < sigma_warmup_epochs
        for lo in range(0, n, batch_size):
            idx = order[lo:lo + batch_size]
            Xb = X[idx]
            if warmup:
                sig = SigmaStep(sigma=np.ones((len(idx), N)),
                                sigma_raw=np.ones((len(idx), N)))
            else:
                sig = step_a_sigma(model, Xb, prev_sigma_raw=sigma_store[idx])
                sigma_store[idx] = sig.sigma_raw
            breakdown, grad_norms = step_b_weights(model, Xb, sig.sigma_raw, opt)
            w = len(idx)
            loss_sums += w * np.array([breakdown.total, breakdown.recon_term,
                                       breakdown.sparsity_term,
                                       breakdown.orthogonality_term])
            sig_sum += sig.sigma.sum(axis=0)
            gn_sum += grad_norms
            n_batches += 1
        loss_means = loss_sums / n
        stats = EpochStats(
            epoch=epoch,
            loss=LossBreakdown(total=loss_means[0], recon_term=loss_means[1],
                               sparsity_term=loss_means[2],
                               orthogonality_term=loss_means[3]),
            sigma_mean=sig_sum / n,
            grad_norms=gn_sum / max(n_batches, 1),
            wall_time=time.perf_counter() - t0)
        report.epochs.append(stats)

        cur = loss_means[0]
        if prev_loss is not None:
            rel = abs(cur - prev_loss) / max(abs(prev_loss), 1e-300)
            flat_streak = flat_streak + 1 if rel < tol else 0
            if flat_streak >= 5:
                report.converged = True
                report.reason = f"loss plateau over 5 epochs at epoch {epoch}"
                break
        prev_loss = cur
    if not report.converged:
        report.reason = "epoch limit reached" if epochs > 0 else "no epochs requested"
    return model, report


@dataclass
class TrainStage:
    """One leg of a training curriculum.

    The stage's config re-dresses the same branch parameters — it may
    change sweep count, damping, scale mode, or gradient mode, but must
    keep the architecture (branch count/kind/widths) fixed. tol
    defaults to 0 so a stage always runs its full epoch budget;
    curricula hand off at known points rather than on loss plateaus.
    """

    config: ModelConfig
    epochs: int
    lr: float = 1e-3
    optimizer: str = "adam"
    batch_size: int | None = None
    sigma_warmup_epochs: int = 0
    tol: float = 0.0


def train_stages(model: DecomposerModel, dataset: Dataset,
                 stages: list[TrainStage]):
    """Run a curriculum of stages over one set of branch parameters.

    Each stage wraps the shared branches in its own configuration and
    calls train with a fresh optimizer. Returns (model, reports) where
    the model carries the final stage's configuration and reports is
    one TrainReport per stage.
    """
    if not stages:
        raise ConfigError("train_stages needs at least one stage")
    arch = (model.config.n_branches, model.config.branch_spec)
    for k, st in enumerate(stages):
        if (st.config.n_branches, st.config.branch_spec) != arch:
            raise ConfigError(
                f"stage {k} changes the architecture; curricula may only "
                "change sweep/scale/gradient settings")
    reports = []
    for st in stages:
        model = DecomposerModel(config=st.config, branches=model.branches,
                                masks=model.masks)
        model, rep = train(model, dataset, epochs=st.epochs,
                           batch_size=st.batch_size, tol=st.tol, lr=st.lr,
                           sigma_warmup_epochs=st.sigma_warmup_epochs,
                           optimizer=st.optimizer)
        reports.append(rep)
    return model, reports


def infer(model: DecomposerModel, X: np.ndarray):
    """Decompose samples with a trained model: K sweeps at all-ones
    scales, then one per-sample scale solve.

    Returns (state, SigmaStep). The published reconstruction for a
    sample is H @ sigma_raw == H_normalized @ sigma — consistent with
    either scale form.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    B = X.shape[0]
    N = model.config.n_branches
    state = batch_forward(model, X, np.ones((B, N)))
    sig = _solve_batch_sigma(model, X, state.components)
    return state, sig
