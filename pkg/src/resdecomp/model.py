"""Core model types: configuration, the trainable container, datasets.

All numerics are float64 throughout the package; gradient checks and the
deflation-equivalence tests need ~1e-6 relative accuracy, which float32
cannot deliver. Value types here are treated as immutable once built;
parameter mutation happens only inside the trainer's update phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError

# branch kinds
RANK1_TIED = "rank1_tied"        # reconstruction operator u u^T
RANK1_UNTIED = "rank1_untied"    # operator u v^T
LINEAR_AE = "linear"             # W (k x d) encode, V (d x k) decode
MLP_AE = "mlp"                   # affine stacks with tanh between layers

BRANCH_KINDS = (RANK1_TIED, RANK1_UNTIED, LINEAR_AE, MLP_AE)

# sweep schedules
GAUSS_SEIDEL = "gauss_seidel"
JACOBI = "jacobi"

# per-sample scale solvers
SIGMA_RIDGE = "ridge"
SIGMA_NNLS = "nnls"
SIGMA_ONES = "ones"

# gradient treatment of the cross-branch residual coupling
GRAD_FULL = "full"      # backprop through the -sum sigma_j xhat_j terms
GRAD_DETACH = "detach"  # treat neighbor reconstructions as constants


@dataclass(frozen=True)
class BranchSpec:
    """Branch architecture descriptor.

    ``widths`` is empty for the rank-1 kinds, ``(k,)`` for the linear
    autoencoder (code size k), and the hidden-plus-code widths
    ``(w1, ..., k)`` for the mlp kind.
    """

    kind: str = RANK1_TIED
    widths: tuple[int, ...] = ()

    def validate(self) -> list[str]:
        errs = []
        if self.kind not in BRANCH_KINDS:
            errs.append(f"unknown branch kind: {self.kind!r}")
            return errs
        if self.kind in (RANK1_TIED, RANK1_UNTIED):
            if self.widths:
                errs.append("rank-1 branches take no widths")
        elif self.kind == LINEAR_AE:
            if len(self.widths) != 1:
                errs.append("linear branch needs exactly one width (the code size)")
        elif self.kind == MLP_AE:
            if not self.widths:
                errs.append("mlp branch needs at least one width")
        if any(w < 1 for w in self.widths):
            errs.append("branch widths must be >= 1")
        return errs

    @property
    def code_width(self) -> int:
        """Code dimension k; rank-1 branches carry a scalar code."""
        return 1 if not self.widths else self.widths[-1]


@dataclass(frozen=True)
class ModelConfig:
    """Global hyperparameters of a decomposer model.

    ``damping`` is the relaxation factor applied after every branch
    update; ``ridge`` the Tikhonov epsilon of the closed-form scale
    solve; ``normalize_components`` absorbs component norms into the
    reported scales and keeps rank-1 directions unit length.
    """

    n_branches: int = 1
    branch_spec: BranchSpec = field(default_factory=BranchSpec)
    sweeps: int = 1
    schedule: str = GAUSS_SEIDEL
    damping: float = 1.0
    lambda_s: float = 0.0
    lambda_perp: float = 0.0
    ridge: float = 1e-8
    sigma_mode: str = SIGMA_RIDGE
    normalize_components: bool = True
    residual_grad_mode: str = GRAD_FULL
    seed: int = 0

    def with_(self, **kv) -> "ModelConfig":
        return replace(self, **kv)


def validate_config(config: ModelConfig) -> list[str]:
    """Return every violated constraint as a readable message; [] if valid."""
    errs = []
    if config.n_branches < 1:
        errs.append("n_branches must be >= 1")
    if config.sweeps < 1:
        errs.append("sweeps must be >= 1")
    if not (0.0 < config.damping <= 1.0):
        errs.append("damping must lie in (0,1]")
    if config.lambda_s < 0:
        errs.append("lambda_s must be >= 0")
    if config.lambda_perp < 0:
        errs.append("lambda_perp must be >= 0")
    if config.ridge <= 0:
        errs.append("ridge must be > 0")
    if config.schedule not in (GAUSS_SEIDEL, JACOBI):
        errs.append(f"unknown schedule: {config.schedule!r}")
    if config.sigma_mode not in (SIGMA_RIDGE, SIGMA_NNLS, SIGMA_ONES):
        errs.append(f"unknown sigma_mode: {config.sigma_mode!r}")
    if config.residual_grad_mode not in (GRAD_FULL, GRAD_DETACH):
        errs.append(f"unknown residual_grad_mode: {config.residual_grad_mode!r}")
    errs.extend(config.branch_spec.validate())
    return errs


@dataclass
class DecomposerModel:
    """N branch parameter sets plus config and optional fixed input masks.

    ``masks`` is an (N, d) array with entries in [0,1], or None. Masks are
    architectural priors of the branches (they modulate each branch's
    residual input), so they live on the model, not on datasets.
    """

    config: ModelConfig
    branches: list
    masks: Optional[np.ndarray] = None

    @property
    def n_branches(self) -> int:
        return self.config.n_branches

    @property
    def d(self) -> int:
        from .branches import branch_dim
        return branch_dim(self.branches[0])

    def mask(self, i: int) -> Optional[np.ndarray]:
        return None if self.masks is None else self.masks[i]


def init_model(config: ModelConfig, d: int, scale_spread: float = 0.0) -> DecomposerModel:
    """Build a model with freshly initialized branches.

    Branch i gets its own integer seed derived from ``config.seed`` so
    that reordering branches is equivalent to reordering seeds.
    ``scale_spread`` > 0 multiplies the init scale of affine branch i by
    ``1 + scale_spread*(i/(N-1) - 1/2)`` — a slight per-slot asymmetry
    that damps slot swapping; rank-1 directions are unit norm regardless.
    """
    from .branches import init_branch

    errs = validate_config(config)
    if errs:
        raise ConfigError("; ".join(errs))
    n = config.n_branches
    branch_seeds = np.random.SeedSequence(config.seed).generate_state(n)
    branches = []
    for i in range(n):
        gain = 1.0
        if scale_spread and n > 1:
            gain = 1.0 + scale_spread * (i / (n - 1) - 0.5)
        branches.append(init_branch(config.branch_spec, d, int(branch_seeds[i]), gain=gain))
    return DecomposerModel(config=config, branches=branches)


@dataclass
class Dataset:
    """Standardized signal vectors with their standardization statistics.

    ``X`` is (n, d); ``mu``/``s`` are the per-feature shift and scale
    that map raw space to standardized space (raw = X*s + mu).
    ``image_shape`` is (height, width) when rows are flattened images.
    """

    X: np.ndarray
    mu: np.ndarray
    s: np.ndarray
    image_shape: Optional[tuple[int, int]] = None
    ids: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.s = np.asarray(self.s, dtype=np.float64)
        if self.ids is None:
            self.ids = np.arange(self.X.shape[0], dtype=np.int64)
        if self.X.ndim != 2:
            raise ConfigError("dataset X must be 2-D (n, d)")
        d = self.X.shape[1]
        if self.mu.shape != (d,) or self.s.shape != (d,):
            raise ConfigError("standardization stats must have length d")
        if np.any(self.s <= 0):
            raise ConfigError("every scale entry must be > 0")
        if self.image_shape is not None:
            h, w = self.image_shape
            if h * w != d:
                raise ConfigError("image_shape does not match d")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def sample(self, sample_id: int) -> np.ndarray:
        idx = np.nonzero(self.ids == sample_id)[0]
        if idx.size != 1:
            raise IndexError(f"unknown sample id: {sample_id}")
        return self.X[idx[0]]
