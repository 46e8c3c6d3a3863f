"""Residual-driven signal decomposition with competing branch autoencoders.

A model holds N small autoencoder branches. Each branch sees the
all-but-one residual of the current reconstruction mix, encodes and
decodes it, and the damped component estimates are refined over K
coordinate sweeps. Per-sample component scales come from a closed-form
ridge solve or a non-negative least-squares solve against the frozen
component matrix. Training alternates the scale solve with one Adam
step on a composite loss (reconstruction + L1 code sparsity + pairwise
component orthogonality).

Hot rank-1 paths run through numba kernels when available; set
RESDECOMP_NUMBA=0 to force the pure-numpy engine (same results).
"""

from .branches import (BranchGradients, BranchOutput, LinearAEParams,
                       MlpAEParams, Rank1TiedParams, Rank1UntiedParams,
                       branch_backward, branch_forward, init_branch)
from .dataio import (GrayImage, MaskSpec, downsample, export_dataset,
                     export_model, gaussian_mask, half_level_radius,
                     inverse_standardize, load_dataset, load_model, load_pgm,
                     mask_tau, random_mask_specs, render_gray, standardize,
                     synth_lowrank, synth_spatial_halves, write_pgm)
from .errors import (ConfigError, DivergenceError, LoadError, NumericError,
                     ParseError, ShapeError)
from .loss import (LossBreakdown, batch_loss, batch_loss_gradients,
                   composite_loss, loss_gradients)
from .model import (BRANCH_KINDS, BranchSpec, Dataset, DecomposerModel,
                    GAUSS_SEIDEL, GRAD_DETACH, GRAD_FULL, JACOBI, LINEAR_AE,
                    MLP_AE, ModelConfig, RANK1_TIED, RANK1_UNTIED,
                    SIGMA_NNLS, SIGMA_ONES, SIGMA_RIDGE, init_model,
                    validate_config)
from .server import PublishedSample, published_sample, serve, synth_pixels
from .sigma import (nnls_oracle, normalize_columns, solve_sigma_nnls,
                    solve_sigma_ridge)
from .svd import (AlignmentReport, SvdOracleResult, compare_branches_to_svd,
                  principal_angles, svd_deflation)
from .sweeps import (SweepState, batch_backward, batch_forward,
                     compute_residual, run_sweeps, sweep_backward)
from .training import (EpochStats, OptimizerState, SigmaStep, TrainReport,
                       TrainStage, infer, init_adam, init_sgd, step_a_sigma,
                       step_b_weights, train, train_stages)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport", "BRANCH_KINDS", "BranchGradients", "BranchOutput",
    "BranchSpec", "ConfigError", "Dataset", "DecomposerModel",
    "DivergenceError", "EpochStats", "GAUSS_SEIDEL", "GRAD_DETACH",
    "GRAD_FULL", "GrayImage", "JACOBI", "LINEAR_AE", "LinearAEParams",
    "LoadError", "LossBreakdown", "MLP_AE", "MaskSpec", "MlpAEParams",
    "ModelConfig", "NumericError", "OptimizerState", "ParseError",
    "PublishedSample", "RANK1_TIED", "RANK1_UNTIED", "Rank1TiedParams",
    "Rank1UntiedParams", "SIGMA_NNLS", "SIGMA_ONES", "SIGMA_RIDGE",
    "ShapeError", "SigmaStep", "SvdOracleResult", "SweepState",
    "TrainReport", "TrainStage",
    "batch_backward", "batch_forward", "batch_loss", "batch_loss_gradients",
    "branch_backward", "branch_forward", "compare_branches_to_svd",
    "composite_loss", "compute_residual", "downsample", "export_dataset",
    "export_model", "gaussian_mask", "half_level_radius", "infer",
    "init_adam", "init_branch", "init_model", "init_sgd",
    "inverse_standardize", "load_dataset", "load_model", "load_pgm",
    "loss_gradients", "mask_tau", "nnls_oracle", "normalize_columns",
    "principal_angles", "published_sample", "random_mask_specs",
    "render_gray", "run_sweeps", "serve", "solve_sigma_nnls",
    "solve_sigma_ridge", "standardize", "step_a_sigma", "step_b_weights",
    "svd_deflation", "sweep_backward", "synth_lowrank",
    "synth_pixels", "synth_spatial_halves", "train", "train_stages",
    "validate_config", "write_pgm"
]
