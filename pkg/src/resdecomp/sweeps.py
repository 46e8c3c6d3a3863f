"""All-but-one residual sweeps: forward recurrences and unrolled backprop.

Each branch i sees the residual r_i = x - sum_{j != i} sigma_j x_hat_j.
A sweep updates every branch once; Gauss-Seidel feeds each update the
freshest neighbor reconstructions, Jacobi only the previous sweep's.
After every branch update the new reconstruction is relaxed against the
previous one: x_hat_i^(t) = (1-alpha) x_hat_i^(t-1) + alpha x_hat_i^(t,raw),
including the very first sweep (x_hat^(0) = 0).

The full per-sweep history is kept — K stays small, so the O(K*N*d)
memory buys an exact reverse-mode pass through the whole recurrence,
including the cross-branch coupling ("full" mode) or treating neighbor
reconstructions as constants ("detach" mode).

The batched engine below handles every branch kind; rank-1 models are
dispatched to the fused kernels when the numba backend is active.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .branches import branch_backward, branch_code_width, branch_forward
from .errors import DivergenceError, ShapeError
from .model import (DecomposerModel, GAUSS_SEIDEL, GRAD_DETACH, RANK1_TIED,
                    RANK1_UNTIED)

DIVERGENCE_LIMIT = kernels.DIVERGENCE_LIMIT


@dataclass
class SweepState:
    """History of one forward pass over a batch.

    residuals: (K, B, N, d); codes: [K][N] arrays (B, k_i);
    recons_raw: (K, B, N, d) pre-damping branch outputs;
    recons: (K+1, B, N, d) damped, with recons[0] = 0;
    xhat: (B, d) final scaled sum. For B == 1 the ``sample_*``
    accessors return per-sample views.
    """

    residuals: np.ndarray
    codes: list
    recons_raw: np.ndarray
    recons: np.ndarray
    xhat: np.ndarray

    @property
    def components(self) -> np.ndarray:
        """Final-sweep damped reconstructions, (B, N, d)."""
        return self.recons[-1]

    def H(self, b: int = 0) -> np.ndarray:
        """Component matrix of sample b: d x N, columns are x_hat_i."""
        return self.components[b].T

    def sample_components(self) -> np.ndarray:
        return self.components[0]

    def sample_codes(self) -> list:
        return [self.codes[-1][i][0] for i in range(len(self.codes[-1]))]

    def sample_xhat(self) -> np.ndarray:
        return self.xhat[0]


def compute_residual(x: np.ndarray, recons, sigma: np.ndarray, i: int) -> np.ndarray:
    """r_i = x - sum_{j != i} sigma_j * recons[j] (branch i excluded)."""
    x = np.asarray(x, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    n = len(recons)
    if not 0 <= i < n:
        raise IndexError(f"branch index {i} out of range for {n} branches")
    if sigma.shape != (n,):
        raise ShapeError(f"sigma has shape {sigma.shape}, expected ({n},)")
    r = x.copy()
    for j in range(n):
        if j == i:
            continue
        rj = np.asarray(recons[j], dtype=np.float64)
        if rj.shape != x.shape:
            raise ShapeError(f"recons[{j}] has shape {rj.shape}, expected {x.shape}")
        r -= sigma[j] * rj
    return r


def _rank1_stacks(model: DecomposerModel):
    kind = model.config.branch_spec.kind
    U = np.stack([b.u for b in model.branches])
    V = U if kind == RANK1_TIED else np.stack([b.v for b in model.branches])
    M = np.ones_like(U) if model.masks is None else np.asarray(model.masks, dtype=np.float64)
    return U, V, M


def _is_rank1(model: DecomposerModel) -> bool:
    return model.config.branch_spec.kind in (RANK1_TIED, RANK1_UNTIED)


def batch_forward(model: DecomposerModel, X: np.ndarray, sigmas: np.ndarray,
                  use_kernel=None) -> SweepState:
    """Run config.sweeps sweeps for a whole batch.

    X: (B, d); sigmas: (B, N). ``use_kernel`` overrides the backend
    choice (None = numba for rank-1 kinds when enabled).
    """
    cfg = model.config
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    B, d = X.shape
    if d != model.d:
        raise ShapeError(f"X has width {d}, model expects {model.d}")
    N = cfg.n_branches
    sigmas = np.ascontiguousarray(np.atleast_2d(np.asarray(sigmas, dtype=np.float64)))
    if sigmas.shape != (B, N):
        raise ShapeError(f"sigmas have shape {sigmas.shape}, expected ({B}, {N})")
    K = cfg.sweeps
    alpha = cfg.damping
    gs = cfg.schedule == GAUSS_SEIDEL

    if use_kernel is None:
        use_kernel = kernels.NUMBA_ENABLED and _is_rank1(model)
    if use_kernel and not _is_rank1(model):
        raise ShapeError("kernel path supports rank-1 branch kinds only")

    if use_kernel:
        U, V, M = _rank1_stacks(model)
        R, Z, Craw, C, status = kernels.rank1_sweep_forward(U, V, M, X, sigmas,
                                                            K, alpha, gs)
        if status[0] >= 0:
            raise DivergenceError(int(status[0]) + 1, int(status[1]) + 1)
        codes = [[Z[t, :, i, None] for i in range(N)] for t in range(K)]
    else:
        R = np.zeros((K, B, N, d))
        Craw = np.zeros((K, B, N, d))
        C = np.zeros((K + 1, B, N, d))
        codes = []
        for t in range(K):
            cur = C[t].copy()  # Gauss-Seidel overwrites rows as it goes
            sweep_codes = []
            for i in range(N):
                r = X.copy()
                for j in range(N):
                    if j != i:
                        r -= sigmas[:, j, None] * cur[:, j, :]
                R[t, :, i, :] = r
                out = branch_forward(model.branches[i], r, model.mask(i))
                raw = out.recon
                bad = ~np.isfinite(raw)
                if bad.any() or np.abs(raw).max(initial=0.0) > DIVERGENCE_LIMIT:
                    raise DivergenceError(t + 1, i + 1)
                Craw[t, :, i, :] = raw
                C[t + 1, :, i, :] = (1.0 - alpha) * C[t, :, i, :] + alpha * raw
                if gs:
                    cur[:, i, :] = C[t + 1, :, i, :]
                sweep_codes.append(out.code)
            codes.append(sweep_codes)

    xhat = np.einsum("bn,bnd->bd", sigmas, C[K])
    return SweepState(residuals=R, codes=codes, recons_raw=Craw, recons=C, xhat=xhat)


def run_sweeps(model: DecomposerModel, x: np.ndarray, sigma: np.ndarray,
               use_kernel=None) -> SweepState:
    """Single-sample convenience wrapper around batch_forward."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("run_sweeps expects a single vector; use batch_forward")
    return batch_forward(model, x[None, :], np.asarray(sigma, dtype=np.float64)[None, :],
                         use_kernel=use_kernel)


def batch_backward(model: DecomposerModel, sigmas: np.ndarray, state: SweepState,
                   comp_grads: np.ndarray, code_grads, use_kernel=None) -> list:
    """Pull loss gradients back through the sweep history.

    comp_grads: (B, N, d) d(loss)/d(final damped components);
    code_grads: per-branch (B, k_i) d(loss)/d(final-sweep codes).
    Returns one {param name -> gradient} dict per branch, gradients
    summed over the batch.

    "full" mode traverses the exact forward graph: each step's input
    gradient lands on the neighbor reconstructions that formed its
    residual (freshest versions for Gauss-Seidel; for Jacobi every cross
    term targets the previous sweep, so they are buffered and released
    at the sweep boundary). "detach" mode drops the cross terms but
    keeps the damping carry.
    """
    cfg = model.config
    K, B, N, d = state.residuals.shape
    alpha = cfg.damping
    gs = cfg.schedule == GAUSS_SEIDEL
    detach = cfg.residual_grad_mode == GRAD_DETACH
    sigmas = np.atleast_2d(np.asarray(sigmas, dtype=np.float64))

    if use_kernel is None:
        use_kernel = kernels.NUMBA_ENABLED and _is_rank1(model)

    if use_kernel and _is_rank1(model):
        U, V, M = _rank1_stacks(model)
        Gz = np.stack([np.asarray(g, dtype=np.float64).reshape(B) for g in code_grads], axis=1)
        dU, dV = kernels.rank1_sweep_backward(
            U, V, M, state.residuals, _codes_cube(state, B, N, K),
            sigmas, np.ascontiguousarray(comp_grads), Gz, alpha, gs, detach)
        if model.config.branch_spec.kind == RANK1_TIED:
            return [{"u": dU[i] + dV[i]} for i in range(N)]
        return [{"u": dU[i], "v": dV[i]} for i in range(N)]

    A = np.array(comp_grads, dtype=np.float64, copy=True)
    pend = np.zeros_like(A) if not gs else None
    grads = [None] * N
    zero_codes = [np.zeros((B, branch_code_width(b))) for b in model.branches]
    for t in range(K - 1, -1, -1):
        for i in range(N - 1, -1, -1):
            urg = alpha * A[:, i, :]
            ucg = code_grads[i] if t == K - 1 else zero_codes[i]
            bg = branch_backward(model.branches[i], state.residuals[t, :, i, :],
                                 model.mask(i), urg, ucg)
            if grads[i] is None:
                grads[i] = bg.params
            else:
                for name, g in bg.params.items():
                    grads[i][name] += g
            A[:, i, :] *= 1.0 - alpha
            if not detach:
                target = A if gs else pend
                for j in range(N):
                    if j != i:
                        target[:, j, :] -= sigmas[:, j, None] * bg.input_grad
        if not detach and not gs:
            A += pend
            pend[:] = 0.0
    return grads


def _codes_cube(state: SweepState, B: int, N: int, K: int) -> np.ndarray:
    Z = np.empty((K, B, N))
    for t in range(K):
        for i in range(N):
            Z[t, :, i] = np.asarray(state.codes[t][i]).reshape(B)
    return Z


def sweep_backward(model: DecomposerModel, sigma: np.ndarray, state: SweepState,
                   recon_grads, code_grads) -> list:
    """Per-sample wrapper: gradients for one SweepState produced at B=1.

    recon_grads: (N, d) upstream gradient on the final components;
    code_grads: per-branch (k_i,) upstream gradient on final codes.
    """
    if state.xhat.shape[0] != 1:
        raise ShapeError("sweep_backward expects a single-sample state")
    comp = np.asarray(recon_grads, dtype=np.float64)[None, ...]
    codes = [np.asarray(g, dtype=np.float64).reshape(1, -1) for g in code_grads]
    return batch_backward(model, np.asarray(sigma, dtype=np.float64)[None, :],
                          state, comp, codes)
