"""Composite objective: reconstruction + l1 code sparsity + pairwise
orthogonality, with exact gradients w.r.t. components and codes.

Per sample:
    recon   = ||x - sum_i sigma_i xhat_i||^2
    sparse  = lambda_s * sum_i ||z_i||_1
    orth    = lambda_perp * sum over ordered pairs i != j of <xhat_i, xhat_j>^2

The i != j sum counts each unordered pair twice (ordered-pair reading of
the index notation), which is why the orthogonality gradient carries a
factor 4. Batch reduction is the arithmetic mean for every term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .sweeps import SweepState


@dataclass
class LossBreakdown:
    total: float
    recon_term: float
    sparsity_term: float
    orthogonality_term: float

    def as_dict(self) -> dict:
        return {"total": self.total, "recon": self.recon_term,
                "sparsity": self.sparsity_term, "orthogonality": self.orthogonality_term}


def _batch_terms(X, components, codes, sigmas, lambda_s, lambda_perp):
    """Summed-over-batch loss terms. components: (B,N,d); codes: [N](B,k)."""
    B, N, d = components.shape
    if X.shape != (B, d):
        raise ShapeError(f"x has shape {X.shape}, expected ({B}, {d})")
    if sigmas.shape != (B, N):
        raise ShapeError(f"sigma has shape {sigmas.shape}, expected ({B}, {N})")
    resid = X - np.einsum("bn,bnd->bd", sigmas, components)
    recon = float(np.einsum("bd,bd->", resid, resid))
    sparse = 0.0
    if lambda_s != 0.0:
        sparse = lambda_s * float(sum(np.abs(z).sum() for z in codes))
    orth = 0.0
    if lambda_perp != 0.0 and N > 1:
        gram = np.einsum("bid,bjd->bij", components, components)
        sq = gram ** 2
        # ordered pairs i != j: full square sum minus the diagonal
        orth = lambda_perp * float(sq.sum() - np.einsum("bii->", sq))
    return recon, sparse, orth


def batch_loss(X, components, codes, sigmas, lambda_s, lambda_perp) -> LossBreakdown:
    """Batch-mean LossBreakdown from final components/codes."""
    B = components.shape[0]
    recon, sparse, orth = _batch_terms(np.atleast_2d(X), components, codes,
                                       np.atleast_2d(sigmas), lambda_s, lambda_perp)
    recon, sparse, orth = recon / B, sparse / B, orth / B
    return LossBreakdown(total=recon + sparse + orth, recon_term=recon,
                         sparsity_term=sparse, orthogonality_term=orth)


def batch_loss_gradients(X, components, codes, sigmas, lambda_s, lambda_perp):
    """Gradients of the batch-mean loss.

    Returns (comp_grads (B,N,d), code_grads [N](B,k)). The l1 subgradient
    at exactly zero is taken as 0, so zero codes stay stationary.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    sigmas = np.atleast_2d(np.asarray(sigmas, dtype=np.float64))
    B, N, d = components.shape
    resid = X - np.einsum("bn,bnd->bd", sigmas, components)
    comp_grads = -2.0 * sigmas[:, :, None] * resid[:, None, :]
    if lambda_perp != 0.0 and N > 1:
        gram = np.einsum("bid,bjd->bij", components, components)
        diag = np.arange(N)
        gram[:, diag, diag] = 0.0  # exclude j == i from the pair sum
        comp_grads += 4.0 * lambda_perp * np.einsum("bij,bjd->bid", gram, components)
    comp_grads /= B
    code_grads = [lambda_s * np.sign(z) / B for z in codes]
    return comp_grads, code_grads


def composite_loss(x, state: SweepState, sigma, lambda_s, lambda_perp) -> LossBreakdown:
    """Per-sample loss from a single-sample SweepState."""
    comps = state.components
    codes = state.codes[-1]
    return batch_loss(x, comps, codes, sigma, lambda_s, lambda_perp)


def loss_gradients(x, state: SweepState, sigma, lambda_s, lambda_perp):
    """Per-sample gradients: (d(loss)/d(xhat_i) as (N,d), [d(loss)/d(z_i)])."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("loss_gradients expects a single sample")
    comp_grads, code_grads = batch_loss_gradients(
        x, state.components, state.codes[-1],
        np.asarray(sigma, dtype=np.float64), lambda_s, lambda_perp)
    return comp_grads[0], [g[0] for g in code_grads]
