"""Per-sample scale estimation against the component matrix H (d x N).

Three routes: a ridge closed form (tiny Tikhonov, optional nonnegative
clamp), nonnegative least squares by projected gradient, and an
exhaustive active-set oracle used for testing. Duplicate or collinear
components make H'H rank-deficient; the ridge term keeps the solve total
(columns are never dropped — overlap suppression is the orthogonality
penalty's job, not the solver's).
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from . import kernels
from .errors import NumericError, ShapeError


def _check_hx(H, x):
    H = np.asarray(H, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if H.ndim != 2:
        raise ShapeError("H must be a d x N matrix")
    if x.shape != (H.shape[0],):
        raise ShapeError(f"x has shape {x.shape}, expected ({H.shape[0]},)")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(x))):
        raise NumericError("H and x must be finite")
    return H, x


def solve_sigma_ridge(H: np.ndarray, x: np.ndarray, eps: float = 1e-8,
                      clamp_nonneg: bool = False) -> np.ndarray:
    """sigma = (H'H + eps*I)^{-1} H'x via a direct SPD factorization.

    eps > 0 makes the system positive definite for any H. With
    clamp_nonneg, negative entries are zeroed after the solve.
    """
    H, x = _check_hx(H, x)
    if eps <= 0:
        raise ValueError("ridge eps must be > 0")
    N = H.shape[1]
    G = H.T @ H + eps * np.eye(N)
    sigma = np.linalg.solve(G, H.T @ x)
    if clamp_nonneg:
        sigma = np.maximum(sigma, 0.0)
    return sigma


def nnls_step_bound(H: np.ndarray) -> float:
    """Upper bound on the largest eigenvalue of H'H (Frobenius norm).

    lam_max(G) <= ||G||_F for symmetric PSD G, so 1/bound is always a
    descent step for the projected gradient; the looser constant costs
    at most a sqrt(N) factor in iterations.
    """
    G = H.T @ H
    return float(np.linalg.norm(G))


def solve_sigma_nnls(H: np.ndarray, x: np.ndarray, tol: float = 1e-10,
                     max_iter: int | None = None, use_kernel=None,
                     return_history: bool = False):
    """min 0.5*||x - H sigma||^2 subject to sigma >= 0, projected gradient.

    Fixed step 1/L with L from nnls_step_bound; stops when the projected
    gradient (the KKT residual) has inf-norm <= tol. Hitting max_iter is
    reported through the converged flag, not an exception. The default
    budget of 100*N*d iterations covers moderately conditioned H (the
    linear rate is roughly 1 - 1/cond(H'H)); callers may raise it for
    ill-conditioned instances.

    Returns (sigma, converged) or (sigma, converged, objective_history).
    """
    H, x = _check_hx(H, x)
    if tol <= 0:
        raise ValueError("tol must be > 0")
    d, N = H.shape
    if max_iter is None:
        max_iter = 100 * N * d
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    G = H.T @ H
    b = H.T @ x
    c = 0.5 * float(x @ x)
    L = nnls_step_bound(H)
    if L < 1e-300:  # H is numerically zero; sigma = 0 is optimal
        out = (np.zeros(N), True)
        return (*out, np.array([c])) if return_history else out
    step = 1.0 / L
    if use_kernel is None:
        use_kernel = kernels.NUMBA_ENABLED
    if use_kernel:
        sigma, _, converged, hist = kernels.nnls_projected_gradient(
            G, b, c, step, tol, max_iter)
    else:
        sigma, converged, hist = _nnls_pg_numpy(G, b, c, step, tol, max_iter)
    if return_history:
        return sigma, bool(converged), np.asarray(hist)
    return sigma, bool(converged)


def _nnls_pg_numpy(G, b, c, step, tol, max_iter):
    """Pure-numpy twin of kernels.nnls_projected_gradient."""
    sigma = np.zeros_like(b)
    hist = [c]
    it = 0
    converged = False
    while True:
        grad = G @ sigma - b
        pg = np.where(sigma > 0.0, grad, np.minimum(grad, 0.0))
        if np.abs(pg).max() <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        sigma = np.maximum(sigma - step * grad, 0.0)
        hist.append(c + (0.5 * (G @ sigma) - b) @ sigma)
    return sigma, converged, np.array(hist)


def nnls_oracle(H: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Exhaustive NNLS: try all 2^N active sets, keep the best feasible.

    Free coordinates are solved with a 1e-12 ridge for rank safety;
    a candidate is feasible when its free part is >= 0. Guarded to
    N <= 12 (4096 subsets).
    """
    H, x = _check_hx(H, x)
    N = H.shape[1]
    if N > 12:
        raise ValueError("nnls_oracle is exhaustive; N must be <= 12")
    best = np.zeros(N)
    best_obj = 0.5 * float(x @ x)  # empty active set: sigma = 0
    idx = list(range(N))
    for size in range(1, N + 1):
        for free in combinations(idx, size):
            Hf = H[:, free]
            G = Hf.T @ Hf + 1e-12 * np.eye(size)
            sf = np.linalg.solve(G, Hf.T @ x)
            if np.any(sf < 0):
                continue
            r = x - Hf @ sf
            obj = 0.5 * float(r @ r)
            if obj < best_obj:
                best_obj = obj
                best = np.zeros(N)
                best[list(free)] = sf
    return best


def normalize_columns(H: np.ndarray):
    """Scale nonzero columns of H to unit l2 norm.

    Returns (H_normalized, column_norms). Columns with norm < 1e-30 are
    left untouched and get a recorded norm of 1, so the reconstruction
    identity H_normalized @ (sigma * norms) == H @ sigma always holds.
    """
    H = np.asarray(H, dtype=np.float64)
    norms = np.linalg.norm(H, axis=0)
    norms = np.where(norms < 1e-30, 1.0, norms)
    return H / norms, norms
