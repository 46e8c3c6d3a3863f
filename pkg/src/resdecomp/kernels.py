"""Jitted kernels for the rank-1 sweep recurrences and the NNLS inner loop.

The generic engine in sweeps.py computes the same quantities for every
branch kind in vectorized numpy; these fused kernels exist because the
rank-1 sweep loop (and the projected-gradient iteration inside the scale
solver) dominate training time. Path selection:

- ``RESDECOMP_NUMBA=0`` in the environment, or numba unavailable
  -> pure numpy everywhere;
- ``RESDECOMP_NUMBA=1`` or unset -> jitted kernels where applicable.

The two paths agree to ~1e-12 relative (summation order differs between
BLAS and the sequential loops), and each path is bitwise deterministic.

Kernels report divergence through a status pair instead of raising
(nopython code cannot build error messages); callers translate the
(sweep, branch) codes into DivergenceError.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay importable
    HAVE_NUMBA = False

    def njit(*a, **k):
        def wrap(f):
            return f
        return wrap


DIVERGENCE_LIMIT = 1e12


def _env_wants_numba() -> bool:
    v = os.environ.get("RESDECOMP_NUMBA", "").strip().lower()
    if v in ("0", "false", "off", "no"):
        return False
    return True


NUMBA_ENABLED = HAVE_NUMBA and _env_wants_numba()


def backend() -> str:
    """Name of the active sweep/NNLS backend."""
    return "numba" if NUMBA_ENABLED else "numpy"


@njit(cache=True)
def rank1_sweep_forward(U, V, M, X, S, K, alpha, gauss_seidel):
    """K damped sweeps for N rank-1 branches over a batch.

    U, V, M: (N, d) decoder dirs, encoder dirs, input masks (ones if unused).
    X: (B, d) inputs; S: (B, N) scales. Returns the full history:
    residuals R (K,B,N,d), codes Z (K,B,N), raw recons (K,B,N,d),
    damped recons C (K+1,B,N,d) with C[0] = 0, and an int64 status pair
    (-1,-1 = ok, else the 0-based sweep/branch where values blew up).
    """
    B, d = X.shape
    N = U.shape[0]
    R = np.zeros((K, B, N, d))
    Z = np.zeros((K, B, N))
    Craw = np.zeros((K, B, N, d))
    C = np.zeros((K + 1, B, N, d))
    status = np.empty(2, dtype=np.int64)
    status[0] = -1
    status[1] = -1
    for t in range(K):
        for i in range(N):
            for b in range(B):
                # all-but-one residual; Gauss-Seidel reads rows already
                # updated this sweep, Jacobi only the previous sweep
                for p in range(d):
                    acc = X[b, p]
                    for j in range(N):
                        if j == i:
                            continue
                        if gauss_seidel and j < i:
                            acc -= S[b, j] * C[t + 1, b, j, p]
                        else:
                            acc -= S[b, j] * C[t, b, j, p]
                    R[t, b, i, p] = acc
                z = 0.0
                for p in range(d):
                    z += V[i, p] * M[i, p] * R[t, b, i, p]
                if not np.isfinite(z) or abs(z) > DIVERGENCE_LIMIT:
                    status[0] = t
                    status[1] = i
                    return R, Z, Craw, C, status
                Z[t, b, i] = z
                for p in range(d):
                    raw = z * U[i, p]
                    Craw[t, b, i, p] = raw
                    C[t + 1, b, i, p] = (1.0 - alpha) * C[t, b, i, p] + alpha * raw
    return R, Z, Craw, C, status


@njit(cache=True)
def rank1_sweep_backward(U, V, M, R, Z, S, Gc, Gz, alpha, gauss_seidel, detach_cross):
    """Reverse-mode pass through rank1_sweep_forward's history.

    Gc: (B, N, d) gradient w.r.t. final damped components C[K].
    Gz: (B, N) gradient w.r.t. final-sweep codes.
    Returns (dU, dV): decoder-direction and encoder-direction gradient
    sums over the batch; tied branches add the two.
    """
    K = R.shape[0]
    B = R.shape[1]
    N = U.shape[0]
    d = U.shape[1]
    A = Gc.copy()                    # adjoint of C[t] rows, updated in place
    pend = np.zeros((B, N, d))       # Jacobi: cross terms wait for the sweep edge
    dU = np.zeros((N, d))
    dV = np.zeros((N, d))
    for t in range(K - 1, -1, -1):
        for i in range(N - 1, -1, -1):
            for b in range(B):
                ucg = Gz[b, i] if t == K - 1 else 0.0
                # q = d(loss)/d(code z_i^(t)) pulled through recon + code paths
                q = ucg
                for p in range(d):
                    q += alpha * A[b, i, p] * U[i, p]
                z = Z[t, b, i]
                for p in range(d):
                    dU[i, p] += z * alpha * A[b, i, p]
                    dV[i, p] += q * M[i, p] * R[t, b, i, p]
                for p in range(d):
                    A[b, i, p] *= 1.0 - alpha
                if not detach_cross:
                    # d(loss)/d(r_i) lands on every neighbor residual term
                    for j in range(N):
                        if j == i:
                            continue
                        sj = S[b, j]
                        if gauss_seidel:
                            for p in range(d):
                                A[b, j, p] -= sj * q * V[i, p] * M[i, p]
                        else:
                            for p in range(d):
                                pend[b, j, p] -= sj * q * V[i, p] * M[i, p]
        if not detach_cross and not gauss_seidel:
            for b in range(B):
                for j in range(N):
                    for p in range(d):
                        A[b, j, p] += pend[b, j, p]
                        pend[b, j, p] = 0.0
    return dU, dV


@njit(cache=True)
def nnls_projected_gradient(G, b, c, step, tol, max_iter):
    """Projected gradient on f(s) = 0.5 s'Gs - b's + c with s >= 0.

    Fixed step, projection = elementwise max(0, .); stops when the
    projected gradient's inf-norm drops to tol. Returns
    (sigma, iterations, converged, objective history[0..iterations]).
    """
    N = b.shape[0]
    sigma = np.zeros(N)
    hist = np.empty(max_iter + 1)
    grad = np.empty(N)
    hist[0] = c
    it = 0
    converged = False
    while True:
        pg_norm = 0.0
        for i in range(N):
            g = -b[i]
            for j in range(N):
                g += G[i, j] * sigma[j]
            grad[i] = g
            pg = g if sigma[i] > 0.0 else min(g, 0.0)
            if abs(pg) > pg_norm:
                pg_norm = abs(pg)
        if pg_norm <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        obj = c
        for i in range(N):
            s = sigma[i] - step * grad[i]
            if s < 0.0:
                s = 0.0
            sigma[i] = s
        for i in range(N):
            acc = -b[i]
            for j in range(N):
                acc += 0.5 * G[i, j] * sigma[j]
            obj += acc * sigma[i]
        hist[it] = obj
    return sigma, it, converged, hist[: it + 1]


def warmup():
    """Force-compile the kernels (first call pays the JIT cost)."""
    if not NUMBA_ENABLED:
        return
    U = np.ones((1, 2))
    M = np.ones((1, 2))
    X = np.ones((1, 2))
    S = np.ones((1, 1))
    R, Z, Craw, C, status = rank1_sweep_forward(U, U, M, X, S, 1, 1.0, True)
    rank1_sweep_backward(U, U, M, R, Z, S, np.zeros((1, 1, 2)), np.zeros((1, 1)),
                         1.0, True, False)
    nnls_projected_gradient(np.eye(1), np.ones(1), 0.5, 1.0, 1e-10, 4)
