"""Deflation SVD ground truth and subspace comparison metrics.

The oracle extracts singular triplets one at a time by alternating power
iteration, subtracting each rank-one approximation before moving on.
Hand-rolled on purpose: the rank-1 training dynamics are supposed to
reproduce exactly this deflation behavior, so the reference must not
share code with the thing under test. (np.linalg is still used as
plumbing for the tiny cross-Gram SVD inside principal_angles and for
basis orthonormalization checks.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .model import DecomposerModel, RANK1_TIED, RANK1_UNTIED


@dataclass
class SvdOracleResult:
    """Singular triplets ordered by s descending.

    U: (d, r) left vectors; s: (r,) nonnegative values; V: (n, r) right
    vectors. rank_deficient notes an early stop (s_k below 1e-12).
    """

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    achieved_tol: float
    rank_deficient: bool = False

    @property
    def rank(self) -> int:
        return self.s.shape[0]


def _sign_fix(u: np.ndarray, v: np.ndarray | None = None):
    """Make the largest-|entry| coordinate of u positive; v flips along."""
    k = int(np.argmax(np.abs(u)))
    if u[k] < 0:
        u = -u
        if v is not None:
            v = -v
    return (u, v) if v is not None else u


def svd_deflation(data: np.ndarray, rank: int, max_iter: int = 2000,
                  tol: float = 1e-12) -> SvdOracleResult:
    """Top-``rank`` singular triplets of an (n_samples, d) matrix.

    Internally works on A = data.T so that U spans signal space. Each
    round alternates u <- Av/|Av|, v <- A'u/|A'u| until the angle
    between successive u iterates drops below tol (or max_iter); then
    s_k = u'Av, and A loses the rank-one slice s_k u v'. Stops early
    with a rank-deficiency note when s_k < 1e-12.
    """
    A = np.array(data, dtype=np.float64, copy=True).T
    d, n = A.shape
    if rank > min(d, n):
        raise ShapeError(f"rank {rank} exceeds min(d, n) = {min(d, n)}")
    rng = np.random.default_rng(0)
    us, ss, vs = [], [], []
    worst = 0.0
    deficient = False
    for _ in range(rank):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        u = None
        achieved = np.inf
        dead = False
        for _ in range(max_iter):
            u_prev = u
            u = A @ v
            nu = np.linalg.norm(u)
            if nu < 1e-300:
                dead = True
                break
            u /= nu
            v = A.T @ u
            nv = np.linalg.norm(v)
            if nv < 1e-300:
                dead = True
                break
            v /= nv
            if u_prev is not None:
                # angle between successive u iterates
                achieved = float(np.arccos(min(1.0, abs(float(u_prev @ u)))))
                if achieved < tol:
                    break
        if dead or u is None:
            deficient = True
            break
        s = float(u @ A @ v)
        if s < 1e-12:
            deficient = True
            break
        u, v = _sign_fix(u, v)
        us.append(u)
        ss.append(s)
        vs.append(v)
        worst = max(worst, achieved)
        A -= s * np.outer(u, v)
    U = np.stack(us, axis=1) if us else np.zeros((d, 0))
    V = np.stack(vs, axis=1) if vs else np.zeros((n, 0))
    return SvdOracleResult(U=U, s=np.array(ss), V=V, achieved_tol=worst,
                           rank_deficient=deficient)


def _mgs_orthonormalize(vectors) -> np.ndarray:
    """Modified Gram-Schmidt; raises on a dependent input set."""
    Q = []
    for col in np.asarray(vectors, dtype=np.float64).T.copy():
        for q in Q:
            col -= (q @ col) * q
        nrm = np.linalg.norm(col)
        if nrm < 1e-10:
            raise ValueError("basis vectors are linearly dependent (pivot < 1e-10)")
        Q.append(col / nrm)
    return np.stack(Q, axis=1)


def _as_columns(basis) -> np.ndarray:
    """Lists/tuples of vectors stack as columns; 2-D arrays pass through."""
    if isinstance(basis, (list, tuple)):
        return np.stack([np.asarray(v, dtype=np.float64) for v in basis], axis=1)
    arr = np.asarray(basis, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError("basis must be a column matrix or a list of vectors")
    return arr


def principal_angles(basis_a, basis_b) -> np.ndarray:
    """Canonical angles (degrees, ascending) between two subspaces.

    Both vector sets are orthonormalized by modified Gram-Schmidt, then
    the angles are arccos of the cross-Gram singular values.
    """
    A = _as_columns(basis_a)
    B = _as_columns(basis_b)
    if A.shape[0] != B.shape[0]:
        raise ShapeError("bases must live in the same space")
    Qa = _mgs_orthonormalize(A)
    Qb = _mgs_orthonormalize(B)
    sv = np.linalg.svd(Qa.T @ Qb, compute_uv=False)
    sv = np.clip(sv, -1.0, 1.0)
    return np.degrees(np.sort(np.arccos(sv)))


@dataclass
class AlignmentReport:
    cosines: np.ndarray        # per-branch best-match |cos|, branch order
    matched_index: np.ndarray  # oracle column matched to each branch
    angles_deg: np.ndarray     # principal angles, branch span vs oracle span

    def min_cosine(self) -> float:
        return float(self.cosines.min())


def compare_branches_to_svd(model: DecomposerModel,
                            oracle: SvdOracleResult) -> AlignmentReport:
    """Greedy max-|cosine| matching of branch directions to oracle u_k.

    Each oracle vector is claimed at most once (best pairs first); sign
    ambiguity is removed by the same largest-|entry| convention on both
    sides. Also reports principal angles between span{branch u} and
    span{oracle U}.
    """
    kind = model.config.branch_spec.kind
    if kind not in (RANK1_TIED, RANK1_UNTIED):
        raise ShapeError("comparison needs a rank-1 model")
    B = np.stack([_sign_fix(b.u / np.linalg.norm(b.u)) for b in model.branches], axis=1)
    U = oracle.U
    n_b, n_o = B.shape[1], U.shape[1]
    cos = np.abs(B.T @ U)  # (n_b, n_o)
    cosines = np.zeros(n_b)
    matched = np.full(n_b, -1, dtype=np.int64)
    free_b = set(range(n_b))
    free_o = set(range(n_o))
    while free_b and free_o:
        best = None
        for i in free_b:
            for k in free_o:
                if best is None or cos[i, k] > cos[best]:
                    best = (i, k)
        i, k = best
        cosines[i] = cos[i, k]
        matched[i] = k
        free_b.remove(i)
        free_o.remove(k)
    angles = principal_angles(B, U)
    return AlignmentReport(cosines=cosines, matched_index=matched, angles_deg=angles)
