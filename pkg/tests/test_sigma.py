"""Scale solvers vs closed-form identities and an exhaustive oracle."""

import numpy as np
import pytest

from resdecomp import (NumericError, ShapeError, nnls_oracle,
                       normalize_columns, solve_sigma_nnls, solve_sigma_ridge)
from resdecomp.sigma import nnls_step_bound


def _objective(H, x, sigma):
    r = x - H @ sigma
    return 0.5 * float(r @ r)


def _kkt_residual(H, x, sigma):
    """Inf-norm of the projected gradient of the NNLS objective."""
    g = H.T @ (H @ sigma - x)
    pg = np.where(sigma > 0, g, np.minimum(g, 0.0))
    return float(np.abs(pg).max())


class TestRidge:
    def test_optimality_identity(self, rng):
        """The ridge solution satisfies H'(x - H sigma) = eps * sigma."""
        for trial in range(25):
            H = rng.standard_normal((10, 4))
            x = rng.standard_normal(10)
            eps = 10.0 ** rng.uniform(-9, -3)
            sigma = solve_sigma_ridge(H, x, eps)
            lhs = H.T @ (x - H @ sigma)
            np.testing.assert_allclose(lhs, eps * sigma, atol=1e-10)

    def test_orthonormal_columns_give_projections(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((12, 3)))
        x = rng.standard_normal(12)
        sigma = solve_sigma_ridge(Q, x, 1e-12)
        np.testing.assert_allclose(sigma, Q.T @ x, atol=1e-9)

    def test_collinear_columns_stay_solvable(self, rng):
        u = rng.standard_normal(8)
        H = np.stack([u, u], axis=1)  # exactly rank deficient
        x = rng.standard_normal(8)
        sigma = solve_sigma_ridge(H, x, 1e-8)
        assert np.all(np.isfinite(sigma))
        # symmetric system splits the weight evenly
        np.testing.assert_allclose(sigma[0], sigma[1], atol=1e-8)

    def test_clamp_zeroes_negatives(self, rng):
        H = np.eye(3)
        x = np.array([1.0, -2.0, 3.0])
        sigma = solve_sigma_ridge(H, x, 1e-10, clamp_nonneg=True)
        assert sigma[1] == 0.0 and sigma[0] > 0 and sigma[2] > 0

    def test_input_validation(self, rng):
        H = rng.standard_normal((6, 2))
        x = rng.standard_normal(6)
        with pytest.raises(ValueError):
            solve_sigma_ridge(H, x, eps=0.0)
        with pytest.raises(ShapeError):
            solve_sigma_ridge(H, rng.standard_normal(5))
        with pytest.raises(ShapeError):
            solve_sigma_ridge(H[None, ...], x)
        with pytest.raises(NumericError):
            solve_sigma_ridge(H * np.nan, x)


class TestNnls:
    def test_matches_exhaustive_oracle(self, rng):
        for trial in range(50):
            N = int(rng.integers(2, 6))
            H = rng.standard_normal((10, N))
            x = rng.standard_normal(10)
            sigma, converged = solve_sigma_nnls(H, x, tol=1e-10,
                                                use_kernel=False)
            assert converged
            assert np.all(sigma >= 0)
            best = nnls_oracle(H, x)
            assert _objective(H, x, sigma) <= _objective(H, x, best) + 1e-8
            assert _kkt_residual(H, x, sigma) <= 1e-8

    def test_nonnegative_data_recovers_exact_solution(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((12, 3)))
        truth = np.array([2.0, 0.5, 1.0])
        x = Q @ truth
        sigma, converged = solve_sigma_nnls(Q, x, tol=1e-12, use_kernel=False)
        assert converged
        np.testing.assert_allclose(sigma, truth, atol=1e-8)

    def test_anticorrelated_column_pinned_at_zero(self, rng):
        u = rng.standard_normal(9)
        u /= np.linalg.norm(u)
        H = np.stack([u, -u], axis=1)
        x = 3.0 * u
        sigma, _ = solve_sigma_nnls(H, x, use_kernel=False)
        np.testing.assert_allclose(sigma, [3.0, 0.0], atol=1e-8)

    def test_zero_matrix_returns_zero(self):
        sigma, converged = solve_sigma_nnls(np.zeros((5, 3)), np.ones(5),
                                            use_kernel=False)
        assert converged
        np.testing.assert_array_equal(sigma, 0.0)

    def test_objective_history_is_non_increasing(self, rng):
        H = rng.standard_normal((10, 4))
        x = rng.standard_normal(10)
        _, _, hist = solve_sigma_nnls(H, x, use_kernel=False,
                                      return_history=True)
        assert np.all(np.diff(hist) <= 1e-12)

    def test_max_iter_reports_nonconvergence(self, rng):
        H = rng.standard_normal((10, 4))
        H[:, 1] = H[:, 0] + 1e-3 * rng.standard_normal(10)  # ill-conditioned
        x = H @ np.ones(4) + 0.1 * rng.standard_normal(10)  # interior optimum
        sigma, converged = solve_sigma_nnls(H, x, tol=1e-14, max_iter=1,
                                            use_kernel=False)
        assert not converged
        assert np.all(np.isfinite(sigma))

    def test_step_bound_dominates_spectrum(self, rng):
        for _ in range(10):
            H = rng.standard_normal((8, 4))
            lam_max = float(np.linalg.eigvalsh(H.T @ H).max())
            assert nnls_step_bound(H) >= lam_max - 1e-10


class TestOracle:
    def test_beats_or_ties_any_feasible_point(self, rng):
        for _ in range(20):
            H = rng.standard_normal((8, 4))
            x = rng.standard_normal(8)
            best = nnls_oracle(H, x)
            assert np.all(best >= 0)
            obj = _objective(H, x, best)
            for _ in range(30):
                trial_pt = np.abs(rng.standard_normal(4))
                assert obj <= _objective(H, x, trial_pt) + 1e-12

    def test_rejects_wide_problems(self, rng):
        with pytest.raises(ValueError):
            nnls_oracle(rng.standard_normal((4, 13)), rng.standard_normal(4))


class TestNormalizeColumns:
    def test_unit_norms_and_reconstruction_identity(self, rng):
        H = rng.standard_normal((9, 4)) * np.array([1.0, 5.0, 0.1, 2.0])
        Hn, norms = normalize_columns(H)
        np.testing.assert_allclose(np.linalg.norm(Hn, axis=0), 1.0,
                                   atol=1e-12)
        sigma = rng.standard_normal(4)
        np.testing.assert_allclose(Hn @ (sigma * norms), H @ sigma,
                                   atol=1e-12)

    def test_zero_column_untouched(self):
        H = np.zeros((5, 2))
        H[:, 0] = [3.0, 4.0, 0, 0, 0]
        Hn, norms = normalize_columns(H)
        assert norms[0] == 5.0 and norms[1] == 1.0
        np.testing.assert_array_equal(Hn[:, 1], 0.0)
