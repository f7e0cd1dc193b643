import math

import numpy as np
import pytest

from transglasso import (
    AdmmConfig,
    ContractError,
    CovMatrix,
    ProblemInstance,
    omega_k_update,
    residuals,
    shared_split_prox,
    soft_threshold,
    solve_mtglasso,
)

from conftest import make_problem, rand_spd, random_problem

TIGHT = AdmmConfig(eps_abs=1e-9, eps_rel=1e-9, max_iter=20000)


def split_objective(x, y, c, lam, rho, alphas):
    """Direct evaluation of the split subproblem objective."""
    x = float(x)
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    a = np.asarray(alphas, dtype=float)
    return (
        0.5 * rho * np.sum((x + y - c) ** 2)
        + lam * abs(x)
        + lam * np.sum(np.sqrt(a) * np.abs(y))
    )


class TestSoftThreshold:
    def test_branches(self):
        assert soft_threshold(5.0, 2.0) == 3.0
        assert soft_threshold(1.0, 2.0) == 0.0
        assert soft_threshold(-5.0, 2.0) == -3.0

    def test_negative_threshold_rejected(self):
        with pytest.raises(ContractError):
            soft_threshold(1.0, -0.1)


class TestOmegaKUpdate:
    def test_zero_input_gives_identity(self):
        out = omega_k_update(np.zeros((2, 2)), 1.0, 1.0)
        np.testing.assert_allclose(out, np.eye(2), atol=1e-12)

    def test_diag_positive_root(self):
        # positive root of w^2 - 3w - 1 = 0 on the first eigenvalue
        out = omega_k_update(np.diag([3.0, 0.0]), 1.0, 1.0)
        np.testing.assert_allclose(
            out, np.diag([(3 + math.sqrt(13)) / 2, 1.0]), atol=1e-12
        )

    @pytest.mark.parametrize("rho", [0.5, 1.0, 5.0])
    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_stationarity_residual(self, rho, alpha, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 9))
        c = rng.standard_normal((d, d))
        c = 0.5 * (c + c.T)
        out = omega_k_update(c, alpha, rho)
        resid = -alpha * np.linalg.inv(out) + rho * out - rho * c
        assert np.linalg.norm(resid) <= 1e-10 * d
        np.testing.assert_array_equal(out, out.T)
        assert np.linalg.eigvalsh(out)[0] > 0

    def test_asymmetric_rejected(self):
        with pytest.raises(ContractError):
            omega_k_update(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0, 1.0)


class TestSharedSplitProx:
    def test_penalty_dominates(self):
        res = shared_split_prox([1.0], 10.0, 1.0, [1.0])
        assert res.x == 0.0
        np.testing.assert_array_equal(res.y, [0.0])
        assert res.converged

    @pytest.mark.parametrize("seed", range(5))
    def test_unpenalized_feasibility(self, seed):
        rng = np.random.default_rng(seed)
        K = int(rng.integers(0, 4))
        c = rng.standard_normal(K + 1) * 3
        a = rng.dirichlet(np.ones(K + 1))
        res = shared_split_prox(c, 0.0, 1.0, a)
        np.testing.assert_allclose(res.x + res.y, c, atol=1e-12)

    def test_symmetric_case_matches_grid_oracle(self):
        c = np.array([2.0, 2.0])
        lam, rho, a = 0.5, 1.0, np.array([0.5, 0.5])
        res = shared_split_prox(c, lam, rho, a)
        # dense 2-d grid over (x, y) with y1 = y2 by symmetry
        xs = np.linspace(-3, 3, 1201)
        ys = np.linspace(-3, 3, 1201)
        xx, yy = np.meshgrid(xs, ys)
        obj = (
            0.5 * rho * 2 * (xx + yy - 2.0) ** 2
            + lam * np.abs(xx)
            + lam * math.sqrt(0.5) * 2 * np.abs(yy)
        )
        grid_min = obj.min()
        got = split_objective(res.x, res.y, c, lam, rho, a)
        assert abs(got - grid_min) <= 1e-3

    @pytest.mark.parametrize("seed", range(8))
    def test_y_block_optimality_exact(self, seed):
        rng = np.random.default_rng(100 + seed)
        K = int(rng.integers(0, 4))
        c = rng.standard_normal(K + 1) * 2
        a = rng.dirichlet(np.ones(K + 1))
        lam = float(rng.uniform(0, 1.5))
        rho = float(rng.uniform(0.5, 2.0))
        res = shared_split_prox(c, lam, rho, a)
        expected_y = np.sign(c - res.x) * np.maximum(
            np.abs(c - res.x) - lam * np.sqrt(a) / rho, 0.0
        )
        np.testing.assert_array_equal(res.y, expected_y)


class TestResiduals:
    def test_converged_state_is_zero(self):
        d, m = 3, 2
        omega = np.eye(d)
        gammas = np.zeros((m, d, d))
        omega_ks = omega[None] + gammas
        zs = np.zeros((m, d, d))
        r_pri, r_dual, _, _ = residuals(
            omega_ks, omega, gammas, omega, gammas, zs, 1.0, 1e-4, 1e-4
        )
        assert r_pri == 0.0 and r_dual == 0.0

    def test_identity_frobenius(self):
        # K=0, d=2: slack I against consensus 0 gives sqrt(2)
        omega = np.zeros((2, 2))
        gammas = np.zeros((1, 2, 2))
        omega_ks = np.eye(2)[None]
        r_pri, _, _, _ = residuals(
            omega_ks, omega, gammas, omega, gammas, np.zeros((1, 2, 2)), 1.0, 1e-4, 0.0
        )
        assert r_pri == pytest.approx(math.sqrt(2))

    def test_eps_pri_hand_value(self):
        d, m = 10, 2
        zero = np.zeros((m, d, d))
        _, _, eps_pri, _ = residuals(
            zero, np.zeros((d, d)), zero, np.zeros((d, d)), zero, zero, 1.0, 1e-4, 0.0
        )
        assert eps_pri == pytest.approx(1e-4 * 10 * math.sqrt(2), rel=1e-12)


class TestSolveMtGlasso:
    def test_identity_fixed_point(self):
        problem = make_problem([np.eye(2)], [40])
        sol = solve_mtglasso(problem, 0.0, TIGHT)
        assert sol.converged
        np.testing.assert_allclose(sol.initial_estimates[0], np.eye(2), atol=1e-6)

    def test_full_matrix_penalty_scalar_stationarity(self):
        # 1/w = 1 + 1 entrywise on the diagonal
        problem = make_problem([np.eye(2)], [40])
        sol = solve_mtglasso(problem, 1.0, TIGHT)
        np.testing.assert_allclose(sol.initial_estimates[0], 0.5 * np.eye(2), atol=1e-4)

    def test_identical_studies_identical_estimates(self, rng):
        s = rand_spd(rng, 4)
        problem = make_problem([s, s], [80, 80])
        sol = solve_mtglasso(problem, 0.3, TIGHT)
        np.testing.assert_allclose(
            sol.initial_estimates[0], sol.initial_estimates[1], atol=1e-6
        )

    def test_symmetry_of_every_iterate(self, rng):
        problem = random_problem(rng, 5, 2)
        seen = []

        def watch(state):
            for key in ("omega", "omega_ks", "gammas", "zs"):
                arr = state[key]
                arrs = arr[None] if arr.ndim == 2 else arr
                for mat in arrs:
                    seen.append(np.max(np.abs(mat - mat.T)))

        solve_mtglasso(problem, 0.2, AdmmConfig(max_iter=60), callback=watch)
        assert seen and max(seen) <= 1e-8

    def test_large_penalty_kills_offdiagonals(self, rng):
        problem = random_problem(rng, 4, 1)
        lam = (
            (problem.K + 2)
            * max(np.max(np.abs(c.matrix)) for c in problem.covs)
        )
        sol = solve_mtglasso(problem, lam, AdmmConfig())
        for est in sol.initial_estimates:
            off = est - np.diag(np.diagonal(est))
            assert np.all(off == 0.0)

    @pytest.mark.parametrize("seed", [3, 17])
    def test_kkt_on_support(self, seed):
        rng = np.random.default_rng(seed)
        problem = random_problem(rng, 6, 2, base=0.5)
        lam = 0.1
        sol = solve_mtglasso(problem, lam, AdmmConfig())
        assert sol.converged
        grad = np.zeros((problem.d, problem.d))
        for k, cov in enumerate(problem.covs):
            grad += problem.weights[k] * (
                cov.matrix - np.linalg.inv(sol.initial_estimates[k])
            )
        support = sol.shared != 0.0
        assert support.any()
        viol = np.abs(grad + lam * np.sign(sol.shared))[support].max()
        assert viol <= 10 * max(sol.eps_pri, sol.eps_dual)

    def test_warm_start_agrees_with_cold(self, rng):
        problem = random_problem(rng, 4, 1)
        cold = solve_mtglasso(problem, 0.2, TIGHT)
        near = solve_mtglasso(problem, 0.25, TIGHT)
        warm = solve_mtglasso(problem, 0.2, TIGHT, init=near.state)
        assert warm.converged
        np.testing.assert_allclose(
            warm.initial_estimates, cold.initial_estimates, atol=1e-6
        )
        assert warm.iterations <= cold.iterations

    def test_nonconvergence_flagged_not_fatal(self, rng):
        problem = random_problem(rng, 5, 1)
        sol = solve_mtglasso(problem, 0.05, AdmmConfig(max_iter=2))
        assert not sol.converged
        assert sol.iterations == 2

    def test_negative_penalty_rejected(self, rng):
        problem = random_problem(rng, 3, 0)
        with pytest.raises(ContractError):
            solve_mtglasso(problem, -0.1)
