"""Graphical lasso baselines: target-only and pooled-data estimates.

These are single-matrix L1-penalized likelihood fits,

    minimize  <Omega, S> - log det Omega + lam * |Omega|_1   over PD Omega,

solved by the same eigen-update/soft-threshold ADMM skeleton as the joint
solver but written independently so the two routes can cross-check each
other.  The penalty includes the diagonal, matching the joint objective (a
deviation from some conventional graphical-lasso implementations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .criteria import bic_trans
from .data import CovMatrix, ProblemInstance
from .errors import ContractError, NumericError, SelectionError
from .mtglasso import AdmmConfig, _lifted_eigensolve, soft_threshold
from .tuning import TuningGrid, default_glasso_grid


@dataclass
class GlassoEstimate:
    omega: np.ndarray
    lam: float
    converged: bool
    iterations: int
    final_r_pri: float
    final_r_dual: float
    eps_pri: float
    eps_dual: float

    @property
    def state(self):
        """(omega, dual) pair usable as a warm start."""
        return (self.omega, self._dual)


def glasso(sigma, lam: float, config: AdmmConfig | None = None, *, init=None) -> GlassoEstimate:
    """Single-matrix graphical lasso via ADMM.

    The PD slack is updated through the eigenvalue lift, the sparse iterate by
    entrywise soft-thresholding; the sparse iterate is returned so zeros are
    exact.  Non-convergence is flagged, not raised.
    """
    if lam < 0:
        raise ContractError("lam must be nonnegative")
    S = np.asarray(getattr(sigma, "matrix", sigma), dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractError(f"expected a square covariance, got shape {S.shape}")
    asym = float(np.max(np.abs(S - S.T)))
    if asym > 1e-8 * max(1.0, float(np.max(np.abs(S)))):
        raise ContractError(f"covariance not symmetric: max asymmetry {asym:.3e}")
    cfg = config if config is not None else AdmmConfig()
    d = S.shape[0]
    if init is None:
        omega = np.eye(d)
        z = np.eye(d)
    else:
        omega, z = (np.array(part, dtype=float) for part in init)

    one = np.array([1.0])
    shrink = S / cfg.rho
    base = cfg.eps_abs * d
    converged = False
    it = 0
    r_pri = r_dual = math.inf
    eps_pri = eps_dual = 0.0
    for it in range(1, cfg.max_iter + 1):
        c_tilde = omega - z - shrink
        x = _lifted_eigensolve(cfg.rho * c_tilde[None], one, cfg.rho)[0]
        omega_prev = omega
        omega = soft_threshold(x + z, lam / cfg.rho)
        z = z + cfg.rho * (x - omega)
        r_pri = float(np.linalg.norm(x - omega))
        r_dual = cfg.rho * float(np.linalg.norm(omega - omega_prev))
        eps_pri = base + cfg.eps_rel * max(
            float(np.linalg.norm(x)), float(np.linalg.norm(omega))
        )
        eps_dual = base + cfg.eps_rel * float(np.linalg.norm(z))
        if not (math.isfinite(r_pri) and math.isfinite(r_dual)):
            raise NumericError(f"non-finite residuals at iteration {it}")
        if r_pri <= eps_pri and r_dual <= eps_dual:
            converged = True
            break

    est = GlassoEstimate(
        omega=omega,
        lam=float(lam),
        converged=converged,
        iterations=it,
        final_r_pri=r_pri,
        final_r_dual=r_dual,
        eps_pri=eps_pri,
        eps_dual=eps_dual,
    )
    est._dual = z
    return est


def _sweep(sigma, n_for_bic, grid, zero_tol, config):
    """Warm-started decreasing sweep; returns the BIC argmin (ties -> larger lam)."""
    best = None
    best_bic = math.inf
    state = None
    trace = []
    for lam in grid.values:
        est = glasso(sigma, lam, config, init=state)
        state = est.state
        bic = bic_trans(sigma, est.omega, n_for_bic, zero_tol)
        trace.append((float(lam), float(bic), est.converged))
        if bic < best_bic:
            best, best_bic = est, bic
    if best is None or not math.isfinite(best_bic):
        raise SelectionError(
            "no graphical-lasso candidate was positive definite; trace: "
            + ", ".join(f"lam={l:.4g} bic={b:.4g}" for l, b, _ in trace)
        )
    return best


def glasso_target(
    problem: ProblemInstance,
    grid: TuningGrid | None = None,
    zero_tol: float = 1e-8,
    config: AdmmConfig | None = None,
) -> GlassoEstimate:
    """Graphical lasso on the target covariance only, penalty chosen by BIC
    with N equal to the target sample count."""
    if grid is None:
        grid = default_glasso_grid(problem.target_cov)
    return _sweep(problem.target_cov, problem.target_cov.n, grid, zero_tol, config)


def pooled_covariance(problem: ProblemInstance) -> CovMatrix:
    """Sample-share weighted average of all studies' covariances."""
    mats = np.stack([c.matrix for c in problem.covs])
    pooled = np.tensordot(problem.weights, mats, axes=1)
    return CovMatrix(0.5 * (pooled + pooled.T), problem.total_n)


def glasso_pooled(
    problem: ProblemInstance,
    grid: TuningGrid | None = None,
    zero_tol: float = 1e-8,
    config: AdmmConfig | None = None,
) -> GlassoEstimate:
    """Graphical lasso on the pooled covariance, BIC with the pooled N."""
    pooled = pooled_covariance(problem)
    if grid is None:
        grid = default_glasso_grid(pooled)
    return _sweep(pooled, problem.total_n, grid, zero_tol, config)
