"""Joint estimation of related precision matrices by consensus ADMM.

All K+1 studies share one sparse component Omega while each study keeps its
own sparse deviation Gamma_k; the fitted objective is

    sum_k alpha_k [ <Omega + Gamma_k, S_k> - log det(Omega + Gamma_k) ]
        + lambda_m ( |Omega|_1 + sum_k sqrt(alpha_k) |Gamma_k|_1 ),

with alpha_k the sample-share weight of study k and the L1 norms taken over
every entry including the diagonal.  The splitting introduces one
positive-definite slack matrix per study (updated by an eigenvalue lift) and
solves the coupled L1 block entrywise by an alternating soft-threshold
subproblem.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numba import njit

from .data import ProblemInstance
from .errors import ContractError, NumericError


@dataclass(frozen=True)
class AdmmConfig:
    """Solver controls: penalty rho, outer/inner tolerances and iteration caps."""

    rho: float = 1.0
    eps_abs: float = 1e-4
    eps_rel: float = 1e-4
    max_iter: int = 2000
    inner_eps_abs: float = 1e-6
    inner_eps_rel: float = 1e-6
    inner_max_iter: int = 500

    def __post_init__(self) -> None:
        for name in ("rho", "eps_abs", "eps_rel", "inner_eps_abs", "inner_eps_rel"):
            if getattr(self, name) <= 0:
                raise ContractError(f"{name} must be strictly positive")
        if self.max_iter < 1 or self.inner_max_iter < 1:
            raise ContractError("iteration caps must be at least 1")


@dataclass
class MtGlassoSolution:
    """Result of one joint solve.

    ``initial_estimates[k] = shared + uniques[k]`` is the per-study estimate
    that downstream refinement consumes.  ``duals`` is carried so tuning
    sweeps can warm-start the next penalty value from this state.
    """

    shared: np.ndarray
    uniques: np.ndarray            # (K+1, d, d)
    initial_estimates: np.ndarray  # (K+1, d, d)
    iterations: int
    final_r_pri: float
    final_r_dual: float
    eps_pri: float
    eps_dual: float
    converged: bool
    inner_converged: bool
    duals: np.ndarray              # (K+1, d, d)

    @property
    def state(self):
        """(shared, uniques, duals) triple usable as a warm start."""
        return (self.shared, self.uniques, self.duals)


class SplitProxResult(NamedTuple):
    x: float
    y: np.ndarray
    iterations: int
    converged: bool


def soft_threshold(c, lam):
    """Shrink toward zero: c - lam if c > lam, c + lam if c < -lam, else 0."""
    if np.any(np.asarray(lam) < 0):
        raise ContractError("threshold must be nonnegative")
    c = np.asarray(c)
    return np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)


def _lifted_eigensolve(rho_c: np.ndarray, alphas: np.ndarray, rho: float) -> np.ndarray:
    """Positive-definite stationary point of -a*X^{-1} + rho*X - rho*C per study.

    ``rho_c`` stacks rho*C_k along axis 0; each eigenvalue L of rho*C_k is
    lifted to (L + sqrt(L^2 + 4*rho*a_k)) / (2*rho), which is positive for
    a_k > 0, so every output is strictly PD.
    """
    try:
        evals, evecs = np.linalg.eigh(rho_c)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    lifted = (evals + np.sqrt(evals * evals + 4.0 * rho * alphas[:, None])) / (2.0 * rho)
    out = (evecs * lifted[:, None, :]) @ np.swapaxes(evecs, 1, 2)
    return 0.5 * (out + np.swapaxes(out, 1, 2))


def omega_k_update(c_tilde: np.ndarray, alpha_k: float, rho: float) -> np.ndarray:
    """Solve -alpha_k X^{-1} + rho X - rho C = 0 over PD matrices for symmetric C."""
    C = np.asarray(c_tilde, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {C.shape}")
    asym = float(np.max(np.abs(C - C.T)))
    if asym > 1e-8 * max(1.0, float(np.max(np.abs(C)))):
        raise ContractError(f"input not symmetric: max asymmetry {asym:.3e}")
    if not 0.0 < alpha_k <= 1.0:
        raise ContractError(f"alpha_k must lie in (0, 1], got {alpha_k}")
    if rho <= 0:
        raise ContractError("rho must be strictly positive")
    C = 0.5 * (C + C.T)
    return _lifted_eigensolve(rho * C[None], np.array([alpha_k]), rho)[0]


@njit(cache=True, nogil=True)
def _split_prox_kernel(c, lambda_m, rho, alphas, eps_abs, eps_rel, max_iter):
    """Alternating soft-threshold solve of independent scalar split problems.

    ``c`` has shape (K+1, n): column j is one scalar problem, iterated from
    (x, y) = (0, 0) until its own stopping test passes or max_iter is hit.
    """
    m, n = c.shape
    x = np.zeros(n)
    y = np.zeros((m, n))
    iters = np.zeros(n, dtype=np.int64)
    converged = np.zeros(n, dtype=np.bool_)
    x_thr = lambda_m / (rho * m)
    y_thr = np.empty(m)
    for k in range(m):
        y_thr[k] = lambda_m * np.sqrt(alphas[k]) / rho
    for j in range(n):
        xj = 0.0
        yk = np.zeros(m)
        ok = False
        r = 0
        for r in range(1, max_iter + 1):
            s = 0.0
            for k in range(m):
                s += c[k, j] - yk[k]
            s /= m
            if s > x_thr:
                xj = s - x_thr
            elif s < -x_thr:
                xj = s + x_thr
            else:
                xj = 0.0
            dsum = 0.0
            ynorm = 0.0
            yprev_norm = 0.0
            for k in range(m):
                v = c[k, j] - xj
                t = y_thr[k]
                if v > t:
                    ynew = v - t
                elif v < -t:
                    ynew = v + t
                else:
                    ynew = 0.0
                dsum += ynew - yk[k]
                ynorm += abs(ynew)
                yprev_norm += abs(yk[k])
                yk[k] = ynew
            r_sub = rho * abs(dsum)
            eps_sub = m * eps_abs + eps_rel * rho * max(ynorm, yprev_norm)
            if r_sub <= eps_sub:
                ok = True
                break
        x[j] = xj
        for k in range(m):
            y[k, j] = yk[k]
        iters[j] = r
        converged[j] = ok
    return x, y, iters, converged


def _split_prox(c, lambda_m, rho, alphas, eps_abs, eps_rel, max_iter):
    """Run the kernel over (K+1, *batch) input; returns (x, y, max iters, all ok)."""
    m = c.shape[0]
    batch = c.shape[1:]
    flat = np.ascontiguousarray(c.reshape(m, -1))
    x, y, iters, converged = _split_prox_kernel(
        flat, float(lambda_m), float(rho), np.asarray(alphas, dtype=float),
        float(eps_abs), float(eps_rel), int(max_iter),
    )
    return (
        x.reshape(batch),
        y.reshape((m,) + batch),
        int(iters.max()),
        bool(converged.all()),
    )


def shared_split_prox(
    c,
    lambda_m: float,
    rho: float,
    alphas,
    eps_abs: float = 1e-6,
    eps_rel: float = 1e-6,
    max_iter: int = 500,
) -> SplitProxResult:
    """Minimize (rho/2) sum_k (x + y_k - c_k)^2 + lambda_m |x| + lambda_m sum_k sqrt(a_k) |y_k|.

    Returns the shared scalar x and the per-study vector y.  At the return
    point each y_k is exactly the soft-threshold of (c_k - x); x satisfies its
    optimality condition within the stopping tolerance.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    a = np.asarray(alphas, dtype=float).reshape(-1)
    if c.shape != a.shape:
        raise ContractError(f"c has {c.size} entries but alphas has {a.size}")
    if lambda_m < 0:
        raise ContractError("lambda_m must be nonnegative")
    if rho <= 0:
        raise ContractError("rho must be strictly positive")
    x, y, iters, ok = _split_prox(c, lambda_m, rho, a, eps_abs, eps_rel, max_iter)
    return SplitProxResult(float(x), y, iters, ok)


def residuals(
    omega_ks,
    omega,
    gammas,
    prev_omega,
    prev_gammas,
    zs,
    rho: float,
    eps_abs: float,
    eps_rel: float,
):
    """Primal/dual residuals and their feasibility tolerances.

    r_pri  = sqrt( sum_k || X_k - (Omega + Gamma_k) ||_F^2 )
    r_dual = rho * sqrt( sum_k || (Omega + Gamma_k) - (Omega + Gamma_k)_prev ||_F^2 )
    eps_*  = eps_abs * d * sqrt(K+1) + eps_rel * (iterate norms as below)
    """
    omega_ks = np.asarray(omega_ks, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    prev_gammas = np.asarray(prev_gammas, dtype=float)
    m, d = omega_ks.shape[0], omega_ks.shape[1]
    w = np.asarray(omega, dtype=float)[None] + gammas
    w_prev = np.asarray(prev_omega, dtype=float)[None] + prev_gammas
    r_pri = float(np.linalg.norm(omega_ks - w))
    r_dual = rho * float(np.linalg.norm(w - w_prev))
    base = eps_abs * d * math.sqrt(m)
    eps_pri = base + eps_rel * max(
        float(np.linalg.norm(omega_ks)), float(np.linalg.norm(w))
    )
    eps_dual = base + eps_rel * float(np.linalg.norm(np.asarray(zs, dtype=float)))
    return r_pri, r_dual, eps_pri, eps_dual


def solve_mtglasso(
    problem: ProblemInstance,
    lambda_m: float,
    config: AdmmConfig | None = None,
    *,
    init=None,
    callback: Callable[[dict], None] | None = None,
) -> MtGlassoSolution:
    """Run the consensus ADMM until both residual tests pass or max_iter.

    ``init`` may carry a (shared, uniques, duals) triple from a previous solve
    (warm start across a penalty sweep); the cold start is Omega = I,
    Gamma_k = 0, Z_k = I.  Non-convergence is reported through the
    ``converged`` flag, never raised, so tuning loops survive bad penalties.
    The operator-norm constraint of the underlying model is not enforced.
    """
    if lambda_m < 0:
        raise ContractError("lambda_m must be nonnegative")
    cfg = config if config is not None else AdmmConfig()
    covs = np.stack([c.matrix for c in problem.covs])
    alphas = np.asarray(problem.weights, dtype=float)
    m, d = covs.shape[0], covs.shape[1]

    if init is None:
        omega = np.eye(d)
        gammas = np.zeros((m, d, d))
        zs = np.tile(np.eye(d), (m, 1, 1))
    else:
        omega, gammas, zs = (np.array(part, dtype=float) for part in init)

    shrink = (alphas / cfg.rho)[:, None, None] * covs
    w_prev = omega[None] + gammas
    inner_ok = True
    converged = False
    it = 0
    r_pri = r_dual = math.inf
    eps_pri = eps_dual = 0.0
    base = cfg.eps_abs * d * math.sqrt(m)

    for it in range(1, cfg.max_iter + 1):
        c_tilde = omega[None] + gammas - zs - shrink
        omega_ks = _lifted_eigensolve(cfg.rho * c_tilde, alphas, cfg.rho)
        c_check = omega_ks + zs
        omega, gammas, _, ok = _split_prox(
            c_check, lambda_m, cfg.rho, alphas,
            cfg.inner_eps_abs, cfg.inner_eps_rel, cfg.inner_max_iter,
        )
        inner_ok = inner_ok and ok
        zs = zs + cfg.rho * (omega_ks - omega[None] - gammas)
        w = omega[None] + gammas
        r_pri = float(np.linalg.norm(omega_ks - w))
        r_dual = cfg.rho * float(np.linalg.norm(w - w_prev))
        eps_pri = base + cfg.eps_rel * max(
            float(np.linalg.norm(omega_ks)), float(np.linalg.norm(w))
        )
        eps_dual = base + cfg.eps_rel * float(np.linalg.norm(zs))
        if callback is not None:
            callback({
                "iteration": it,
                "omega": omega,
                "gammas": gammas,
                "omega_ks": omega_ks,
                "zs": zs,
                "r_pri": r_pri,
                "r_dual": r_dual,
            })
        if not (math.isfinite(r_pri) and math.isfinite(r_dual)):
            raise NumericError(f"non-finite residuals at iteration {it}")
        w_prev = w
        if r_pri <= eps_pri and r_dual <= eps_dual:
            converged = True
            break

    estimates = omega[None] + gammas
    min_eigs = np.linalg.eigvalsh(estimates)[:, 0]
    if converged and float(min_eigs.min()) < -10.0 * eps_pri:
        warnings.warn(
            f"per-study estimate has minimum eigenvalue {min_eigs.min():.3e}; "
            "the sparse iterate is not positive definite",
            RuntimeWarning,
            stacklevel=2,
        )
    return MtGlassoSolution(
        shared=omega,
        uniques=gammas,
        initial_estimates=estimates,
        iterations=it,
        final_r_pri=r_pri,
        final_r_dual=r_dual,
        eps_pri=eps_pri,
        eps_dual=eps_dual,
        converged=converged,
        inner_converged=inner_ok,
        duals=zs,
    )
