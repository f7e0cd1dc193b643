"""The full two-step transfer-learning estimator.

Step 1 fits all studies jointly (shared + per-study sparse components) to get
initial per-study estimates.  Step 2 estimates each source's differential
network against the target and subtracts it, then averages:

    omega0 = sum_k alpha_k (initial_k - psi_k),   psi_0 = 0.

Penalties are chosen by information criteria; when the useful subset of
sources is unknown, sources are ranked by differential sparsity and the
cut-off is picked by cross-validation on the target samples alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .baselines import glasso_target
from .criteria import bic_dtrace, bic_trans, cv_error
from .data import ProblemInstance, StudyData, build_problem
from .dtrace import DiffNetwork, DtraceConfig, solve_dtrace
from .errors import ContractError, DimensionError, SelectionError
from .mtglasso import AdmmConfig, solve_mtglasso
from .tuning import TuningGrid, default_glasso_grid, default_m_grid, default_psi_grid

__all__ = [
    "TransGlassoEstimate",
    "PsiSelection",
    "MSelection",
    "combine",
    "select_lambda_psi",
    "select_lambda_m",
    "rank_sources",
    "cv_folds",
    "fit_trans_glasso",
    "trans_glasso_cv",
    # re-exported criteria and grids
    "bic_dtrace",
    "bic_trans",
    "cv_error",
    "TuningGrid",
    "default_psi_grid",
    "default_m_grid",
]


@dataclass
class TransGlassoEstimate:
    """Final target-precision estimate with its selected penalties.

    informative_set holds 1-based source indices; it is the full set when
    selection is disabled and empty when cross-validation falls back to the
    target-only graphical lasso (lambda_m then holds that fit's penalty).
    """

    omega0: np.ndarray
    lambda_m: float | None
    psi_lambdas: tuple[float, ...]
    informative_set: frozenset[int]
    diagnostics: dict = field(default_factory=dict)


class PsiSelection(NamedTuple):
    lam: float
    network: DiffNetwork
    trace: tuple[tuple[float, float, bool], ...]  # (lam, bic, converged)


class MSelection(NamedTuple):
    lam: float
    estimate: TransGlassoEstimate
    trace: tuple[tuple[float, float, bool], ...]


def combine(initials, psis, alphas) -> np.ndarray:
    """Weighted bias-corrected average sum_k alpha_k (initial_k - psi_k).

    ``initials`` holds K+1 per-study matrices (target first), ``psis`` the K
    source differential networks; the target's correction is identically zero.
    Weights must be nonnegative and sum to 1 (tolerance 1e-8).
    """
    mat_list = [np.asarray(m, dtype=float) for m in initials]
    psi_mats = [np.asarray(p, dtype=float) for p in psis]
    m = len(mat_list)
    if len(psi_mats) != m - 1:
        raise ContractError(
            f"got {m} initial estimates but {len(psi_mats)} corrections; expected one fewer"
        )
    shape = mat_list[0].shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ContractError(f"initial estimates must be square, got shape {shape}")
    for k, mk in enumerate(mat_list):
        if mk.shape != shape:
            raise ContractError(f"initial estimate {k} has shape {mk.shape}, expected {shape}")
    mats = np.stack(mat_list)
    for k, p in enumerate(psi_mats, start=1):
        if p.shape != mats.shape[1:]:
            raise ContractError(f"correction {k} has shape {p.shape}, expected {mats.shape[1:]}")
    w = np.asarray(alphas, dtype=float).reshape(-1)
    if w.shape != (m,):
        raise ContractError(f"expected {m} weights, got {w.shape}")
    if np.any(w < 0):
        raise ContractError("weights must be nonnegative")
    if abs(float(w.sum()) - 1.0) > 1e-8:
        raise ContractError(f"weights sum to {float(w.sum())!r}, expected 1")
    corrected = mats.copy()
    for k, p in enumerate(psi_mats, start=1):
        corrected[k] -= p
    return np.tensordot(w, corrected, axes=1)


def _psi_matrices(psis):
    """Accept DiffNetwork objects or raw matrices."""
    mats, lams = [], []
    for p in psis:
        if isinstance(p, DiffNetwork):
            mats.append(p.psi)
            lams.append(float(p.lam))
        else:
            mats.append(np.asarray(p, dtype=float))
            lams.append(math.nan)
    return mats, lams


def select_lambda_psi(
    sigma0,
    sigmak,
    n0: int,
    nk: int,
    grid: TuningGrid | None = None,
    config: DtraceConfig | None = None,
    zero_tol: float = 0.0,
) -> PsiSelection:
    """Sweep the grid (decreasing, warm-started) and keep the BIC argmin.

    Only converged solves compete; ties break toward the larger penalty
    (sparser model).  If no grid value converges a SelectionError lists the
    failures.
    """
    cfg = config if config is not None else DtraceConfig()
    if grid is None:
        grid = default_psi_grid(sigma0, sigmak)
    trace = []
    best = None
    best_bic = math.inf
    psi_prev = None
    for lam in grid.values:
        net = solve_dtrace(
            sigma0, sigmak, lam,
            eta=cfg.eta, eps_abs=cfg.eps_abs, eps_rel=cfg.eps_rel,
            max_iter=cfg.max_iter, psi0=psi_prev,
        )
        psi_prev = net.psi
        bic = bic_dtrace(sigma0, sigmak, net.psi, n0, nk, zero_tol)
        trace.append((float(lam), float(bic), net.converged))
        if net.converged and bic < best_bic:
            best, best_bic = net, bic
    if best is None:
        raise SelectionError(
            "no differential-network solve converged; trace: "
            + ", ".join(f"lam={l:.4g} bic={b:.4g}" for l, b, _ in trace)
        )
    return PsiSelection(best.lam, best, tuple(trace))


def select_lambda_m(
    problem: ProblemInstance,
    psis,
    grid: TuningGrid | None = None,
    config: AdmmConfig | None = None,
    zero_tol: float = 1e-8,
) -> MSelection:
    """Sweep the joint penalty with the corrections held fixed.

    Every candidate estimate is scored by the penalized-likelihood criterion
    on the target covariance with the pooled N; non-PD candidates score +inf.
    Ties break toward the larger penalty.
    """
    if grid is None:
        grid = default_m_grid(problem.covs)
    psi_mats, psi_lams = _psi_matrices(psis)
    if len(psi_mats) != problem.K:
        raise ContractError(f"expected {problem.K} corrections, got {len(psi_mats)}")
    trace = []
    state = None
    best_bic = math.inf
    best = None  # (lam, omega0, solution)
    for lam in grid.values:
        sol = solve_mtglasso(problem, lam, config, init=state)
        state = sol.state
        omega0 = combine(sol.initial_estimates, psi_mats, problem.weights)
        bic = bic_trans(problem.target_cov, omega0, problem.total_n, zero_tol)
        trace.append((float(lam), float(bic), sol.converged))
        if bic < best_bic:
            best, best_bic = (float(lam), omega0, sol), bic
    if best is None or not math.isfinite(best_bic):
        raise SelectionError(
            "every joint-penalty candidate produced a non-PD estimate; trace: "
            + ", ".join(f"lam={l:.4g} bic={b:.4g}" for l, b, _ in trace)
        )
    lam, omega0, sol = best
    estimate = TransGlassoEstimate(
        omega0=omega0,
        lambda_m=lam,
        psi_lambdas=tuple(psi_lams),
        informative_set=frozenset(range(1, problem.K + 1)),
        diagnostics={
            "bic_m_trace": [[l, b, c] for l, b, c in trace],
            "admm_converged": sol.converged,
            "admm_iterations": sol.iterations,
        },
    )
    return MSelection(lam, estimate, tuple(trace))


def rank_sources(psis) -> list[int]:
    """Rank sources by differential support size, 1 = sparsest.

    Ties break by ascending source index.  Accepts DiffNetwork objects or
    plain support counts.
    """
    sizes = [p.support_size if isinstance(p, DiffNetwork) else int(p) for p in psis]
    if not sizes:
        raise ContractError("need at least one source to rank")
    order = sorted(range(len(sizes)), key=lambda i: (sizes[i], i))
    ranks = [0] * len(sizes)
    for position, idx in enumerate(order, start=1):
        ranks[idx] = position
    return ranks


def cv_folds(n: int, folds: int, seed) -> list[np.ndarray]:
    """Seeded shuffle of range(n) split into ``folds`` chunks.

    The chunks partition the indices and their sizes differ by at most one.
    """
    if folds < 2:
        raise DimensionError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise DimensionError(f"cannot split {n} rows into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def _resolve_psi_grid(psi_grids, k, sigma0, sigmak, grid_size, grid_decades):
    if psi_grids is None:
        return default_psi_grid(sigma0, sigmak, num=grid_size, decades=grid_decades)
    if isinstance(psi_grids, TuningGrid):
        return psi_grids
    grid = psi_grids[k]
    if grid is None:
        return default_psi_grid(sigma0, sigmak, num=grid_size, decades=grid_decades)
    return grid


def fit_trans_glasso(
    target: StudyData,
    sources=(),
    *,
    center: bool = False,
    psi_grids=None,
    m_grid: TuningGrid | None = None,
    admm_config: AdmmConfig | None = None,
    dtrace_config: DtraceConfig | None = None,
    zero_tol: float = 1e-8,
    grid_size: int = 30,
    grid_decades: float = 3.0,
) -> TransGlassoEstimate:
    """Fit the two-step estimator using every given source.

    ``psi_grids`` may be None (auto per source), one shared TuningGrid, or a
    per-source sequence.  With no sources this reduces to the single-study
    penalized-likelihood fit.
    """
    sources = list(sources)
    problem = build_problem(target, sources, center)
    sigma0 = problem.target_cov
    dcfg = dtrace_config if dtrace_config is not None else DtraceConfig()
    selections = []
    for k, cov_k in enumerate(problem.source_covs):
        grid_k = _resolve_psi_grid(psi_grids, k, sigma0, cov_k, grid_size, grid_decades)
        selections.append(
            select_lambda_psi(sigma0, cov_k, sigma0.n, cov_k.n, grid_k, dcfg, zero_tol=0.0)
        )
    if m_grid is None:
        m_grid = default_m_grid(problem.covs, num=grid_size, decades=grid_decades)
    msel = select_lambda_m(
        problem, [s.network for s in selections], m_grid, admm_config, zero_tol
    )
    estimate = msel.estimate
    estimate.diagnostics["psi_bic_traces"] = [
        [[l, b, c] for l, b, c in s.trace] for s in selections
    ]
    estimate.diagnostics["psi_support_sizes"] = [s.network.support_size for s in selections]
    return estimate


def _glasso_only_estimate(target, center, glasso_grid, admm_config, zero_tol,
                          grid_size, grid_decades, diagnostics):
    problem = build_problem(target, [], center)
    grid = glasso_grid or default_glasso_grid(
        problem.target_cov, num=grid_size, decades=grid_decades
    )
    fit = glasso_target(problem, grid, zero_tol, admm_config)
    diagnostics["fallback"] = True
    return TransGlassoEstimate(
        omega0=fit.omega,
        lambda_m=fit.lam,
        psi_lambdas=(),
        informative_set=frozenset(),
        diagnostics=diagnostics,
    )


def trans_glasso_cv(
    target: StudyData,
    sources=(),
    *,
    folds: int = 5,
    seed=0,
    center: bool = False,
    psi_grids=None,
    m_grid: TuningGrid | None = None,
    glasso_grid: TuningGrid | None = None,
    admm_config: AdmmConfig | None = None,
    dtrace_config: DtraceConfig | None = None,
    zero_tol: float = 1e-8,
    grid_size: int = 30,
    grid_decades: float = 3.0,
) -> TransGlassoEstimate:
    """Detect the informative sources by ranking + cross-validation, then fit.

    Sources are ranked by the sparsity of their differential networks (fitted
    on all target samples).  For every cut-off size the estimator is refit on
    each training fold with the top-ranked sources and scored on the held-out
    target fold; cut-off 0 (target-only graphical lasso) is always evaluated,
    so selection can never do worse than that in CV terms.  The final fit
    reuses all target samples plus the selected sources; no sample splitting
    is carried between selection and the final fit.  Deterministic given
    ``seed``.
    """
    sources = list(sources)
    K = len(sources)
    n0 = target.n
    if folds < 2:
        raise DimensionError(f"need at least 2 folds, got {folds}")
    if n0 < folds:
        raise DimensionError(f"target has {n0} rows, fewer than {folds} folds")

    def fit_kwargs(chosen):
        # per-source grid lists are indexed by original source position
        if psi_grids is None or isinstance(psi_grids, TuningGrid):
            grids = psi_grids
        else:
            grids = [psi_grids[k - 1] for k in chosen]
        return dict(
            center=center, psi_grids=grids, m_grid=m_grid,
            admm_config=admm_config, dtrace_config=dtrace_config, zero_tol=zero_tol,
            grid_size=grid_size, grid_decades=grid_decades,
        )

    if K == 0:
        return _glasso_only_estimate(
            target, center, glasso_grid, admm_config, zero_tol,
            grid_size, grid_decades, {"cv_trace": [], "ranks": []},
        )

    # Rank sources by differential sparsity on the full target sample.
    full_problem = build_problem(target, sources, center)
    sigma0 = full_problem.target_cov
    dcfg = dtrace_config if dtrace_config is not None else DtraceConfig()
    rank_sels = []
    for k, cov_k in enumerate(full_problem.source_covs):
        grid_k = _resolve_psi_grid(psi_grids, k, sigma0, cov_k, grid_size, grid_decades)
        rank_sels.append(
            select_lambda_psi(sigma0, cov_k, sigma0.n, cov_k.n, grid_k, dcfg, zero_tol=0.0)
        )
    ranks = rank_sources([s.network for s in rank_sels])

    fold_indices = cv_folds(n0, folds, seed)
    X0 = target.samples
    cv_trace = []
    fold_errors = []
    for cutoff in range(K + 1):
        chosen = [k for k in range(1, K + 1) if ranks[k - 1] <= cutoff]
        errs = []
        for val_idx in fold_indices:
            train = StudyData(np.delete(X0, val_idx, axis=0), study_id=0)
            try:
                if cutoff == 0:
                    tp = build_problem(train, [], center)
                    g = glasso_grid or default_glasso_grid(
                        tp.target_cov, num=grid_size, decades=grid_decades
                    )
                    omega = glasso_target(tp, g, zero_tol, admm_config).omega
                else:
                    omega = fit_trans_glasso(
                        train, [sources[k - 1] for k in chosen], **fit_kwargs(chosen)
                    ).omega0
                errs.append(cv_error(X0[val_idx], omega))
            except SelectionError:
                # a bad cut-off must not kill the sweep
                errs.append(math.inf)
        cv_trace.append((cutoff, float(np.mean(errs))))
        fold_errors.append([float(e) for e in errs])

    best_cutoff, best_cv = 0, math.inf
    for cutoff, value in cv_trace:
        if value < best_cv:
            best_cutoff, best_cv = cutoff, value
    informative = frozenset(k for k in range(1, K + 1) if ranks[k - 1] <= best_cutoff)

    diagnostics = {
        "ranks": ranks,
        "psi_support_sizes": [s.network.support_size for s in rank_sels],
        "cv_trace": [[c, v] for c, v in cv_trace],
        "cv_fold_errors": fold_errors,
        "fallback": not informative,
    }

    if not informative:
        estimate = _glasso_only_estimate(
            target, center, glasso_grid, admm_config, zero_tol,
            grid_size, grid_decades, diagnostics,
        )
    else:
        chosen = sorted(informative)
        fit = fit_trans_glasso(target, [sources[k - 1] for k in chosen], **fit_kwargs(chosen))
        diagnostics["final"] = fit.diagnostics
        diagnostics["final_psi_lambdas"] = list(fit.psi_lambdas)
        estimate = TransGlassoEstimate(
            omega0=fit.omega0,
            lambda_m=fit.lambda_m,
            psi_lambdas=tuple(s.lam for s in rank_sels),
            informative_set=informative,
            diagnostics=diagnostics,
        )
    estimate.psi_lambdas = tuple(s.lam for s in rank_sels)
    return estimate
