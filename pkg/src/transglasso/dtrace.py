"""Differential network estimation by proximal gradient descent.

Estimates the difference Psi = Omega_source - Omega_target directly from the
two sample covariances by minimizing the quadratic loss

    L(Psi) = 1/4 ( <S0 Psi, Psi Sk> + <Sk Psi, Psi S0> ) - <Psi, S0 - Sk>

plus an elementwise L1 penalty.  Each step soft-thresholds a gradient step,
so the iterates carry exact zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, NumericError
from .mtglasso import soft_threshold


@dataclass(frozen=True)
class DtraceConfig:
    """Solver controls; ``eta=None`` uses the largest guaranteed step size."""

    eta: float | None = None
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4
    max_iter: int = 5000

    def __post_init__(self) -> None:
        if self.eta is not None and self.eta <= 0:
            raise ContractError("eta must be strictly positive")
        if self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ContractError("tolerances must be strictly positive")
        if self.max_iter < 1:
            raise ContractError("max_iter must be at least 1")


@dataclass
class DiffNetwork:
    """Estimated differential network for one source.

    support_size counts entries with magnitude strictly above zero; the
    soft-threshold update produces exact zeros, so no tolerance is needed.
    """

    psi: np.ndarray
    lam: float
    support_size: int
    iterations: int
    converged: bool
    objective: float
    history: tuple[float, ...] | None = None


def _as_matrix(sigma) -> np.ndarray:
    return np.asarray(getattr(sigma, "matrix", sigma), dtype=float)


def _check_square(*mats):
    shape = mats[0].shape
    for m in mats:
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape != shape:
            raise DimensionError(
                f"expected matching square matrices, got shapes {[m.shape for m in mats]}"
            )


def dtrace_objective(psi, sigma0, sigmak) -> float:
    """Smooth part of the loss (penalty excluded)."""
    P = np.asarray(psi, dtype=float)
    S0, Sk = _as_matrix(sigma0), _as_matrix(sigmak)
    _check_square(P, S0, Sk)
    quad = 0.25 * (np.sum((S0 @ P) * (P @ Sk)) + np.sum((Sk @ P) * (P @ S0)))
    lin = np.sum(P * (S0 - Sk))
    return float(quad - lin)


def dtrace_gradient(psi, sigma0, sigmak) -> np.ndarray:
    """Gradient 1/2 (Sk Psi S0 + S0 Psi Sk) - (S0 - Sk)."""
    P = np.asarray(psi, dtype=float)
    S0, Sk = _as_matrix(sigma0), _as_matrix(sigmak)
    _check_square(P, S0, Sk)
    return 0.5 * (Sk @ P @ S0 + S0 @ P @ Sk) - (S0 - Sk)


def default_step(sigma0, sigmak) -> float:
    """Largest step size with a convergence guarantee: 1 / (||S0||_2 ||Sk||_2)."""
    S0, Sk = _as_matrix(sigma0), _as_matrix(sigmak)
    _check_square(S0, Sk)
    n0 = float(np.max(np.abs(np.linalg.eigvalsh(S0))))
    nk = float(np.max(np.abs(np.linalg.eigvalsh(Sk))))
    if n0 == 0.0 or nk == 0.0:
        raise NumericError("zero matrix has no invertible spectral norm")
    return 1.0 / (n0 * nk)


def solve_dtrace(
    sigma0,
    sigmak,
    lam: float,
    *,
    eta: float | None = None,
    eps_abs: float = 1e-6,
    eps_rel: float = 1e-4,
    max_iter: int = 5000,
    psi0: np.ndarray | None = None,
    record_history: bool = False,
) -> DiffNetwork:
    """Proximal gradient descent from Psi = 0 (or a warm start).

    Each iteration soft-thresholds A = Psi - eta * grad by lam * eta and stops
    once the movement-based residual

        r = || (Psi_t - Psi_{t-1}) / eta - 1/2 (S0 D Sk + Sk D S0) ||_F,
        D = Psi_t - Psi_{t-1},

    drops below eps_abs * d + eps_rel * max(||D||_F / eta, ||S0 D Sk||_F / 2).
    With eta at most ``default_step`` the penalized objective never increases.
    """
    if lam < 0:
        raise ContractError("lam must be nonnegative")
    S0, Sk = _as_matrix(sigma0), _as_matrix(sigmak)
    _check_square(S0, Sk)
    d = S0.shape[0]
    if eta is None:
        eta = default_step(S0, Sk)
    elif eta <= 0:
        raise ContractError("eta must be strictly positive")

    if psi0 is None:
        psi = np.zeros((d, d))
    else:
        psi = np.asarray(psi0, dtype=float)
        _check_square(psi, S0)
        psi = 0.5 * (psi + psi.T)

    diff = S0 - Sk
    thr = lam * eta
    m_cur = S0 @ psi @ Sk  # reused by gradient, objective, and stopping test

    def _objective(p, m):
        return float(0.5 * np.sum(p * m) - np.sum(p * diff) + lam * np.abs(p).sum())

    history = [_objective(psi, m_cur)] if record_history else None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = 0.5 * (m_cur + m_cur.T) - diff
        a = psi - eta * grad
        psi_new = soft_threshold(a, thr)
        m_new = S0 @ psi_new @ Sk
        dpsi = psi_new - psi
        m_d = m_new - m_cur
        r = float(np.linalg.norm(dpsi / eta - 0.5 * (m_d + m_d.T)))
        eps = eps_abs * d + eps_rel * max(
            float(np.linalg.norm(dpsi)) / eta, 0.5 * float(np.linalg.norm(m_d))
        )
        psi, m_cur = psi_new, m_new
        if history is not None:
            history.append(_objective(psi, m_cur))
        if not math.isfinite(r):
            raise NumericError(f"non-finite update residual at iteration {it}")
        if r <= eps:
            converged = True
            break

    return DiffNetwork(
        psi=psi,
        lam=float(lam),
        support_size=int(np.count_nonzero(psi)),
        iterations=it,
        converged=converged,
        objective=_objective(psi, m_cur),
        history=tuple(history) if history is not None else None,
    )
