"""Model-selection criteria and held-out prediction error.

Conventions, applied exactly as the estimator defines them:
  * the differential-network criterion uses the unsquared Frobenius norm of
    its residual term;
  * support counts run over the full matrix, both triangles and diagonal;
  * a candidate that is not positive definite scores +inf so selection
    excludes it instead of silently repairing it.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError


def _as_matrix(sigma) -> np.ndarray:
    return np.asarray(getattr(sigma, "matrix", sigma), dtype=float)


def _support_size(m: np.ndarray, zero_tol: float) -> int:
    return int(np.count_nonzero(np.abs(m) > zero_tol))


def bic_dtrace(sigma0, sigmak, psi, n0: int, nk: int, zero_tol: float = 0.0) -> float:
    """(n0+nk) * ||1/2 (S0 Psi Sk + Sk Psi S0) - S0 + Sk||_F + log(n0+nk) * |Psi|_0."""
    S0, Sk = _as_matrix(sigma0), _as_matrix(sigmak)
    P = np.asarray(psi, dtype=float)
    if not (S0.shape == Sk.shape == P.shape) or S0.ndim != 2 or S0.shape[0] != S0.shape[1]:
        raise DimensionError(
            f"expected matching square matrices, got {S0.shape}, {Sk.shape}, {P.shape}"
        )
    resid = 0.5 * (S0 @ P @ Sk + Sk @ P @ S0) - S0 + Sk
    n = n0 + nk
    return float(n * np.linalg.norm(resid) + math.log(n) * _support_size(P, zero_tol))


def bic_trans(sigma0, omega0, n_total: int, zero_tol: float = 1e-8) -> float:
    """N * [<S0, Omega> - log det Omega] + log(N) * |Omega|_0; +inf if Omega is not PD."""
    S0 = _as_matrix(sigma0)
    W = np.asarray(omega0, dtype=float)
    if S0.shape != W.shape or W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"expected matching square matrices, got {S0.shape}, {W.shape}")
    evals = np.linalg.eigvalsh(0.5 * (W + W.T))
    if evals[0] <= 0:
        return math.inf
    fit = float(np.sum(S0 * W)) - float(np.sum(np.log(evals)))
    return float(n_total * fit + math.log(n_total) * _support_size(W, zero_tol))


def cv_error(validation, omega0) -> float:
    """Gaussian held-out prediction error of a precision estimate.

    (1/2d) [ mean_i tr(x_i x_i^T Omega) - log det Omega ] + (1/2) log pi,
    evaluated on the validation rows; +inf when Omega is not PD.
    ``validation`` may be a StudyData or a raw (n, d) array.
    """
    X = np.asarray(getattr(validation, "samples", validation), dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    W = np.asarray(omega0, dtype=float)
    if X.shape[0] == 0:
        raise DimensionError("validation set is empty")
    if W.ndim != 2 or W.shape[0] != W.shape[1] or X.shape[1] != W.shape[0]:
        raise DimensionError(
            f"validation has {X.shape[1]} variables but the estimate is {W.shape}"
        )
    d = W.shape[0]
    evals = np.linalg.eigvalsh(0.5 * (W + W.T))
    if evals[0] <= 0:
        return math.inf
    avg_quad = float(np.sum((X @ W) * X)) / X.shape[0]
    logdet = float(np.sum(np.log(evals)))
    return (avg_quad - logdet) / (2.0 * d) + 0.5 * math.log(math.pi)
