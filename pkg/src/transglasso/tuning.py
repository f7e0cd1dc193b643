"""Candidate grids for penalty sweeps.

Default grids span full shrinkage down to near-unpenalized: 30 log-spaced
values from a data-driven lambda_max to lambda_max * 1e-3.  Sweeps walk the
grid in decreasing order so each solve can warm-start from the previous one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Guards degenerate data (e.g. two identical covariances) where the
# data-driven lambda_max would be zero.
_LAMBDA_FLOOR = 1e-8


def _as_matrix(sigma) -> np.ndarray:
    return np.asarray(getattr(sigma, "matrix", sigma), dtype=float)


@dataclass(frozen=True)
class TuningGrid:
    """Strictly decreasing positive candidate penalties."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("tuning grid must be nonempty")
        if any(v <= 0 for v in values):
            raise ConfigError("tuning grid values must be strictly positive")
        if any(a <= b for a, b in zip(values, values[1:])):
            raise ConfigError("tuning grid values must be strictly decreasing")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def logspace(cls, lam_max: float, num: int = 30, decades: float = 3.0) -> "TuningGrid":
        """num log-spaced values from lam_max down to lam_max * 10**-decades."""
        if lam_max <= 0:
            raise ConfigError("lam_max must be strictly positive")
        if num < 1:
            raise ConfigError("num must be at least 1")
        if num == 1:
            return cls((lam_max,))
        if decades <= 0:
            raise ConfigError("decades must be strictly positive")
        return cls(tuple(np.geomspace(lam_max, lam_max * 10.0 ** -decades, num)))


def default_psi_grid(sigma0, sigmak, num: int = 30, decades: float = 3.0) -> TuningGrid:
    """Grid for the differential-network penalty.

    lambda_max = max |S0 - Sk|_inf: at or above it the zero matrix is already
    stationary, so the grid brackets full shrinkage.
    """
    lam_max = float(np.max(np.abs(_as_matrix(sigma0) - _as_matrix(sigmak))))
    return TuningGrid.logspace(max(lam_max, _LAMBDA_FLOOR), num, decades)


def default_m_grid(covs, num: int = 30, decades: float = 3.0) -> TuningGrid:
    """Grid for the joint-estimation penalty: lambda_max = max_k |S_k|_inf."""
    lam_max = max(float(np.max(np.abs(_as_matrix(c)))) for c in covs)
    return TuningGrid.logspace(max(lam_max, _LAMBDA_FLOOR), num, decades)


def default_glasso_grid(sigma, num: int = 30, decades: float = 3.0) -> TuningGrid:
    """Grid for a single-matrix graphical lasso: lambda_max = |S|_inf."""
    lam_max = float(np.max(np.abs(_as_matrix(sigma))))
    return TuningGrid.logspace(max(lam_max, _LAMBDA_FLOOR), num, decades)
