import numpy as np
import pytest

from transglasso import CovMatrix, ProblemInstance


def rand_spd(rng, d, base=0.3):
    """Well-conditioned random SPD matrix with entries O(1)."""
    a = rng.standard_normal((d, 2 * d))
    s = a @ a.T / (2 * d) + base * np.eye(d)
    return 0.5 * (s + s.T)


def make_problem(mats, ns):
    """ProblemInstance straight from covariance matrices and sample counts."""
    covs = [CovMatrix(m, n) for m, n in zip(mats, ns)]
    total = sum(ns)
    weights = np.array(ns, dtype=float) / total
    return ProblemInstance(covs[0], tuple(covs[1:]), weights, total)


def random_problem(rng, d, K, base=0.3, n_lo=50, n_hi=400):
    mats = [rand_spd(rng, d, base) for _ in range(K + 1)]
    ns = [int(rng.integers(n_lo, n_hi)) for _ in range(K + 1)]
    return make_problem(mats, ns)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
