"""Synthetic ground truths, Gaussian sampling, and the benchmark harness.

Three generator families produce a shared precision component plus sparse
per-study deviations with disjoint supports:

  I   banded shared component, bandwidth 1, entries 5 * 0.6**|i-j|;
  II  the same with bandwidth 5;
  III Erdos-Renyi shared component: diagonal 5, edge probability 0.02,
      Unif[-3, 3] weights.

For models I/II each study's deviation places ceil(h/2) Unif[-3, 3] entries
in the upper off-diagonal block (row <= floor(d/2) < column), skipping
positions already inside the band, and symmetrizes.  Model III draws
symmetric off-support pairs (diagonal excluded), h entries (h+1 when h is
odd).  One shared diagonal offset sigma lifts every study's smallest
eigenvalue to at least 0.1.

Randomness comes from numpy's default generator (PCG64), so equal seeds give
bit-identical output across platforms.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import glasso_pooled, glasso_target
from .data import StudyData, build_problem
from .dtrace import DtraceConfig
from .errors import ConfigError, DimensionError, NumericError, TransGlassoError
from .mtglasso import AdmmConfig
from .pipeline import fit_trans_glasso, trans_glasso_cv

_MIN_EIGENVALUE = 0.1
_BANDWIDTHS = {"I": 1, "II": 5}


def subseed(seed, *path) -> np.random.SeedSequence:
    """Deterministic child seed for (seed, *path); stable across platforms."""
    return np.random.SeedSequence([int(seed), *(int(p) for p in path)])


@dataclass(frozen=True)
class GroundTruth:
    """Simulated truth: shared component, per-study deviations, precisions."""

    model_id: str
    shared: np.ndarray            # pre-offset shared component
    uniques: np.ndarray           # (K+1, d, d)
    precisions: np.ndarray        # (K+1, d, d): shared + unique_k + sigma*I
    sigma_offset: float
    h_per_study: tuple[int, ...]
    seed: object

    @property
    def K(self) -> int:
        return self.precisions.shape[0] - 1

    @property
    def d(self) -> int:
        return self.precisions.shape[1]

    def differential(self, k: int) -> np.ndarray:
        """Truth difference precisions[k] - precisions[0]."""
        return self.precisions[k] - self.precisions[0]


def _banded(d: int, bandwidth: int) -> np.ndarray:
    idx = np.arange(d)
    dist = np.abs(idx[:, None] - idx[None, :])
    return np.where(dist <= bandwidth, 5.0 * 0.6 ** dist, 0.0)


def _erdos_renyi_shared(d: int, rng: np.random.Generator) -> np.ndarray:
    shared = np.zeros((d, d))
    np.fill_diagonal(shared, 5.0)
    iu, ju = np.triu_indices(d, k=1)
    edges = rng.random(iu.size) < 0.02
    weights = rng.uniform(-3.0, 3.0, size=int(edges.sum()))
    shared[iu[edges], ju[edges]] = weights
    shared[ju[edges], iu[edges]] = weights
    return shared


def _block_unique(d: int, bandwidth: int, h: int, rng: np.random.Generator) -> np.ndarray:
    """Deviation for models I/II: ceil(h/2) upper-block entries, symmetrized.

    Candidate positions exclude the band so the deviation's support stays
    disjoint from the shared component's.
    """
    half = d // 2
    rows, cols = np.meshgrid(np.arange(half), np.arange(half, d), indexing="ij")
    keep = (cols - rows) > bandwidth
    rows, cols = rows[keep], cols[keep]
    need = math.ceil(h / 2)
    if need > rows.size:
        raise ConfigError(
            f"h={h} needs {need} block positions but only {rows.size} lie off the band"
        )
    tilde = np.zeros((d, d))
    picked = rng.choice(rows.size, size=need, replace=False)
    tilde[rows[picked], cols[picked]] = rng.uniform(-3.0, 3.0, size=need)
    return tilde + tilde.T


def _pair_unique(shared: np.ndarray, h: int, rng: np.random.Generator) -> np.ndarray:
    """Deviation for model III: symmetric off-support pairs, h entries
    (h+1 when h is odd); the diagonal is always in the shared support."""
    d = shared.shape[0]
    iu, ju = np.triu_indices(d, k=1)
    free = shared[iu, ju] == 0.0
    iu, ju = iu[free], ju[free]
    need = math.ceil(h / 2)
    if need > iu.size:
        raise ConfigError(
            f"h={h} needs {need} symmetric pairs but only {iu.size} positions are off-support"
        )
    gamma = np.zeros((d, d))
    picked = rng.choice(iu.size, size=need, replace=False)
    weights = rng.uniform(-3.0, 3.0, size=need)
    gamma[iu[picked], ju[picked]] = weights
    gamma[ju[picked], iu[picked]] = weights
    return gamma


def gen_model(model_id: str, d: int, K: int, h, seed) -> GroundTruth:
    """Generate one ground truth; deterministic given the seed.

    ``h`` is a single sparsity level or a per-study list of K+1 levels
    (target first).
    """
    if model_id not in ("I", "II", "III"):
        raise ConfigError(f"unknown model {model_id!r}; expected 'I', 'II' or 'III'")
    if d < 2:
        raise ConfigError(f"d must be at least 2, got {d}")
    if K < 0:
        raise ConfigError(f"K must be nonnegative, got {K}")
    if np.isscalar(h):
        hs = (int(h),) * (K + 1)
    else:
        hs = tuple(int(v) for v in h)
        if len(hs) != K + 1:
            raise ConfigError(f"h list must have K+1={K + 1} entries, got {len(hs)}")
    if any(v < 0 for v in hs):
        raise ConfigError("sparsity levels must be nonnegative")

    rng = np.random.default_rng(seed)
    if model_id == "III":
        shared = _erdos_renyi_shared(d, rng)
        uniques = np.stack([_pair_unique(shared, hk, rng) for hk in hs])
    else:
        bandwidth = _BANDWIDTHS[model_id]
        shared = _banded(d, bandwidth)
        uniques = np.stack([_block_unique(d, bandwidth, hk, rng) for hk in hs])

    base = shared[None] + uniques
    min_eig = float(np.linalg.eigvalsh(base)[:, 0].min())
    sigma = max(0.0, _MIN_EIGENVALUE - min_eig)
    precisions = base + sigma * np.eye(d)[None]
    return GroundTruth(
        model_id=model_id,
        shared=shared,
        uniques=uniques,
        precisions=precisions,
        sigma_offset=sigma,
        h_per_study=hs,
        seed=seed,
    )


def sample_gaussian(omega: np.ndarray, n: int, seed, study_id: int = 0) -> StudyData:
    """Draw n i.i.d. zero-mean Gaussian rows with precision ``omega``.

    Standard normals are mapped through the inverse transpose of the Cholesky
    factor of omega, so the covariance is exactly omega^{-1}.
    """
    W = np.asarray(omega, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"omega must be square, got shape {W.shape}")
    if n < 2:
        raise DimensionError(f"need at least 2 samples, got {n}")
    try:
        chol = np.linalg.cholesky(W)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"omega is not positive definite: {exc}") from exc
    z = np.random.default_rng(seed).standard_normal((n, W.shape[0]))
    samples = np.linalg.solve(chol.T, z.T).T
    return StudyData(samples, study_id=study_id)


def frob_error(estimate, truth) -> float:
    """Frobenius norm of the difference between two matrices."""
    a = np.asarray(estimate, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


# --------------------------------------------------------------------------
# Benchmark harness


def _run_trans_glasso(target, sources, config, rep):
    return fit_trans_glasso(
        target, sources,
        center=False,
        admm_config=config.admm_config,
        dtrace_config=config.dtrace_config,
        grid_size=config.grid_size,
        grid_decades=config.grid_decades,
    ).omega0


def _run_trans_glasso_cv(target, sources, config, rep):
    return trans_glasso_cv(
        target, sources,
        folds=config.folds,
        seed=subseed(config.seed, rep, 1000),
        center=False,
        admm_config=config.admm_config,
        dtrace_config=config.dtrace_config,
        grid_size=config.grid_size,
        grid_decades=config.grid_decades,
    ).omega0


def _run_glasso_target(target, sources, config, rep):
    problem = build_problem(target, sources, center=False)
    from .tuning import default_glasso_grid

    grid = default_glasso_grid(problem.target_cov, num=config.grid_size,
                               decades=config.grid_decades)
    return glasso_target(problem, grid, config=config.admm_config).omega


def _run_glasso_pooled(target, sources, config, rep):
    problem = build_problem(target, sources, center=False)
    from .baselines import pooled_covariance
    from .tuning import default_glasso_grid

    grid = default_glasso_grid(pooled_covariance(problem), num=config.grid_size,
                               decades=config.grid_decades)
    return glasso_pooled(problem, grid, config=config.admm_config).omega


ESTIMATORS = {
    "trans-glasso": _run_trans_glasso,
    "trans-glasso-cv": _run_trans_glasso_cv,
    "glasso-target": _run_glasso_target,
    "glasso-pooled": _run_glasso_pooled,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark scenario: generator parameters plus estimators to score."""

    model_id: str
    d: int
    K: int
    n0: int
    n_source: int
    h: object                      # scalar or per-study list (target first)
    repetitions: int = 1
    seed: int = 0
    estimators: tuple[str, ...] = ("trans-glasso", "glasso-target", "glasso-pooled")
    design: str = "custom"
    folds: int = 5
    grid_size: int = 30
    grid_decades: float = 3.0
    admm_config: AdmmConfig | None = None
    dtrace_config: DtraceConfig | None = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.n0 < 2 or self.n_source < 2:
            raise ConfigError("sample sizes must be at least 2")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown:
            raise ConfigError(f"unknown estimators {unknown}; known: {sorted(ESTIMATORS)}")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        object.__setattr__(self, "estimators", tuple(self.estimators))


@dataclass(frozen=True)
class ReportRow:
    model: str
    design: str
    rep: int
    estimator: str
    frob_error: float | None


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    summary: dict

    def to_csv(self, path) -> None:
        lines = ["model,design,rep,estimator,frob_error"]
        for r in self.rows:
            err = "" if r.frob_error is None else f"{r.frob_error:.17g}"
            lines.append(f"{r.model},{r.design},{r.rep},{r.estimator},{err}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def _summarize(rows, estimators) -> dict:
    summary = {}
    for name in estimators:
        errs = [r.frob_error for r in rows if r.estimator == name and r.frob_error is not None]
        if not errs:
            summary[name] = {"mean": None, "stderr": None, "completed": 0}
            continue
        arr = np.asarray(errs, dtype=float)
        stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        summary[name] = {
            "mean": float(arr.mean()),
            "stderr": stderr,
            "completed": int(arr.size),
        }
    return summary


def _run_repetition(config: ExperimentConfig, rep: int) -> list[ReportRow]:
    truth = gen_model(config.model_id, config.d, config.K, config.h,
                      subseed(config.seed, rep, 0))
    target = sample_gaussian(truth.precisions[0], config.n0,
                             subseed(config.seed, rep, 1), study_id=0)
    sources = [
        sample_gaussian(truth.precisions[k], config.n_source,
                        subseed(config.seed, rep, 1 + k), study_id=k)
        for k in range(1, config.K + 1)
    ]
    rows = []
    for name in config.estimators:
        try:
            omega = ESTIMATORS[name](target, sources, config, rep)
            err = frob_error(omega, truth.precisions[0])
        except (TransGlassoError, np.linalg.LinAlgError):
            err = None
        rows.append(ReportRow(config.model_id, config.design, rep, name, err))
    return rows


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Run every repetition and score every estimator.

    Each repetition derives its own seeds from (seed, rep), so repetitions may
    execute concurrently and the report is identical for any thread count.
    A hard-failing estimator leaves a missing cell; the run continues.
    """
    reps = range(config.repetitions)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(lambda r: _run_repetition(config, r), reps))
    else:
        per_rep = [_run_repetition(config, r) for r in reps]
    rows = [row for chunk in per_rep for row in chunk]
    return ExperimentReport(rows=rows, summary=_summarize(rows, config.estimators))
