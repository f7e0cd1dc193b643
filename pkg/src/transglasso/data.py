"""Per-study sample matrices, sample covariances, and the weighted
multi-study problem consumed by the solvers.

All containers are immutable after construction (arrays are frozen), so they
can be shared freely across threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError, NumericError, ParseError

# Soft tolerance for the covariance PSD check.  A 1/n covariance is PSD by
# construction, so violations beyond rounding indicate numeric corruption;
# they warn instead of raising.
PSD_WARN_TOL = 1e-10


@dataclass(frozen=True)
class StudyData:
    """Observations of a single study: rows are samples, columns variables.

    study_id 0 denotes the target study, 1..K the sources.
    """

    samples: np.ndarray
    study_id: int = 0

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2:
            raise DimensionError(
                f"study {self.study_id}: samples must be a 2-d matrix, got shape {samples.shape}"
            )
        n, d = samples.shape
        if n < 2:
            raise DimensionError(
                f"study {self.study_id}: at least 2 observations required, got {n}"
            )
        if d < 1:
            raise DimensionError(f"study {self.study_id}: at least 1 variable required")
        if not np.all(np.isfinite(samples)):
            raise NumericError(f"study {self.study_id}: samples contain non-finite entries")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class CovMatrix:
    """A d x d sample covariance together with the sample count behind it."""

    matrix: np.ndarray
    n: int

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"covariance must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NumericError("covariance contains non-finite entries")
        if self.n < 1:
            raise DimensionError(f"sample count must be positive, got {self.n}")
        scale = max(1.0, float(np.max(np.abs(m))))
        asym = float(np.max(np.abs(m - m.T)))
        if asym > 1e-8 * scale:
            raise ContractError(f"covariance not symmetric: max asymmetry {asym:.3e}")
        m = 0.5 * (m + m.T)
        evals = np.linalg.eigvalsh(m)
        if evals[0] < -PSD_WARN_TOL * max(1.0, float(evals[-1])):
            warnings.warn(
                f"covariance has negative eigenvalue {evals[0]:.3e}; input may be corrupted",
                RuntimeWarning,
                stacklevel=2,
            )
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ProblemInstance:
    """Target plus K source covariances with their sample-share weights.

    weights[k] equals n_k / N where N is the pooled sample count; the target
    is always index 0.
    """

    target_cov: CovMatrix
    source_covs: tuple[CovMatrix, ...]
    weights: np.ndarray
    total_n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "source_covs", tuple(self.source_covs))
        d = self.target_cov.d
        for k, cov in enumerate(self.source_covs, start=1):
            if cov.d != d:
                raise DimensionError(f"source {k} has dimension {cov.d}, target has {d}")
        ns = [self.target_cov.n] + [c.n for c in self.source_covs]
        if sum(ns) != self.total_n:
            raise ContractError(
                f"total_n={self.total_n} does not match the studies' sample counts {ns}"
            )
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(ns),):
            raise ContractError(f"expected {len(ns)} weights, got shape {w.shape}")
        expected = np.array(ns, dtype=float) / float(self.total_n)
        if not np.array_equal(w, expected):
            raise ContractError("weights must equal n_k / N exactly")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ContractError(f"weights sum to {w.sum()!r}, expected 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def K(self) -> int:
        return len(self.source_covs)

    @property
    def d(self) -> int:
        return self.target_cov.d

    @property
    def covs(self) -> list[CovMatrix]:
        """All studies' covariances, target first."""
        return [self.target_cov, *self.source_covs]


def load_csv(path, has_header: bool = False, study_id: int = 0) -> StudyData:
    """Load one study from a CSV file (one observation per row).

    Comma-separated, decimal-point reals, UTF-8, optional single header row.
    Raises ParseError naming the offending row/column for ragged rows and
    non-numeric cells, and DimensionError for fewer than 2 data rows.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    start = 1 if has_header else 0
    rows: list[list[float]] = []
    width = None
    for offset, line in enumerate(lines[start:]):
        row_no = start + offset + 1  # 1-based, counting any header row
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(
                f"{path}: row {row_no}: expected {width} columns, got {len(cells)}"
            )
        parsed = []
        for col, cell in enumerate(cells, start=1):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {row_no}, column {col}: cannot parse {cell.strip()!r} as a real number"
                ) from None
            if not math.isfinite(value):
                raise ParseError(
                    f"{path}: row {row_no}, column {col}: non-finite value {cell.strip()!r}"
                )
            parsed.append(value)
        rows.append(parsed)
    if len(rows) < 2:
        raise DimensionError(f"{path}: need at least 2 data rows, found {len(rows)}")
    return StudyData(np.asarray(rows, dtype=float), study_id=study_id)


def sample_covariance(data: StudyData, center: bool = False) -> CovMatrix:
    """Sample covariance (1/n) sum_i x_i x_i^T, optionally after centering.

    The 1/n normalization is used in both modes (not 1/(n-1)).
    """
    X = data.samples
    n = X.shape[0]
    if n < 2:
        raise DimensionError(f"need at least 2 observations for a covariance, got {n}")
    if center:
        X = X - X.mean(axis=0)
    s = (X.T @ X) / n
    return CovMatrix(0.5 * (s + s.T), n)


def build_problem(target: StudyData, sources=(), center: bool = False) -> ProblemInstance:
    """Assemble the weighted multi-study problem from raw study data."""
    sources = list(sources)
    for s in sources:
        if s.d != target.d:
            raise DimensionError(
                f"study {s.study_id} has {s.d} variables, target has {target.d}"
            )
    covs = [sample_covariance(s, center) for s in [target, *sources]]
    ns = np.array([c.n for c in covs], dtype=float)
    total = int(ns.sum())
    weights = ns / total
    return ProblemInstance(covs[0], tuple(covs[1:]), weights, total)
