"""Behavioral diversity over an ensemble of runs.

Three estimators over a set of behavior vectors: approximate behavior-space
coverage (occupied cells of a quantized grid), mean pairwise distance, and
Gaussian-approximation differential entropy. Plus the bootstrap protocol
used for class comparisons (subsample without replacement, score each
replicate with all three estimators).

Features are min-max normalized to [0, 1]. By default the bounds come from
the estimator's own input; cross-ensemble comparisons should pass bounds
pooled over all ensembles so a spread difference between classes is not
normalized away. Degenerate features (zero range under the chosen bounds)
are dropped and logged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .features import BehaviorVector
from .rng import RandomSource

log = logging.getLogger(__name__)

_LOG_2PI_E = float(np.log(2.0 * np.pi * np.e))


@dataclass(frozen=True)
class DiversityReport:
    coverage: float
    mean_pairwise: float
    entropy: float
    n_samples: int
    bootstrap_replicates: int = 1


def as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        m = np.asarray(vectors, dtype=np.float64)
    else:
        rows = [v.values if isinstance(v, BehaviorVector) else v for v in vectors]
        m = np.asarray(rows, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("expected a 2-D ensemble of behavior vectors")
    return m


def feature_bounds(vectors) -> tuple[np.ndarray, np.ndarray]:
    m = as_matrix(vectors)
    return m.min(axis=0), m.max(axis=0)


def _normalize(m: np.ndarray, bounds, drop_tol: float = 1e-12):
    """Min-max normalize; returns (normalized, kept_dims)."""
    lo, hi = bounds
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    span = hi - lo
    kept = span > drop_tol
    if not np.all(kept):
        dropped = np.nonzero(~kept)[0].tolist()
        log.info("dropping %d degenerate feature dimension(s): %s", len(dropped), dropped)
    x = (m[:, kept] - lo[kept]) / span[kept]
    return np.clip(x, 0.0, 1.0), kept


def diversity_coverage(vectors, resolution: int = 10, bounds=None) -> float:
    """Occupied fraction (or count) of the quantized behavior grid.

    Returns occupied/total when resolution**kept_dims is exactly
    representable; beyond that the raw occupied-cell count is returned
    (the grid cannot be enumerated in high dimension).
    """
    m = as_matrix(vectors)
    if len(m) < 2:
        raise ValueError("coverage needs at least 2 vectors")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if bounds is None:
        bounds = (m.min(axis=0), m.max(axis=0))
    x, kept = _normalize(m, bounds)
    d_kept = int(kept.sum())
    d_in = m.shape[1]
    if d_kept == 0:
        # every feature degenerate: the ensemble occupies one cell
        return float(resolution) ** -d_in
    cells = np.minimum((x * resolution).astype(np.int64), resolution - 1)
    occupied = len(np.unique(cells, axis=0))
    total = float(resolution) ** d_kept
    if total <= 2**53:
        return occupied / total
    return float(occupied)


def diversity_mean_pairwise(vectors, bounds=None) -> float:
    """Mean Euclidean distance over all unordered pairs of normalized vectors."""
    m = as_matrix(vectors)
    if len(m) < 2:
        raise ValueError("mean pairwise distance needs at least 2 vectors")
    if bounds is None:
        bounds = (m.min(axis=0), m.max(axis=0))
    x, _ = _normalize(m, bounds)
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    iu = np.triu_indices(len(x), k=1)
    return float(dist[iu].mean())


def diversity_entropy(
    vectors, bounds=None, regularizer: float = 1e-6, normalized: bool = True
) -> float:
    """Gaussian-approximation differential entropy
    0.5 * ln((2*pi*e)^d * det(Sigma + regularizer * I)).

    normalized=False evaluates the raw (unnormalized) vectors, which is the
    form that matches closed-form Gaussian entropies in validation.
    """
    m = as_matrix(vectors)
    if normalized:
        if bounds is None:
            bounds = (m.min(axis=0), m.max(axis=0))
        x, _ = _normalize(m, bounds)
    else:
        x = m
    n, d = x.shape
    if d == 0:
        return 0.0
    if n < d + 2:
        raise ValueError(f"entropy needs at least {d + 2} vectors for {d} dimensions, got {n}")
    sigma = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    sigma = sigma + regularizer * np.eye(d)
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise ArithmeticError("covariance with regularizer is not positive definite")
    return 0.5 * (d * _LOG_2PI_E + logdet)


def bootstrap_diversity(
    runs,
    rng: RandomSource,
    replicates: int = 100,
    subsample: int = 250,
    resolution: int = 10,
    bounds=None,
) -> list[DiversityReport]:
    """Score `replicates` subsamples (without replacement) of the run
    ensemble with all three estimators.

    Normalization bounds default to the full input ensemble (computed once),
    not each subsample, so replicates are comparable; pass pooled bounds for
    cross-class comparisons. A subsample too small for the entropy estimator
    (fewer than kept_dims + 2 vectors) reports entropy as NaN.
    """
    m = as_matrix(runs)
    if subsample > len(m):
        raise ValueError(f"subsample {subsample} exceeds ensemble size {len(m)}")
    if bounds is None:
        bounds = (m.min(axis=0), m.max(axis=0))
    reports = []
    for _ in range(replicates):
        pick = rng.choice(len(m), size=subsample, replace=False)
        sub = m[np.sort(pick)]
        try:
            entropy = diversity_entropy(sub, bounds=bounds)
        except ValueError:
            entropy = float("nan")
        reports.append(
            DiversityReport(
                coverage=diversity_coverage(sub, resolution=resolution, bounds=bounds),
                mean_pairwise=diversity_mean_pairwise(sub, bounds=bounds),
                entropy=entropy,
                n_samples=subsample,
                bootstrap_replicates=replicates,
            )
        )
    return reports
