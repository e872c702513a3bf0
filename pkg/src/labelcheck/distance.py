"""Pairwise (quasi-)distances between instance intensity vectors.

The default metric is correlation distance ``1 - r`` with ``r`` the Pearson
correlation of the two vectors; it is a quasi-distance (symmetric,
non-negative, zero on the diagonal) but does not satisfy the triangle
inequality.  Euclidean and Manhattan distances are provided as alternatives.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import DataMatrix, DegenerateInputError, DistanceMatrix

METRICS = ("correlation", "euclidean", "manhattan")


def _centered(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("expected a 1-d vector with at least 2 samples")
    return x - x.mean()


def correlation_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Correlation distance ``1 - r`` between two sample vectors, in [0, 2].

    Pearson ``r`` is computed two-pass (means first, then moments) and the
    result is clamped to [0, 2] to absorb rounding at the boundaries.
    Raises :class:`DegenerateInputError` if either vector has zero variance.
    """
    dx, dy = _centered(x), _centered(y)
    if dx.size != dy.size:
        raise ValueError("vectors must have equal length")
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInputError("zero-variance vector: correlation distance undefined")
    r = float(dx @ dy) / np.sqrt(sx * sy)
    return float(min(max(1.0 - r, 0.0), 2.0))


def euclidean_distance(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.linalg.norm(x - y))


def manhattan_distance(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.abs(x - y).sum())


_PAIRWISE = {
    "correlation": correlation_distance,
    "euclidean": euclidean_distance,
    "manhattan": manhattan_distance,
}


def pair_distance(x: np.ndarray, y: np.ndarray, metric: str) -> float:
    """Distance between two instance vectors under the named metric."""
    try:
        return _PAIRWISE[metric](x, y)
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}") from None


def degenerate_instances(data: DataMatrix) -> list[str]:
    """IDs of instances with zero sample variance (undefined correlation)."""
    centered = data.values - data.values.mean(axis=0)
    ss = np.einsum("ij,ij->j", centered, centered)
    return [data.instance_ids[i] for i in np.flatnonzero(ss == 0.0)]


def build_distance_matrix(data: DataMatrix, metric: str = "correlation") -> DistanceMatrix:
    """Assemble the full symmetric distance matrix over all instances.

    Only the upper triangle is computed; it is mirrored so symmetry and the
    zero diagonal hold exactly.  Under the correlation metric, zero-variance
    instances raise :class:`DegenerateInputError` listing the offending IDs.
    """
    if metric == "correlation":
        entries = _correlation_matrix(data)
    elif metric in ("euclidean", "manhattan"):
        condensed = pdist(data.values.T, "cityblock" if metric == "manhattan" else "euclidean")
        entries = squareform(condensed)
    else:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    upper = np.triu(entries, k=1)
    exact = upper + upper.T
    return DistanceMatrix(entries=exact, instance_ids=data.instance_ids)


def _correlation_matrix(data: DataMatrix) -> np.ndarray:
    bad = degenerate_instances(data)
    if bad:
        raise DegenerateInputError(
            "zero-variance instance(s) under the correlation metric: " + ", ".join(bad),
            instance_ids=bad,
        )
    centered = data.values - data.values.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    r = (centered.T @ centered) / np.outer(norms, norms)
    return np.clip(1.0 - r, 0.0, 2.0)
