"""Non-parametric estimation of the within/between distance split.

Everything here is built from step-function empirical CDFs over observed
distances.  For a tested class we form, per member instance, the ECDF of its
within-class distances and the ECDF of its distances to all outside
instances; pooling those gives the two population-level curves whose
crossing defines the cut-off.

Conventions (they matter for exactness):

* CDFs use closed comparisons: ``cdf(t) = #{values <= t} / count``.
* The generalized inverse is ``quantile(q) = inf{t in support: cdf(t) >= q}``
  with ``quantile(0)`` equal to the smallest support point.
* The cut-off solves ``psi(t) <= t`` for
  ``psi(t) = quantile_G(1 - F(t))``; since ``psi`` is a right-continuous
  step function taking values in the support of G, the infimum over the
  whole real line is attained at a point of the merged support, so the
  solver is a finite scan with all comparisons done on exact integer counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import EstimationError


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous empirical CDF over a sorted sample of distances."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("empirical CDF needs a non-empty 1-d sample")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_sample(cls, sample: np.ndarray) -> "EmpiricalCdf":
        return cls(values=np.sort(np.asarray(sample, dtype=float)))

    @property
    def size(self) -> int:
        return self.values.size

    def count_leq(self, t) -> int | np.ndarray:
        """Number of sample values <= t (exact integer count)."""
        counts = np.searchsorted(self.values, t, side="right")
        return int(counts) if np.isscalar(t) else counts

    def evaluate(self, t):
        """CDF value at t, i.e. count_leq(t) / size."""
        return self.count_leq(t) / self.size

    def quantile(self, q: float) -> float:
        """Generalized inverse: smallest support point with CDF >= q."""
        if q > 1.0:
            raise ValueError(f"quantile level must be <= 1, got {q}")
        if q <= 0.0:
            return float(self.values[0])
        qn, qd = float(q).as_integer_ratio()
        rank = -((-self.size * qn) // qd)  # ceil(size * q), exactly
        return float(self.values[rank - 1])


def per_instance_cdfs(
    within: np.ndarray, between: np.ndarray
) -> tuple[list[EmpiricalCdf], list[EmpiricalCdf]]:
    """Per-member ECDFs of within-class and cross-class distances.

    ``within`` is the square block of distances among the class's k members
    (diagonal excluded per row), ``between`` the k x (N-k) block of their
    distances to all outside instances.  The cross-class ECDF weights every
    outside class by its share of instances, which is numerically identical
    to the plain ECDF of the instance's pooled cross distances.
    """
    within = np.asarray(within, dtype=float)
    between = np.asarray(between, dtype=float)
    k = within.shape[0]
    if k < 2 or within.shape != (k, k):
        raise ValueError(f"within-block must be square with size >= 2, got {within.shape}")
    if between.ndim != 2 or between.shape[0] != k:
        raise ValueError("between-block must have one row per class member")
    if between.shape[1] == 0:
        raise EstimationError(
            "class covers all instances; no cross-class distances to estimate from"
        )
    off_diagonal = within[~np.eye(k, dtype=bool)].reshape(k, k - 1)
    g_cdfs = [EmpiricalCdf.from_sample(row) for row in off_diagonal]
    f_cdfs = [EmpiricalCdf.from_sample(row) for row in between]
    return g_cdfs, f_cdfs


def pool_cdfs(cdfs: Sequence[EmpiricalCdf]) -> EmpiricalCdf:
    """Average of equally-sized ECDFs = ECDF of the concatenated samples."""
    if not cdfs:
        raise ValueError("nothing to pool")
    sizes = {c.size for c in cdfs}
    if len(sizes) != 1:
        raise ValueError(f"can only pool equally-sized ECDFs, got sizes {sorted(sizes)}")
    return EmpiricalCdf(values=np.sort(np.concatenate([c.values for c in cdfs])))


def psi_hat(g_bar: EmpiricalCdf, f_bar: EmpiricalCdf, t: float) -> float:
    """The plug-in map whose fixed point separates within from between."""
    return g_bar.quantile(1.0 - f_bar.evaluate(t))


@dataclass(frozen=True)
class ClassEstimates:
    """Cut-off and concentration estimates for one tested class."""

    t_star_hat: float
    tau_hat: float
    g_bar_hat: EmpiricalCdf
    f_bar_hat: EmpiricalCdf
    fixed_point_found: bool = True


def solve_t_star(g_bar: EmpiricalCdf, f_bar: EmpiricalCdf) -> ClassEstimates:
    """Find the smallest cut-off t with psi(t) <= t, and the mass below it.

    The scan runs over the merged support of both ECDFs using exact integer
    counts; floating comparisons appear only in the final ``psi <= t`` step
    against observed distance values.  If no support point satisfies the
    condition (cannot happen unless the inputs are inconsistent), the
    largest one is returned with ``fixed_point_found=False``.
    """
    g = g_bar.values
    f = f_bar.values
    mg, mf = g.size, f.size
    merged = np.union1d(g, f)
    below_f = np.searchsorted(f, merged, side="right").astype(np.int64)
    # rank of psi(t) in g: smallest j with (j+1)/mg >= (mf - below_f)/mf
    need = np.int64(mg) * (np.int64(mf) - below_f)
    ranks = -(-need // np.int64(mf)) - 1
    np.clip(ranks, 0, mg - 1, out=ranks)
    psi = g[ranks]
    hit = psi <= merged
    if hit.any():
        t_star = float(merged[int(np.argmax(hit))])
        found = True
    else:
        t_star = float(merged[-1])
        found = False
    tau = g_bar.evaluate(t_star)
    return ClassEstimates(
        t_star_hat=t_star,
        tau_hat=float(tau),
        g_bar_hat=g_bar,
        f_bar_hat=f_bar,
        fixed_point_found=found,
    )
