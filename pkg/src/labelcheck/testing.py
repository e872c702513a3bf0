"""Per-class outlier testing on pairwise distances.

For a class of size k, each member's statistic is the integer count of its
within-class distances not exceeding the estimated cut-off.  Under a correct
label this count is Binomial(k-1, tau); the test removes members whose count
falls at or below an exact binomial critical value chosen so the per-test
level never exceeds its budget, with the global budget split evenly over
the class (Bonferroni).

All binomial tail sums are evaluated in exact integer arithmetic (floats
are dyadic rationals, so partial sums are exact); results are rounded only
on the way out.  This keeps the critical value free of floating-point
boundary artifacts and makes repeated runs bit-reproducible.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    ClassLabeling,
    DistanceMatrix,
    LabelCheckError,
    TestConfig,
    build_partitioned_view,
)
from .estimation import ClassEstimates, per_instance_cdfs, pool_cdfs, solve_t_star

STATUS_OK = "ok"
STATUS_ASSUMPTION_VIOLATED = "assumption-violated"
STATUS_INSUFFICIENT_POWER = "insufficient-power"


def _ratio(x) -> tuple[int, int]:
    num, den = x.as_integer_ratio()
    return int(num), int(den)


def _partial_sum(k: int, n: int, p_num: int, p_den: int) -> tuple[int, int]:
    """Exact Binomial(n, p) CDF at k as numerator/denominator integers.

    Terms follow the multiplicative recurrence
    ``term(j+1) = term(j) * p*(n-j) / ((1-p)*(j+1))`` carried out on
    integers, so every division is exact.
    """
    b = p_den - p_num
    if b == 0:  # p == 1: all mass at n
        return (0, 1) if k < n else (1, 1)
    term = b**n
    total = term
    for j in range(1, k + 1):
        term = term * p_num * (n - j + 1) // (b * j)
        total += term
    return total, p_den**n


def binomial_cdf(k: int, n: int, p) -> float:
    """Exact partial binomial sum Pr(X <= k) for X ~ Binomial(n, p).

    ``p`` may be a float or a Fraction; the sum is computed exactly and
    correctly rounded to a float.  Monotone non-decreasing in ``k``.
    """
    return float(binomial_cdf_exact(k, n, p))


def binomial_cdf_exact(k: int, n: int, p) -> Fraction:
    """Exact rational value of the partial binomial sum Pr(X <= k)."""
    if n < 0:
        raise ValueError(f"need n >= 0, got {n}")
    if k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    p_num, p_den = _ratio(p)
    if not 0 <= p_num <= p_den:
        raise ValueError(f"need p in [0, 1], got {p}")
    num, den = _partial_sum(k, n, p_num, p_den)
    return Fraction(num, den)


def critical_value(n_trials: int, tau, alpha: float) -> int | None:
    """Largest k with Binomial(n_trials, tau) CDF at k within the per-test budget.

    Returns ``None`` when even k = 0 exceeds ``alpha``, meaning the test can
    never reject at this class size.  ``tau`` may be a float or an exact
    Fraction of counts.  A ``tau <= 0.5`` triggers a warning (the ordering
    assumption is violated downstream) but the value is still computed.
    """
    if n_trials < 1:
        raise ValueError(f"need n_trials >= 1, got {n_trials}")
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"need alpha in (0, 0.5), got {alpha}")
    t_num, t_den = _ratio(tau)
    if not 0 < t_num <= t_den:
        raise ValueError(f"need tau in (0, 1], got {tau}")
    if 2 * t_num <= t_den:
        warnings.warn(
            f"tau = {float(tau):.4f} <= 0.5: stochastic-ordering assumption violated",
            stacklevel=2,
        )
    if t_num == t_den:  # tau == 1: CDF is 0 strictly below n_trials
        return n_trials - 1 if n_trials >= 1 else None
    a_num, a_den = _ratio(float(alpha))
    b = t_den - t_num
    term = b**n_trials
    total = term
    rhs = a_num * t_den**n_trials
    best: int | None = None
    for k in range(n_trials + 1):
        if k:
            term = term * t_num * (n_trials - k + 1) // (b * k)
            total += term
        if total * a_den <= rhs:
            best = k
        else:
            break  # partial sums only grow from here
    return best


def tau_star_bound(n_trials: int, alpha: float, tol: float = 1e-6) -> float:
    """Smallest tau for which the critical value reaches half the trials.

    Above this threshold the type II error is bounded by ``alpha`` as well
    (binomial reflection).  Found by bisection on the exact binomial CDF;
    the returned value is within ``tol`` of the true boundary.
    """
    if n_trials < 2:
        # With one trial the critical value caps at 0 < 1/2, so no tau works.
        raise ValueError(f"no threshold exists for n_trials = {n_trials}; need >= 2")
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"need alpha in (0, 0.5), got {alpha}")

    def reaches_half(t: float) -> bool:
        a = critical_value(n_trials, t, alpha)
        return a is not None and 2 * a >= n_trials

    lo, hi = 0.5, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if reaches_half(mid):
            hi = mid
        else:
            lo = mid
    return hi


def type2_error(n_trials: int, tau, a_alpha: int) -> float:
    """Probability that a truly mislabeled instance survives the test.

    The statistic of a mislabeled instance is Binomial(n_trials, 1 - tau);
    surviving means landing at or above the critical value, so this is
    ``1 - cdf(a_alpha - 1)`` under that law.
    """
    if not 0 <= a_alpha <= n_trials:
        raise ValueError(f"need 0 <= a_alpha <= n_trials, got {a_alpha}")
    if a_alpha == 0:
        return 1.0
    t_num, t_den = _ratio(tau)
    return float(1 - binomial_cdf_exact(a_alpha - 1, n_trials, Fraction(t_den - t_num, t_den)))


@dataclass(frozen=True)
class ClassTestResult:
    """Verdicts and diagnostics for one tested class."""

    class_id: str
    instance_ids: tuple[str, ...]
    t_star_hat: float
    tau_hat: float
    alpha: float
    a_alpha: int | None
    z: np.ndarray
    rejected: np.ndarray
    status: str
    fixed_point_found: bool
    lemma2_satisfied: bool
    estimates: ClassEstimates = field(repr=False)

    @property
    def class_size(self) -> int:
        return len(self.instance_ids)

    @property
    def n_trials(self) -> int:
        return self.class_size - 1

    @property
    def r_count(self) -> int:
        return int(self.rejected.sum())

    @property
    def removed_ids(self) -> tuple[str, ...]:
        return tuple(i for i, r in zip(self.instance_ids, self.rejected) if r)


def test_class(
    distances: DistanceMatrix,
    labeling: ClassLabeling,
    class_id: str,
    cfg: TestConfig,
) -> ClassTestResult:
    """Run the validation test for one class against all other instances.

    The cut-off and tau are estimated from the class as currently labeled;
    tau is then plugged into the critical-value computation as an exact
    ratio of counts.  If tau ends up at or below 0.5 the ordering assumption
    is violated and nothing is rejected; if no critical value exists the
    class is reported untouched with an insufficient-power status.
    """
    within, between = build_partitioned_view(distances, labeling, class_id)
    g_cdfs, f_cdfs = per_instance_cdfs(within, between)
    estimates = solve_t_star(pool_cdfs(g_cdfs), pool_cdfs(f_cdfs))

    members = labeling.indices(class_id)
    ids = tuple(distances.instance_ids[i] for i in members)
    k = len(ids)
    z = np.array([c.count_leq(estimates.t_star_hat) for c in g_cdfs], dtype=np.int64)
    tau_exact = Fraction(int(z.sum()), k * (k - 1))
    alpha = cfg.alpha_rule(cfg.alpha0, k)

    status = STATUS_OK
    a_alpha: int | None = None
    if tau_exact <= Fraction(1, 2):
        status = STATUS_ASSUMPTION_VIOLATED
    else:
        a_alpha = critical_value(k - 1, tau_exact, alpha)
        if a_alpha is None:
            status = STATUS_INSUFFICIENT_POWER
    rejected = np.zeros(k, dtype=bool) if a_alpha is None else z <= a_alpha
    rejected.setflags(write=False)
    z.setflags(write=False)
    return ClassTestResult(
        class_id=class_id,
        instance_ids=ids,
        t_star_hat=estimates.t_star_hat,
        tau_hat=estimates.tau_hat,
        alpha=alpha,
        a_alpha=a_alpha,
        z=z,
        rejected=rejected,
        status=status,
        fixed_point_found=estimates.fixed_point_found,
        lemma2_satisfied=a_alpha is not None and 2 * a_alpha >= k - 1,
        estimates=estimates,
    )


@dataclass(frozen=True)
class ValidationResult:
    """Per-class results of a one-vs-all sweep, with non-fatal errors kept aside."""

    results: tuple[ClassTestResult, ...]
    errors: dict[str, str]


def validate_all(
    distances: DistanceMatrix,
    labeling: ClassLabeling,
    cfg: TestConfig,
    workers: int = 1,
) -> ValidationResult:
    """Test every non-mega class independently (one-vs-all).

    Per-class failures are collected instead of aborting the sweep; results
    come back in class order regardless of worker count.
    """
    class_ids = labeling.testable_classes
    results: dict[str, ClassTestResult] = {}
    errors: dict[str, str] = {}

    def run(cid: str):
        try:
            return cid, test_class(distances, labeling, cid, cfg), None
        except LabelCheckError as exc:
            return cid, None, str(exc)

    if workers > 1 and len(class_ids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, class_ids))
    else:
        outcomes = [run(cid) for cid in class_ids]
    for cid, res, err in outcomes:
        if err is None:
            results[cid] = res
        else:
            errors[cid] = err
    return ValidationResult(
        results=tuple(results[cid] for cid in class_ids if cid in results),
        errors=errors,
    )
