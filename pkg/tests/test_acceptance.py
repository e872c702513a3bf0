"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible with ``pytest -s``); the
assertion carries the same text so failures are self-describing.  The
Monte-Carlo criteria use fixed seeds and the tolerances below, so the whole
module is deterministic.  Expect a total runtime in the 10-15 minute range,
dominated by the independent-draw study at class size 2000.
"""

import math
import os
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import binom, chisquare, norm

from labelcheck.cli import main
from labelcheck.core import ClassLabeling, build_partitioned_view
from labelcheck.estimation import per_instance_cdfs, pool_cdfs, solve_t_star
from labelcheck.simulation import (
    IndependentStudyConfig,
    StudyConfig,
    generate_independent_distances,
    run_independent_study,
    run_study,
)
from labelcheck.testing import binomial_cdf_exact, critical_value, tau_star_bound

WORKERS = os.cpu_count() or 1


def check(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line, flush=True)
    assert ok, line


def test_criterion_1_no_mislabeling_convergence_cells():
    converged = run_study(
        StudyConfig(n=700, n1=25, n2=1000, rho=(0.5, 0.2, 0.2), p=0.0,
                    n_runs=200, alpha0=0.05, seed=101),
        workers=WORKERS,
    )
    fdr_hi = converged.aggregates.fdr.mean
    spec_hi = converged.aggregates.specificity.mean

    noisy = run_study(
        StudyConfig(n=10, n1=25, n2=1000, rho=(0.5, 0.2, 0.2), p=0.0,
                    n_runs=200, alpha0=0.05, seed=102),
        workers=WORKERS,
    )
    fdr_lo = noisy.aggregates.fdr.mean
    spec_lo = noisy.aggregates.specificity.mean

    ok = (
        abs(fdr_hi - 0.000) <= 0.01
        and 0.998 <= spec_hi <= 1.0
        and abs(fdr_lo - 0.916) <= 0.06
        and abs(spec_lo - 0.929) <= 0.02
    )
    check(
        "criterion 1 (no-mislabeling convergence cells)",
        ok,
        f"n=700: fdr={fdr_hi:.4f} (<=0.01), spec={spec_hi:.4f} (>=0.998); "
        f"n=10: fdr={fdr_lo:.4f} (0.916+-0.06), spec={spec_lo:.4f} (0.929+-0.02)",
    )


def test_criterion_2_mislabeling_spot_row():
    report = run_study(
        StudyConfig(n=50, n1=500, n2=1000, rho=(0.5, 0.2, 0.2), p=0.20,
                    n_runs=100, alpha0=0.05, seed=201),
        workers=WORKERS,
    )
    agg = report.aggregates
    ok_full = (
        abs(agg.for_rate.mean - 0.014) <= 0.008
        and abs(agg.sensitivity.mean - 0.945) <= 0.02
        and abs(agg.specificity.mean - 0.993) <= 0.005
        and abs(agg.fdr.mean - 0.026) <= 0.015
    )
    smoke = run_study(
        StudyConfig(n=50, n1=100, n2=1000, rho=(0.5, 0.2, 0.2), p=0.20,
                    n_runs=100, alpha0=0.05, seed=202),
        workers=WORKERS,
    )
    smoke_for = smoke.aggregates.for_rate.mean
    ok_smoke = abs(smoke_for - 0.026) <= 0.012
    check(
        "criterion 2 (20% mislabeling spot row)",
        ok_full and ok_smoke,
        f"N1=500: for={agg.for_rate.mean:.4f} (0.014+-0.008), "
        f"sens={agg.sensitivity.mean:.4f} (0.945+-0.02), "
        f"spec={agg.specificity.mean:.4f} (0.993+-0.005), "
        f"fdr={agg.fdr.mean:.4f} (0.026+-0.015); "
        f"N1=100 smoke: for={smoke_for:.4f} (0.026+-0.012)",
    )


def test_criterion_3_small_sample_retention():
    report = run_study(
        StudyConfig(n=10, n1=25, n2=1000, rho=(0.5, 0.2, 0.2), p=0.0,
                    n_runs=200, alpha0=0.05, seed=301),
        workers=WORKERS,
    )
    retained = report.mean_retained
    ok = abs(retained - 23.2) <= 0.5
    check(
        "criterion 3 (small-sample retention)",
        ok,
        f"mean retained {retained:.2f} of 25 (expect 23.2+-0.5)",
    )


def test_criterion_4_independence_bound():
    limit = 1.0 - math.exp(-0.05)
    cells = []
    for n1 in (25, 100, 500, 2000):
        report = run_independent_study(
            IndependentStudyConfig(n1=n1, n2=1000, n_runs=500, alpha0=0.05, seed=401),
            workers=WORKERS,
        )
        cells.append((n1, report.aggregates.fdr.mean, report.aggregates.fdr.se))

    below = all(mean <= limit + 2.0 * se for _, mean, se in cells)
    trend = all(
        b_mean >= a_mean - 2.0 * math.hypot(a_se, b_se)
        for (_, a_mean, a_se), (_, b_mean, b_se) in zip(cells, cells[1:])
    )
    detail = ", ".join(f"N1={n1}: {mean:.4f} (se {se:.4f})" for n1, mean, se in cells)
    check(
        "criterion 4 (independence bound)",
        below and trend,
        f"{detail}; limit {limit:.5f} + 2se; trend non-decreasing within noise",
    )


def test_criterion_5_null_statistic_is_binomial():
    cfg = IndependentStudyConfig(n1=25, n2=50, seed=501)
    # population cut-off and level of the generating normals
    t_true = (cfg.mu_within * cfg.sigma_between + cfg.mu_between * cfg.sigma_within) / (
        cfg.sigma_within + cfg.sigma_between
    )
    tau_true = norm.cdf(
        (cfg.mu_between - cfg.mu_within) / (cfg.sigma_within + cfg.sigma_between)
    )
    labeling = ClassLabeling(labels=("C1",) * cfg.n1 + ("C2",) * cfg.n2)
    n_trials = cfg.n1 - 1

    rng_root = np.random.SeedSequence(20259)
    draws = []
    for child in rng_root.spawn(2000):
        d = generate_independent_distances(cfg, np.random.default_rng(child))
        within, between = build_partitioned_view(d, labeling, "C1")
        g_cdfs, _ = per_instance_cdfs(within, between)
        draws.append(g_cdfs[0].count_leq(t_true))
    observed = np.bincount(np.asarray(draws), minlength=n_trials + 1)
    expected = binom.pmf(np.arange(n_trials + 1), n_trials, tau_true) * len(draws)

    # pool adjacent bins until every expected count reaches 5
    obs_pooled, exp_pooled = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5.0:
            obs_pooled.append(acc_o)
            exp_pooled.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0:
        obs_pooled[-1] += acc_o
        exp_pooled[-1] += acc_e
    stat, pvalue = chisquare(obs_pooled, exp_pooled)
    ok = pvalue > 0.01
    check(
        "criterion 5 (null statistic is binomial)",
        ok,
        f"chi2={stat:.2f} over {len(obs_pooled)} bins, p={pvalue:.4f} (>0.01), "
        f"tau={tau_true:.4f}, B=2000",
    )


def test_criterion_6_type2_bound_exhaustive_grid():
    alphas = (0.05 / 25, 0.05 / 500, 0.002, 0.01)
    violations = 0
    cases = 0
    for n_trials in range(4, 201):
        for alpha in alphas:
            alpha_exact = Fraction(alpha)
            tau_star = tau_star_bound(n_trials, alpha)
            tau = tau_star + 0.001
            while tau <= 0.999:
                a = critical_value(n_trials, tau, alpha)
                assert a is not None and 2 * a >= n_trials
                beta = 1 - binomial_cdf_exact(a - 1, n_trials, Fraction(1) - Fraction(tau))
                cases += 1
                if beta > alpha_exact:
                    violations += 1
                tau += 0.01
    ok = violations == 0
    check(
        "criterion 6 (exact type-II bound on the full grid)",
        ok,
        f"{cases} (n_trials, alpha, tau) cases with exact rational sums, "
        f"{violations} violations",
    )


def _oracle_cutoff_scan(g_vals, f_vals):
    """Pure-Python rational-count scan over the merged support."""
    g_sorted = sorted(g_vals)
    f_sorted = sorted(f_vals)
    mg, mf = len(g_sorted), len(f_sorted)

    def psi(t):
        below = sum(1 for v in f_sorted if v <= t)
        q = Fraction(mf - below, mf)
        if q <= 0:
            return g_sorted[0]
        for idx, val in enumerate(g_sorted):
            if Fraction(idx + 1, mg) >= q:
                return val
        return g_sorted[-1]

    for t in sorted(set(g_sorted) | set(f_sorted)):
        if psi(t) <= t:
            return t, psi
    raise AssertionError("oracle found no cut-off")


def test_criterion_7_estimator_identities():
    rng = np.random.default_rng(701)
    grid_points = 10_000
    exact_matches = 0
    for _ in range(1000):
        n1 = int(rng.integers(3, 9))
        n_out = int(rng.integers(2, 13))
        if rng.random() < 0.5:  # discretized draws force ties
            within_vals = rng.integers(1, 10, size=(n1, n1)) / 10.0
            between = rng.integers(1, 14, size=(n1, n_out)) / 10.0
        else:
            within_vals = rng.uniform(0.05, 0.9, size=(n1, n1))
            between = rng.uniform(0.1, 1.3, size=(n1, n_out))
        upper = np.triu(within_vals, k=1)
        within = upper + upper.T

        g_cdfs, f_cdfs = per_instance_cdfs(within, between)
        g_bar, f_bar = pool_cdfs(g_cdfs), pool_cdfs(f_cdfs)
        est = solve_t_star(g_bar, f_bar)

        # identity between the pooled level and the mean per-instance count
        z = np.array([c.count_leq(est.t_star_hat) for c in g_cdfs])
        lhs = Fraction(int(g_bar.count_leq(est.t_star_hat)), n1 * (n1 - 1))
        rhs = Fraction(int(z.sum()), n1 * (n1 - 1))
        assert lhs == rhs
        assert est.tau_hat == g_bar.evaluate(est.t_star_hat)

        # support-scan oracle reproduces the cut-off exactly
        t_oracle, psi = _oracle_cutoff_scan(g_bar.values, f_bar.values)
        assert est.t_star_hat == t_oracle
        exact_matches += 1

        # brute-force grid localization brackets the cut-off within one step
        all_vals = np.concatenate([g_bar.values, f_bar.values])
        grid = np.linspace(all_vals.min(), all_vals.max(), grid_points)
        lo, hi = 0, grid_points - 1
        assert psi(grid[hi]) <= grid[hi]
        if psi(grid[0]) <= grid[0]:
            first = 0
        else:
            while hi - lo > 1:  # psi(t) - t is decreasing, so bisection is exact
                mid = (lo + hi) // 2
                if psi(grid[mid]) <= grid[mid]:
                    hi = mid
                else:
                    lo = mid
            first = hi
        assert grid[first] >= est.t_star_hat
        if first > 0:
            assert grid[first - 1] < est.t_star_hat
    check(
        "criterion 7 (estimator identities)",
        exact_matches == 1000,
        f"{exact_matches}/1000 instances: count identity exact, support scan "
        f"matches oracle, cut-off bracketed on a {grid_points}-point grid",
    )


def test_criterion_8_byte_identical_outputs(tmp_path):
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(
        '{"n": 12, "n1": 8, "n2": 15, "rho": [0.5, 0.2, 0.2], '
        '"p": 0.2, "n_runs": 5, "seed": 31415}',
        encoding="utf-8",
    )
    outputs = []
    for tag in ("a", "b"):
        csv = tmp_path / f"metrics_{tag}.csv"
        out = tmp_path / f"report_{tag}.json"
        code = main(
            ["simulate", "--config", str(cfg_path), "--csv", str(csv),
             "--out", str(out), "--deterministic", "--threads", "1"]
        )
        assert code == 0
        outputs.append((csv.read_bytes(), out.read_bytes()))
    ok = outputs[0] == outputs[1]
    check(
        "criterion 8 (seeded determinism)",
        ok,
        "repeated simulate invocations produced byte-identical CSV and JSON",
    )


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])
