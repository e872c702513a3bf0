"""Merging of study report JSONs into table-shaped CSVs and figures.

Rows are keyed by the study cell (sample count, class sizes, correlations,
mislabeled proportion); figures plot each aggregate metric against the
sample count with one line per cell group, rendered to files next to the
delimited output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .io import load_report, write_csv

_METRIC_FIELDS = ("sensitivity", "specificity", "fdr", "for_rate", "pct_delta")

SUMMARY_FIELDS = (
    "kind",
    "n",
    "n1",
    "n2",
    "rho1",
    "rho12",
    "rho2",
    "p",
    "n_runs",
    "alpha0",
    "metric",
    "seed",
    "mean_retained",
    "n_completed",
    "n_excluded",
    "sensitivity_mean",
    "sensitivity_se",
    "specificity_mean",
    "specificity_se",
    "fdr_mean",
    "fdr_se",
    "for_rate_mean",
    "for_rate_se",
    "pct_delta_mean",
    "pct_delta_se",
)


def load_reports(paths: Sequence[str | Path]) -> list[dict]:
    return [load_report(p) for p in paths]


def _sort_key(row: dict) -> tuple:
    def key(v):
        return (v is None, v)

    return tuple(key(row.get(k)) for k in ("kind", "p", "n1", "n"))


def summary_rows(reports: Iterable[dict]) -> list[dict]:
    """One flat row per report: resolved config plus aggregate statistics."""
    rows = []
    for rep in reports:
        cfg = rep["config"]
        rho = cfg.get("rho")
        row = {
            "kind": rep["kind"],
            "n": cfg.get("n"),
            "n1": cfg.get("n1"),
            "n2": cfg.get("n2"),
            "rho1": rho[0] if rho else None,
            "rho12": rho[1] if rho else None,
            "rho2": rho[2] if rho else None,
            "p": cfg.get("p"),
            "n_runs": cfg.get("n_runs"),
            "alpha0": cfg.get("alpha0"),
            "metric": cfg.get("metric"),
            "seed": cfg.get("seed"),
            "mean_retained": rep.get("mean_retained"),
            "n_completed": rep.get("n_completed"),
            "n_excluded": rep.get("n_excluded"),
        }
        for name in _METRIC_FIELDS:
            summary = rep["aggregates"][name]
            row[f"{name}_mean"] = summary["mean"]
            row[f"{name}_se"] = summary["se"]
        rows.append(row)
    rows.sort(key=_sort_key)
    return rows


def table_p0_rows(reports: Iterable[dict]) -> list[dict]:
    """Long-format no-mislabeling table: one {n, N1, FDR, Spec} row per cell."""
    rows = [
        {
            "n": rep["config"]["n"],
            "n1": rep["config"]["n1"],
            "fdr": rep["aggregates"]["fdr"]["mean"],
            "specificity": rep["aggregates"]["specificity"]["mean"],
        }
        for rep in reports
        if rep["kind"] == "study" and rep["config"].get("p") == 0
    ]
    rows.sort(key=lambda r: (r["n1"], r["n"]))
    return rows


def figure_rows(reports: Iterable[dict], metric: str) -> list[dict]:
    """Data series for one metric-vs-sample-count figure."""
    rows = []
    for rep in reports:
        if rep["kind"] != "study":
            continue
        cfg = rep["config"]
        summary = rep["aggregates"][metric]
        if summary["mean"] is None:
            continue
        rows.append(
            {
                "n": cfg["n"],
                "n1": cfg["n1"],
                "p": cfg["p"],
                "rho2": cfg["rho"][2],
                "value": summary["mean"],
                "se": summary["se"],
            }
        )
    rows.sort(key=lambda r: (r["n1"], r["p"], r["rho2"], r["n"]))
    return rows


def write_report_tables(reports: Sequence[dict], outdir: str | Path) -> list[Path]:
    """Write the merged summary, the p=0 table and per-figure data CSVs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    summary_path = outdir / "summary.csv"
    write_csv(summary_path, SUMMARY_FIELDS, summary_rows(reports))
    written.append(summary_path)

    p0 = table_p0_rows(reports)
    if p0:
        path = outdir / "table_p0.csv"
        write_csv(path, ("n", "n1", "fdr", "specificity"), p0)
        written.append(path)

    for metric in ("fdr", "specificity", "for_rate"):
        rows = figure_rows(reports, metric)
        if rows:
            path = outdir / f"fig_{metric}_vs_n.csv"
            write_csv(path, ("n", "n1", "p", "rho2", "value", "se"), rows)
            written.append(path)
    return written


def _group_series(rows: list[dict]) -> dict[tuple, tuple[list, list]]:
    series: dict[tuple, tuple[list, list]] = {}
    for row in rows:
        key = (row["n1"], row["p"], row["rho2"])
        xs, ys = series.setdefault(key, ([], []))
        xs.append(row["n"])
        ys.append(row["value"])
    return series


def render_figures(reports: Sequence[dict], outdir: str | Path) -> list[Path]:
    """Render metric-vs-n figures to PNG files alongside the CSVs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    titles = {
        "fdr": "False discovery rate vs samples per instance",
        "specificity": "Specificity vs samples per instance",
        "for_rate": "False omission rate vs samples per instance",
    }
    written = []
    for metric, title in titles.items():
        rows = figure_rows(reports, metric)
        if not rows:
            continue
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for (n1, p, rho2), (xs, ys) in sorted(_group_series(rows).items()):
            ax.plot(xs, ys, marker="o", label=f"N1={n1}, p={p}, rho2={rho2}")
        ax.set_xscale("log")
        ax.set_xlabel("samples per instance (n)")
        ax.set_ylabel(metric.replace("_", " "))
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = outdir / f"fig_{metric}_vs_n.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    indep = [
        (rep["config"]["n1"], rep["aggregates"]["fdr"]["mean"])
        for rep in reports
        if rep["kind"] == "independent-study"
    ]
    if indep:
        indep.sort()
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        ax.plot([x for x, _ in indep], [y for _, y in indep], marker="o", color="black")
        ax.set_xscale("log")
        ax.set_xlabel("class size (N1)")
        ax.set_ylabel("fdr")
        ax.set_title("False discovery rate vs class size (independent draws)")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = outdir / "fig_fdr_vs_n1_independent.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
