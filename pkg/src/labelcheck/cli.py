"""Command-line entry point: validate labeled data, run studies, merge reports."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .core import (
    CsvFormatError,
    DegenerateInputError,
    LabelCheckError,
    TestConfig,
    subset_instances,
)
from .distance import METRICS, build_distance_matrix, degenerate_instances
from .io import (
    load_report,
    read_distance_csv,
    read_intensity_csv,
    study_report_dict,
    validation_report_dict,
    write_ecdf_csv,
    write_json,
    write_run_metrics_csv,
)
from .report import render_figures, write_report_tables
from .simulation import (
    IndependentStudyConfig,
    StudyConfig,
    run_independent_study,
    run_study,
)
from .testing import validate_all

log = logging.getLogger("labelcheck")


def _config_from_dict(cls, data: dict):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    if isinstance(data.get("rho"), list):
        data = dict(data, rho=tuple(data["rho"]))
    return cls(**data)


def _load_config(path: str, cls):
    with open(path, encoding="utf-8") as fh:
        return _config_from_dict(cls, json.load(fh))


def _print_class_summary(results, errors) -> None:
    header = f"{'class':<16} {'N1':>6} {'tau_hat':>8} {'t_star_hat':>11} {'a_alpha':>7} {'removed':>7}  {'lemma2':<6} status"
    print(header)
    print("-" * len(header))
    for res in results:
        a = "-" if res.a_alpha is None else str(res.a_alpha)
        print(
            f"{res.class_id:<16} {res.class_size:>6} {res.tau_hat:>8.4f} "
            f"{res.t_star_hat:>11.4f} {a:>7} {res.r_count:>7}  "
            f"{str(res.lemma2_satisfied).lower():<6} {res.status}"
        )
    for class_id, message in errors.items():
        print(f"{class_id:<16} skipped: {message}")


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = TestConfig(alpha0=args.alpha0, metric=args.metric)
    dropped: list[str] = []
    if args.input:
        data, labeling = read_intensity_csv(args.input)
        if cfg.metric == "correlation":
            bad = degenerate_instances(data)
            if bad and not args.drop_degenerate:
                raise DegenerateInputError(
                    "zero-variance instance(s) under the correlation metric: "
                    + ", ".join(bad) + " (use --drop-degenerate to exclude them)",
                    instance_ids=bad,
                )
            if bad:
                log.warning("excluding %d zero-variance instance(s): %s", len(bad), ", ".join(bad))
                bad_set = set(bad)
                keep = [i for i, iid in enumerate(data.instance_ids) if iid not in bad_set]
                data, labeling = subset_instances(data, labeling, keep)
                dropped = bad
        distances = build_distance_matrix(data, cfg.metric)
    else:
        distances, labeling = read_distance_csv(args.distances)

    validation = validate_all(distances, labeling, cfg, workers=args.threads)
    _print_class_summary(validation.results, validation.errors)
    if args.output:
        write_json(
            validation_report_dict(
                validation, cfg, dropped_instances=dropped, deterministic=args.deterministic
            ),
            args.output,
        )
        log.info("wrote report to %s", args.output)
    if args.dump_ecdf:
        outdir = Path(args.dump_ecdf)
        outdir.mkdir(parents=True, exist_ok=True)
        for res in validation.results:
            write_ecdf_csv(res, outdir / f"ecdf_{res.class_id}.csv")
    return 0


def _print_study_summary(report) -> None:
    agg = report.aggregates
    parts = [f"runs={report.n_completed}"]
    if report.n_excluded:
        parts.append(f"excluded={report.n_excluded}")
    for name in ("fdr", "specificity", "sensitivity", "for_rate"):
        summary = getattr(agg, name)
        if summary.mean is not None:
            parts.append(f"{name}={summary.mean:.4f}")
    parts.append(f"mean_retained={report.mean_retained:.2f}")
    print("  ".join(parts))


def _run_simulation(args: argparse.Namespace, cls, runner) -> int:
    cfg = _load_config(args.config, cls)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    report = runner(cfg, workers=args.threads)
    _print_study_summary(report)
    if args.out:
        write_json(study_report_dict(report, deterministic=args.deterministic), args.out)
        log.info("wrote report to %s", args.out)
    if args.csv:
        write_run_metrics_csv(report, args.csv)
        log.info("wrote per-run metrics to %s", args.csv)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    return _run_simulation(args, StudyConfig, run_study)


def cmd_simulate_independent(args: argparse.Namespace) -> int:
    return _run_simulation(args, IndependentStudyConfig, run_independent_study)


def cmd_report(args: argparse.Namespace) -> int:
    reports = [load_report(p) for p in args.reports]
    written = write_report_tables(reports, args.outdir)
    if args.figures:
        written += render_figures(reports, args.outdir)
    for path in written:
        print(path)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="worker count for parallel sections (default: available cores)",
    )
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="omit timestamps so identical inputs give byte-identical outputs",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="increase log verbosity"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelcheck",
        description="Detect mislabeled instances within classes from pairwise distances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="test every class of a labeled dataset")
    src = p_val.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="intensity CSV (id header, label header, sample rows)")
    src.add_argument("--distances", help="precomputed distance CSV (same two header rows)")
    p_val.add_argument("--metric", choices=METRICS, default="correlation")
    p_val.add_argument("--alpha0", type=float, default=0.05, help="global error budget")
    p_val.add_argument("--output", help="write the JSON report here")
    p_val.add_argument(
        "--dump-ecdf", metavar="DIR", help="also dump per-class pooled ECDFs as CSV"
    )
    p_val.add_argument(
        "--drop-degenerate",
        action="store_true",
        help="exclude zero-variance instances instead of failing",
    )
    _add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_sim = sub.add_parser("simulate", help="run a replicated labeled-data study")
    p_sim.add_argument("--config", required=True, help="study config JSON")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--out", help="write the study report JSON here")
    p_sim.add_argument("--csv", help="write per-run metrics CSV here")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_ind = sub.add_parser(
        "simulate-independent",
        help="run a study on distance matrices with independent normal entries",
    )
    p_ind.add_argument("--config", required=True, help="independent study config JSON")
    p_ind.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_ind.add_argument("--out", help="write the study report JSON here")
    p_ind.add_argument("--csv", help="write per-run metrics CSV here")
    _add_common(p_ind)
    p_ind.set_defaults(func=cmd_simulate_independent)

    p_rep = sub.add_parser("report", help="merge study reports into tables and figures")
    p_rep.add_argument("reports", nargs="+", help="study report JSON files")
    p_rep.add_argument("--outdir", default=".", help="directory for CSVs and figures")
    p_rep.add_argument(
        "--no-figures", dest="figures", action="store_false", help="skip figure rendering"
    )
    _add_common(p_rep)
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CsvFormatError, LabelCheckError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
