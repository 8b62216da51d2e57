"""
Command-line entry point.

Usage:
    marginbv verify --loss logistic --suite all
    marginbv diagnose --synthetic two_gaussians:n=2000,sep=2 --loss logistic --models 50 --seed 42
    marginbv ensemble --members margins.csv --loss exponential --combiner centroid
    marginbv schema

Exit codes: 0 success, 1 failed check or identity outside tolerance,
2 usage or configuration error.
"""

import argparse
import csv
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import Settings
from .ensemble import (
    EnsembleSpec,
    additive_ambiguity,
    centroid_ambiguity,
    gradient_symmetric_ambiguity,
    label_free_ambiguity_gap,
    load_members_csv,
    margin_ambiguity,
)
from .errors import (
    CatalogueError,
    ConfigError,
    DecompositionInapplicableError,
    LinkDomainError,
    MarginBVError,
    ParameterError,
)
from .loss_zoo import LossDescriptor, classify_gradient_symmetry, even_odd_split, load_loss
from .risk_link import build_link_bundle
from .schemas.reports import DecompositionReport, LossEcho, Notice, Report, report_json_schema
from .utils.logging_config import get_logger, setup_logging
from .verification import SUITES, run_verification
from .workflows.diagnose_workflow import run_diagnose

logger = get_logger("cli")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

CONFIG_ERRORS = (CatalogueError, ConfigError, ParameterError, DecompositionInapplicableError)

PASS_MARK = "✓"
FAIL_MARK = "✗"
SKIP_MARK = "-"


class _CliUsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage errors with exit code 2 without raising SystemExit mid-run."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _CliUsageError(f"{self.prog}: error: {message}")


def build_parser(settings: Optional[Settings] = None) -> argparse.ArgumentParser:
    settings = settings or Settings()
    parser = _Parser(
        prog="marginbv",
        description="Bias-variance and ambiguity decompositions for margin losses.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=settings.log_level,
        help="Console log level (default: %(default)s)",
    )
    parser.add_argument("--log-file", action="store_true", help=f"Also log to a file under {settings.log_dir}/")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    verify = sub.add_parser("verify", help="Run the property suites for one loss")
    verify.add_argument("--loss", required=True, help="Loss spec, e.g. logistic or smooth_hinge:t=10")
    verify.add_argument(
        "--suite",
        action="append",
        choices=list(SUITES) + ["all"],
        help="Suite to run; repeatable (default: all)",
    )
    verify.add_argument("--tol", type=float, default=1e-9, help="Relative residual tolerance (default: %(default)g)")
    verify.add_argument("--seed", type=int, default=settings.seed)
    verify.add_argument("--out", help="Write the JSON report here")

    diagnose = sub.add_parser("diagnose", help="Bootstrap a linear learner and decompose its risk")
    source = diagnose.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", help="CSV with f1..fd,y[,p][,split] columns")
    source.add_argument("--synthetic", help="Synthetic spec, e.g. two_gaussians:n=2000,sep=2")
    diagnose.add_argument("--loss", required=True)
    diagnose.add_argument("--models", type=int, default=50, help="Bootstrap models (default: %(default)s)")
    diagnose.add_argument("--seed", type=int, default=settings.seed)
    diagnose.add_argument("--n-jobs", type=int, default=settings.n_jobs, help="Parallel training jobs")
    diagnose.add_argument("--learning-rate", type=float, help="Gradient step size")
    diagnose.add_argument("--iterations", type=int, help="Gradient iterations per model")
    diagnose.add_argument("--l2", type=float, dest="l2_penalty", help="L2 penalty on the weights")
    diagnose.add_argument("--init-scale", type=float, help="Std of random initial weights")
    diagnose.add_argument("--no-resample", action="store_true", help="Train every model on the full training split")
    diagnose.add_argument("--require-noise", action="store_true", help="Fail when the posterior is unknown")
    diagnose.add_argument("--per-point", action="store_true", help="Keep per-point series in the report")
    diagnose.add_argument("--per-point-csv", help="Write per-point series as a flat CSV")
    diagnose.add_argument("--timing", action="store_true", help="Include step timings in the report")
    diagnose.add_argument("--out", help="Write the JSON report here")

    ensemble = sub.add_parser("ensemble", help="Ambiguity decomposition of an ensemble of margins")
    ensemble.add_argument("--members", required=True, help="CSV with point_id,member_1..member_M,label[,p]")
    ensemble.add_argument("--loss", required=True)
    ensemble.add_argument("--combiner", choices=["mean", "additive", "centroid"], default="mean")
    ensemble.add_argument("--weights", help="Comma-separated member weights")
    ensemble.add_argument("--per-point", action="store_true")
    ensemble.add_argument("--per-point-csv", help="Write per-point series as a flat CSV")
    ensemble.add_argument("--out", help="Write the JSON report here")

    sub.add_parser("schema", help="Print the JSON schema of the report")
    return parser


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def loss_echo(spec: str, loss: LossDescriptor) -> LossEcho:
    return LossEcho(
        spec=spec,
        name=loss.name,
        params=dict(loss.params),
        gradient_symmetric_c=classify_gradient_symmetry(loss),
        odd_slope=even_odd_split(loss).odd_slope,
        tabulated=loss.tabulated_range is not None,
    )


def print_summary(report: Report, command: str) -> None:
    """One-screen table on stdout."""
    bar = "=" * 78
    print(bar)
    title = f"marginbv {command}"
    if report.loss is not None:
        title += f"  loss={report.loss.spec}"
        if report.loss.gradient_symmetric_c is not None:
            title += f"  c={report.loss.gradient_symmetric_c:g}"
        else:
            title += "  not gradient-symmetric"
    print(title)
    print(bar)

    for name, block in report.decompositions.items():
        mark = PASS_MARK if block.exact else FAIL_MARK
        print(f"  {mark}  {name:<30} risk={block.expected_risk:.6f}  rel.residual={block.relative_residual:.2e}")
        for component, value in block.components.items():
            print(f"       {component:<28} {value:.6f}")
        for extra, value in block.extras.items():
            print(f"       {extra:<28} {value:.6g}")

    for notice in report.notices:
        print(f"  {SKIP_MARK}  {notice.decomposition:<30} {notice.reason}")

    if report.checks:
        passed = sum(1 for c in report.checks if c.passed and not c.skipped)
        skipped = sum(1 for c in report.checks if c.skipped)
        for check in report.checks:
            if check.skipped:
                mark = SKIP_MARK
            else:
                mark = PASS_MARK if check.passed else FAIL_MARK
            measured = "" if check.measured is None else f"{check.measured:.3e}"
            print(f"  {mark}  {check.suite + '/' + check.name:<44} {measured}")
        print(f"  {passed} passed, {len(report.failed_checks)} failed, {skipped} skipped")

    for warning in report.warnings:
        print(f"  ! {warning}")
    print(bar)


def write_per_point_csv(decompositions: Dict[str, DecompositionReport], path: str) -> Path:
    """Flat CSV: one row per point, one column per ``<decomposition>.<series>``."""
    columns: Dict[str, List[float]] = {}
    for name, block in decompositions.items():
        for series, values in (block.per_point or {}).items():
            columns[f"{name}.{series}"] = values
    if not columns:
        raise ConfigError("no per-point series to write")
    count = max(len(v) for v in columns.values())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["point", *columns])
        for j in range(count):
            writer.writerow([j, *(repr(v[j]) if j < len(v) else "" for v in columns.values())])
    return path


def _emit(report: Report, command: str, out: Optional[str]) -> None:
    print_summary(report, command)
    if out:
        path = report.write(out)
        logger.info(f"Report written to {path}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_verify(args: argparse.Namespace, argv: List[str]) -> int:
    loss = load_loss(args.loss)
    checks = run_verification(loss, suites=args.suite or ["all"], tol=args.tol, seed=args.seed)
    echo = loss_echo(args.loss, loss)
    report = Report(
        tool_version=__version__,
        command=argv,
        loss=echo,
        checks=checks,
        summary={
            "gradient_symmetric": echo.gradient_symmetric_c is not None,
            "gradient_symmetric_c": echo.gradient_symmetric_c,
            "passed": sum(1 for c in checks if c.passed and not c.skipped),
            "failed": sum(1 for c in checks if not c.passed and not c.skipped),
            "skipped": sum(1 for c in checks if c.skipped),
        },
    )
    _emit(report, args.command, args.out)
    return EXIT_FAILED if report.failed_checks else EXIT_OK


def _train_options(args: argparse.Namespace) -> Dict[str, object]:
    options: Dict[str, object] = {}
    for key in ("learning_rate", "iterations", "l2_penalty", "init_scale"):
        value = getattr(args, key)
        if value is not None:
            options[key] = value
    if args.no_resample:
        options["resample"] = False
    return options


def cmd_diagnose(args: argparse.Namespace, argv: List[str]) -> int:
    started = time.perf_counter()
    state = run_diagnose(
        loss_spec=args.loss,
        data_path=args.data,
        synthetic_spec=args.synthetic,
        models=args.models,
        seed=args.seed,
        n_jobs=args.n_jobs,
        per_point=args.per_point or bool(args.per_point_csv),
        require_noise=args.require_noise,
        train_options=_train_options(args),
    )
    if state.get("config_error"):
        for error in state.get("errors", []):
            print(f"marginbv diagnose: {error}", file=sys.stderr)
        return EXIT_CONFIG

    loss = state.get("loss")
    timing = None
    if args.timing:
        timing = {**state.get("timing", {}), "total": time.perf_counter() - started}
    report = Report(
        tool_version=__version__,
        command=argv,
        loss=loss_echo(args.loss, loss) if loss is not None else None,
        decompositions=state.get("reports", {}),
        notices=state.get("notices", []),
        summary=state.get("summary", {}),
        warnings=state.get("warnings", []) + state.get("errors", []),
        timing=timing,
    )
    if args.per_point_csv:
        write_per_point_csv(report.decompositions, args.per_point_csv)
    _emit(report, args.command, args.out)

    if state.get("errors") or not all(block.exact for block in report.decompositions.values()):
        return EXIT_FAILED
    return EXIT_OK


def _parse_weights(text: Optional[str]) -> Optional[np.ndarray]:
    if not text:
        return None
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"weights must be comma-separated numbers, got '{text}'") from exc


def cmd_ensemble(args: argparse.Namespace, argv: List[str]) -> int:
    loss = load_loss(args.loss)
    table = load_members_csv(args.members)
    weights = _parse_weights(args.weights)
    c = classify_gradient_symmetry(loss)
    per_point = args.per_point or bool(args.per_point_csv)

    decompositions: Dict[str, DecompositionReport] = {}
    notices: List[Notice] = []
    summary: Dict[str, object] = {"combiner": args.combiner, "member_count": int(table.margins.shape[0])}

    if args.combiner == "mean":
        spec = EnsembleSpec(table.margins, weights, "arithmetic" if weights is None else "weighted")
        decompositions["margin_ambiguity"] = margin_ambiguity(loss, spec, table.labels, per_point=per_point)
        if c is not None:
            decompositions["gradient_symmetric_ambiguity"] = gradient_symmetric_ambiguity(
                loss, spec, table.labels, per_point=per_point, c=c
            )
        else:
            gap = label_free_ambiguity_gap(loss, spec, table.labels)
            notices.append(
                Notice(
                    decomposition="gradient_symmetric_ambiguity",
                    reason=f"{loss.spec} is not gradient-symmetric; label-free ambiguity differs by up to {gap:.6g}",
                )
            )
            summary["label_free_gap"] = gap
    elif args.combiner == "additive":
        spec = EnsembleSpec(table.margins, weights, "additive")
        decompositions["additive_ambiguity"] = additive_ambiguity(loss, spec, table.labels, per_point=per_point, c=c)
    else:
        spec = EnsembleSpec(table.margins, weights, "centroid")
        bundle = build_link_bundle(loss)
        block = centroid_ambiguity(
            loss, bundle, spec, targets=table.targets, labels=table.labels, per_point=per_point
        )
        decompositions["centroid_ambiguity"] = block
        summary["mean_deviation"] = block.extras["mean_deviation"]

    report = Report(
        tool_version=__version__,
        command=argv,
        loss=loss_echo(args.loss, loss),
        decompositions=decompositions,
        notices=notices,
        summary=summary,
        warnings=[w for block in decompositions.values() for w in block.warnings],
    )
    if args.per_point_csv:
        write_per_point_csv(decompositions, args.per_point_csv)
    _emit(report, args.command, args.out)
    return EXIT_OK if all(block.exact for block in decompositions.values()) else EXIT_FAILED


COMMANDS = {
    "verify": cmd_verify,
    "diagnose": cmd_diagnose,
    "ensemble": cmd_ensemble,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        settings = Settings.from_env()
    except ConfigError as e:
        print(f"marginbv: {e}", file=sys.stderr)
        return EXIT_CONFIG
    parser = build_parser(settings)
    try:
        args = parser.parse_args(argv)
    except _CliUsageError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG

    setup_logging(log_level=args.log_level, log_to_file=args.log_file, log_dir=settings.log_dir)

    if args.command == "schema":
        print(report_json_schema())
        return EXIT_OK

    try:
        return COMMANDS[args.command](args, argv)
    except DecompositionInapplicableError as e:
        print(f"marginbv {args.command}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CONFIG_ERRORS as e:
        print(f"marginbv {args.command}: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except LinkDomainError as e:
        print(f"marginbv {args.command}: {e}", file=sys.stderr)
        return EXIT_FAILED
    except MarginBVError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
