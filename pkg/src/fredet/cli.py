"""Command-line entry point: fit models on FMX feature files, score test
files, evaluate score CSVs, inspect matrix rank, and run the
training-fraction robustness sweep.

Exit codes: 0 success, 2 usage or validation failure, 1 runtime failure.
Every failure prints a single stderr line starting with "error:". All
output files and stdout are byte-reproducible for identical args and
inputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bank import (
    BankConfig,
    METHOD_KPCA,
    METHOD_MAHALANOBIS,
    METHOD_PCA,
    MODE_GLOBAL,
    MODE_PER_CLASS,
    VARIANT_PREIMAGE,
    VARIANT_RKHS,
    fit_bank,
    load_artifact,
    save_bank,
    save_baseline,
    score_bank,
)
from .baselines import MahalanobisModel, fit_mahalanobis, mahalanobis_score
from .errors import DimensionMismatchError, FredetError, FitError, MissingLabelsError
from .evaluation import (
    DEFAULT_SWEEP_FRACTIONS,
    auroc,
    robustness_sweep,
    write_roc_csv,
    write_sweep_csv,
)
from .features import ScoreVector, read_features, read_scores, write_scores
from .kernel import retained_mass
from .linear import DEFAULT_VARIANCE_RETENTION, fit_pca, numerical_rank


class _UsageError(Exception):
    """Bad arguments or missing files, caught before any computation."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose failures match the CLI error contract."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(2)


def _require_file(path: str) -> None:
    if not Path(path).is_file():
        raise _UsageError(f"input file not found: {path}")


def _require_output_dir(path: str) -> None:
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise _UsageError(f"output directory not found: {parent}")


def _check_unit_interval(flag: str, value: float) -> None:
    if not 0.0 < value <= 1.0:
        raise _UsageError(f"{flag} must be in (0, 1], got {value!r}")


def _check_gamma(gamma: float | None) -> None:
    if gamma is not None and gamma <= 0.0:
        raise _UsageError(f"--gamma must be positive, got {gamma!r}")


def _parse_fractions(text: str | None) -> tuple[float, ...]:
    if text is None:
        return DEFAULT_SWEEP_FRACTIONS
    try:
        fractions = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise _UsageError(f"--fractions must be comma-separated floats, got {text!r}")
    if not fractions or fractions[0] != 1.0:
        raise _UsageError("--fractions must start with 1.0")
    for f in fractions:
        _check_unit_interval("--fractions", f)
    if any(b >= a for a, b in zip(fractions, fractions[1:])):
        raise _UsageError("--fractions must decrease strictly")
    return fractions


def cmd_fit(args: argparse.Namespace) -> int:
    _check_unit_interval("--variance", args.variance)
    _check_gamma(args.gamma)
    _require_file(args.input)
    _require_output_dir(args.output)

    train = read_features(args.input)
    if train.labels is None:
        if args.mode == MODE_PER_CLASS:
            raise _UsageError("--mode per-class requires a labeled feature file")
        if args.method == METHOD_MAHALANOBIS:
            raise _UsageError("--method mahalanobis requires a labeled feature file")

    if args.method == METHOD_MAHALANOBIS:
        model = fit_mahalanobis(train)
        save_baseline(model, args.output)
        print(
            f"fit method=mahalanobis classes={len(model.class_ids)} "
            f"ridge={model.ridge!r}"
        )
        print(f"wrote {args.output}")
        return 0

    config = BankConfig(
        variance_retention=args.variance,
        gamma=args.gamma,
        kfre_variant=args.kfre_variant,
    )
    bank = fit_bank(train, args.mode, args.method, config)
    print(f"fit method={args.method} mode={args.mode} variance={args.variance!r}")
    for c in bank.class_ids():
        model = bank.models[c]
        label = "global" if args.mode == MODE_GLOBAL else f"class {c}"
        if args.method == METHOD_PCA:
            kept = float(model.explained_variance_ratio.sum())
            extra = ""
        else:
            kept = retained_mass(model)
            extra = f" gamma={model.gamma!r}"
        print(f"{label}: m={model.n_components} retained_variance={kept!r}{extra}")
    save_bank(bank, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    _require_file(args.model)
    _require_file(args.input)
    _require_output_dir(args.output)

    artifact = load_artifact(args.model)
    test = read_features(args.input)
    if isinstance(artifact, MahalanobisModel):
        if args.kfre_variant is not None:
            raise _UsageError("--kfre-variant applies only to kernel banks")
        values = np.atleast_1d(
            mahalanobis_score(artifact, test.data.astype(np.float64))
        )
        scores = ScoreVector(scores=values, tag="mahalanobis")
    else:
        if args.kfre_variant is not None and artifact.method != METHOD_KPCA:
            raise _UsageError("--kfre-variant applies only to kernel banks")
        scores = score_bank(artifact, test, variant=args.kfre_variant)
    write_scores(scores, args.output)
    print(f"scored {len(scores)} rows method={scores.tag}")
    print(f"wrote {args.output}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    _require_file(args.id)
    _require_file(args.ood)
    if args.roc_out is not None:
        _require_output_dir(args.roc_out)

    report = auroc(read_scores(args.id), read_scores(args.ood))
    print(f"auroc={report.auroc!r} n_id={report.n_id} n_ood={report.n_ood}")
    if args.roc_out is not None:
        write_roc_csv(report, args.roc_out)
        print(f"wrote {args.roc_out}")
    return 0


def cmd_rank(args: argparse.Namespace) -> int:
    _check_unit_interval("--variance", args.variance)
    _require_file(args.input)

    matrix = read_features(args.input)
    rank = numerical_rank(matrix)
    try:
        m = fit_pca(matrix, args.variance).n_components
    except FitError:
        m = 0  # constant or single-row data: no positive-variance directions
    threshold = f"{args.variance * 100:g}%"
    print(f"{'Dimension':<16}{matrix.n_features}")
    print(f"{'Rank':<16}{rank}")
    print(f"{f'With {threshold} PCA':<16}{m}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    fractions = _parse_fractions(args.fractions)
    _check_unit_interval("--variance", args.variance)
    _check_gamma(args.gamma)
    for path in (args.train, args.id, args.ood):
        _require_file(path)
    _require_output_dir(args.output)

    train = read_features(args.train)
    if args.mode == MODE_PER_CLASS and train.labels is None:
        raise _UsageError("--mode per-class requires a labeled feature file")
    config = BankConfig(
        variance_retention=args.variance,
        gamma=args.gamma,
        kfre_variant=args.kfre_variant or VARIANT_PREIMAGE,
    )
    report = robustness_sweep(
        train,
        read_features(args.id),
        read_features(args.ood),
        fractions,
        seed=args.seed,
        mode=args.mode,
        method=args.method,
        config=config,
    )
    write_sweep_csv(report, args.output)
    for f, a in zip(report.fractions, report.aurocs):
        print(f"fraction={f!r} auroc={a!r}")
    print(f"wrote {args.output}")
    return 0


def _add_model_flags(sub: argparse.ArgumentParser, methods: tuple[str, ...]) -> None:
    sub.add_argument(
        "--mode",
        choices=(MODE_GLOBAL, MODE_PER_CLASS),
        default=MODE_GLOBAL,
        help="one model for all data, or one per class (default: %(default)s)",
    )
    sub.add_argument(
        "--method",
        choices=methods,
        default=METHOD_PCA,
        help="model family (default: %(default)s)",
    )
    sub.add_argument(
        "--variance",
        type=float,
        default=DEFAULT_VARIANCE_RETENTION,
        metavar="FRACTION",
        help="variance retention in (0, 1] (default: %(default)s)",
    )
    sub.add_argument(
        "--gamma",
        type=float,
        default=None,
        help="RBF kernel width; median heuristic when omitted",
    )


def _add_variant_flag(sub: argparse.ArgumentParser, default: str | None) -> None:
    sub.add_argument(
        "--kfre-variant",
        choices=(VARIANT_PREIMAGE, VARIANT_RKHS),
        default=default,
        help="kernel reconstruction-error flavor",
    )


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="fredet",
        description="Out-of-distribution detection by feature reconstruction error.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit a model bank and write a FREB file")
    fit.add_argument("--input", required=True, help="training FMX feature file")
    fit.add_argument("--output", required=True, help="destination FREB model file")
    _add_model_flags(fit, (METHOD_PCA, METHOD_KPCA, METHOD_MAHALANOBIS))
    _add_variant_flag(fit, VARIANT_PREIMAGE)
    fit.set_defaults(handler=cmd_fit)

    score = sub.add_parser("score", help="score an FMX file with a fitted model")
    score.add_argument("--model", required=True, help="FREB model file")
    score.add_argument("--input", required=True, help="FMX feature file to score")
    score.add_argument("--output", required=True, help="destination score CSV")
    _add_variant_flag(score, None)
    score.set_defaults(handler=cmd_score)

    ev = sub.add_parser("eval", help="AUROC of an OOD score CSV against an ID one")
    ev.add_argument("--id", required=True, help="in-distribution score CSV")
    ev.add_argument("--ood", required=True, help="out-of-distribution score CSV")
    ev.add_argument("--roc-out", default=None, help="optional ROC curve CSV")
    ev.set_defaults(handler=cmd_eval)

    rank = sub.add_parser("rank", help="numerical rank and PCA dimension of a file")
    rank.add_argument("--input", required=True, help="FMX feature file")
    rank.add_argument(
        "--variance",
        type=float,
        default=DEFAULT_VARIANCE_RETENTION,
        metavar="FRACTION",
        help="variance retention in (0, 1] (default: %(default)s)",
    )
    rank.set_defaults(handler=cmd_rank)

    sweep = sub.add_parser(
        "sweep", help="AUROC vs training fraction, refitting on subsamples"
    )
    sweep.add_argument("--train", required=True, help="training FMX feature file")
    sweep.add_argument("--id", required=True, help="in-distribution test FMX file")
    sweep.add_argument("--ood", required=True, help="out-of-distribution FMX file")
    sweep.add_argument("--output", required=True, help="destination fraction,auroc CSV")
    sweep.add_argument(
        "--fractions",
        default=None,
        help="comma-separated, 1.0 first, strictly decreasing "
        "(default: 1.0,0.8,0.6,0.4,0.2)",
    )
    sweep.add_argument(
        "--seed", type=int, default=0, help="subsampling seed (default: %(default)s)"
    )
    _add_model_flags(sweep, (METHOD_PCA, METHOD_KPCA))
    _add_variant_flag(sweep, None)
    sweep.set_defaults(handler=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return int(args.handler(args))
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, MissingLabelsError, DimensionMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FredetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
