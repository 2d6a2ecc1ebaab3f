"""Command-line interface.

    featx extract --data DIR --output F.fmx [--layer 0] [--backbone NAME] ...
    featx logits  --data DIR --output F.fmx [--backbone NAME] ...

Exit codes follow the conventions of the scoring tools this feeds: 0 on
success, 2 for usage and validation problems, 1 for runtime failures.
Every failure prints one stderr line starting with "error:".
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backbones import available_backbones, layer_module_name
from .errors import ExtractorError
from .extract import ExtractionRecipe, extract, extract_logits


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse hook
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _validate(args: argparse.Namespace, needs_layer: bool) -> None:
    if needs_layer:
        try:
            layer_module_name(args.backbone, args.layer)
        except ExtractorError as exc:
            raise _UsageError(str(exc)) from exc
    root = Path(args.data) / args.split if args.split else Path(args.data)
    if not root.is_dir():
        raise _UsageError(f"dataset directory not found: {root}")
    parent = Path(args.output).resolve().parent
    if not parent.is_dir():
        raise _UsageError(f"output directory not found: {parent}")
    if str(args.weights) != "none" and not Path(args.weights).is_file():
        raise _UsageError(f"weights file not found: {args.weights}")


def _recipe(args: argparse.Namespace) -> ExtractionRecipe:
    return ExtractionRecipe(
        data_dir=args.data,
        output=args.output,
        backbone=args.backbone,
        layer=getattr(args, "layer", 0),
        split=args.split,
        batch_size=args.batch_size,
        image_size=args.image_size,
        weights=args.weights,
        expected_dim=getattr(args, "expected_dim", None),
    )


def cmd_extract(args: argparse.Namespace) -> int:
    _validate(args, needs_layer=True)
    features, labels = extract(_recipe(args))
    kind = "labeled" if labels is not None else "unlabeled"
    print(
        f"extracted {features.shape[0]} rows x {features.shape[1]} features "
        f"({kind}) from {args.backbone} layer {args.layer}"
    )
    print(f"wrote {args.output}")
    return 0


def cmd_logits(args: argparse.Namespace) -> int:
    _validate(args, needs_layer=False)
    features, labels = extract_logits(_recipe(args))
    kind = "labeled" if labels is not None else "unlabeled"
    print(f"extracted {features.shape[0]} rows x {features.shape[1]} logits ({kind})")
    print(f"wrote {args.output}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="dataset directory")
    parser.add_argument("--output", required=True, help="FMX file to write")
    parser.add_argument(
        "--backbone", default="resnet18", choices=available_backbones()
    )
    parser.add_argument("--split", default=None, help="subdirectory of --data to use")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--image-size", type=int, default=64)
    parser.add_argument(
        "--weights", default="none",
        help='"none" for a seeded random init, or a state-dict file',
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="featx", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p_extract = subparsers.add_parser("extract", help="pooled intermediate-layer features")
    _add_common(p_extract)
    p_extract.add_argument("--layer", type=int, default=0, help="labeled layer selector")
    p_extract.add_argument(
        "--expected-dim", type=int, default=None,
        help="fail unless the pooled width matches",
    )
    p_extract.set_defaults(handler=cmd_extract)

    p_logits = subparsers.add_parser("logits", help="pre-softmax classifier outputs")
    _add_common(p_logits)
    p_logits.set_defaults(handler=cmd_logits)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
