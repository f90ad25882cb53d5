"""Command-line entry point: ``lccd <stage> [options]``.

Exit codes: 0 on success, 2 for configuration errors, 3 for data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from lccd import pipeline
from lccd.config import PipelineConfig
from lccd.errors import DataError, InvalidConfigError, InvalidInputError

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lccd", description="Color contrast descriptor pipeline.",
        epilog="exit codes: 0 success, 2 configuration error, 3 data error")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifest=True):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out-dir", help="directory holding stage artifacts")
        p.add_argument("--seed", type=int, help="override the configured seed")
        if manifest:
            p.add_argument("--manifest", help="CSV: image_path,label,split[,partition]")

    p = sub.add_parser("extract", help="compute spatial and channel descriptors")
    common(p)
    p.add_argument("--strict", action="store_true", help="fail if any image is skipped")

    for name, text in (("fit", "fit PCA and GMM models on the train split"),
                       ("encode", "encode every image with the fitted models")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--external", action="append", default=[], metavar="FILE",
                       help="extra LCCDDSC1 descriptor stream to fuse (repeatable)")

    p = sub.add_parser("train-eval", help="train linear classifiers and write reports")
    common(p)

    p = sub.add_parser("report", help="print a report and write CSV summaries")
    common(p, manifest=False)
    p.add_argument("report", nargs="?", help="report.json (default: <out-dir>/report.json)")
    return parser


def _config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "manifest", None):
        changes["manifest"] = args.manifest
    if args.out_dir:
        changes["out_dir"] = args.out_dir
    return config.replace(**changes) if changes else config


def _require(value, flag):
    if not value:
        raise InvalidConfigError(f"{flag} is required (flag or config entry)")
    return value


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _config(args)
        out_dir = Path(_require(config.out_dir, "--out-dir"))
        if args.command == "report":
            report = Path(args.report) if args.report else out_dir / "report.json"
            sys.stdout.write(pipeline.cmd_report(report, out_dir))
            return EXIT_OK
        manifest = _require(config.manifest, "--manifest")
        if args.command == "extract":
            summary = pipeline.cmd_extract(config, manifest, out_dir, strict=args.strict)
            print(f"extracted {len(summary['images'])} image(s), "
                  f"skipped {len(summary['skipped'])}")
        elif args.command == "fit":
            for path in pipeline.cmd_fit(config, manifest, out_dir, args.external):
                print(path)
        elif args.command == "encode":
            for path in pipeline.cmd_encode(config, manifest, out_dir, args.external):
                print(path)
        elif args.command == "train-eval":
            s = pipeline.cmd_train_eval(config, manifest, out_dir)["summary"]
            print(f"accuracy {100 * s['accuracy_mean']:.2f}% +- {100 * s['accuracy_std']:.2f} "
                  f"over {s['partitions']} partition(s)")
    except InvalidConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, InvalidInputError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
