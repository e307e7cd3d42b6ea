"""Command line interface.

Subcommands::

    toonpairs build CONFIG [--seed N] [--jobs N] [--paper-exact] [--<section>-<field> VALUE ...]
    toonpairs validate CONFIG [--strict]
    toonpairs analyze DATASET_DIR [--report-dir DIR] [--bins N]
    toonpairs cartoonize IN OUT [--levels Q] [--edge-threshold T]
    toonpairs make-fixture DIR [--records N]

Exit status: 0 on success, 1 on runtime failure, 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import ALL_CHANNELS, distribution_report
from .backends import BackendSpec, stylize
from .config import SECTIONS, DatasetConfig
from .dataset import build_dataset, validate_inputs
from .errors import ConfigError, DecodeError, ToonPairsError
from .fixtures import make_fixture_corpus
from .imageio import read_image, write_png

logger = logging.getLogger("toonpairs")

# fields with no sensible flag form
_NO_FLAG = {("inputs", "records")}


def _parse_bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _flag_type(default):
    if isinstance(default, bool):
        return _parse_bool
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    if isinstance(default, list):
        return lambda s: [p.strip() for p in s.split(",") if p.strip()]
    return str


def _add_config_flags(parser):
    parser.add_argument("config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="global seed")
    parser.add_argument("--jobs", type=int, help="worker threads (default: logical cores)")
    parser.add_argument("--paper-exact", action="store_true", default=None,
                        help="hard masks, whole-image correction, no CutFace")
    parser.add_argument("--out", help="output directory (same as --output-dir)")
    group = parser.add_argument_group("config overrides")
    for section, klass in SECTIONS.items():
        defaults = klass()
        for f in dataclasses.fields(klass):
            if (section, f.name) in _NO_FLAG:
                continue
            flag = f"--{section}-{f.name.replace('_', '-')}"
            group.add_argument(flag, dest=f"cfg__{section}__{f.name}", type=_flag_type(getattr(defaults, f.name)),
                               metavar=f.name.upper())


def _load_config(parser, args) -> DatasetConfig:
    path = Path(args.config)
    if not path.is_file():
        parser.error(f"config file {path} not found")
    cfg = DatasetConfig.from_file(path)
    overrides: dict[str, dict] = {}
    for key, value in vars(args).items():
        if key.startswith("cfg__") and value is not None:
            _, section, name = key.split("__", 2)
            overrides.setdefault(section, {})[name] = value
    if args.out is not None:
        overrides.setdefault("output", {})["dir"] = str(Path(args.out).resolve())
    for section, changes in overrides.items():
        cfg = cfg.replace(section, **changes)
    top = {"seed": args.seed, "jobs": args.jobs, "paper_exact": args.paper_exact}
    top = {k: v for k, v in top.items() if v is not None}
    if top:
        cfg = cfg.replace(None, **top)
    return cfg


def build_parser():
    parser = argparse.ArgumentParser(prog="toonpairs", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build the paired dataset")
    _add_config_flags(p)

    p = sub.add_parser("validate", help="check inputs without writing anything")
    _add_config_flags(p)
    p.add_argument("--strict", action="store_true", help="exit 1 if any record is invalid")

    p = sub.add_parser("analyze", help="histograms and EMD report for a built dataset")
    p.add_argument("dataset", help="dataset directory containing manifest.json")
    p.add_argument("--report-dir", help="where to write the report (default: DATASET/report)")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--mask-corpus", help="directory of head masks to report coverage for")
    p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("cartoonize", help="run the built-in cartoon filter on one image")
    p.add_argument("input")
    p.add_argument("output")
    defaults = BackendSpec()
    p.add_argument("--levels", type=int, default=defaults.levels)
    p.add_argument("--edge-threshold", type=float, default=defaults.edge_threshold)
    p.add_argument("--smoothing-iterations", type=int, default=defaults.smoothing_iterations)
    p.add_argument("--smoothing-tolerance", type=float, default=defaults.smoothing_tolerance)

    p = sub.add_parser("make-fixture", help="write the synthetic fixture corpus")
    p.add_argument("directory")
    p.add_argument("--records", type=int, default=32)
    p.add_argument("--landscapes", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_build(parser, args):
    cfg = _load_config(parser, args)
    manifest = build_dataset(cfg)
    s = manifest["summary"]
    print(f"records={s['records']} composed={s['composed']} cutface={s['cutface']} skipped={s['skipped']}")
    print(f"manifest: {cfg.resolve(cfg.output.dir) / 'manifest.json'}")
    return 0


def _cmd_validate(parser, args):
    cfg = _load_config(parser, args)
    issues = validate_inputs(cfg)
    for issue in issues:
        print(issue)
    print(f"{len(issues)} issue(s)")
    return 1 if (issues and args.strict) else 0


def _cmd_analyze(parser, args):
    dataset = Path(args.dataset)
    if not (dataset / "manifest.json").is_file():
        parser.error(f"{dataset} has no manifest.json")
    report_dir = Path(args.report_dir) if args.report_dir else dataset / "report"
    report = distribution_report(dataset, report_dir, bins=args.bins, mask_corpus=args.mask_corpus,
                                 plots=not args.no_plots)
    print("comparison," + ",".join(ALL_CHANNELS))
    for name, scores in report.emd.items():
        print(name + "," + ",".join(f"{scores.get(c, float('nan')):.6g}" for c in ALL_CHANNELS))
    cov = report.coverage
    if cov.get("masks"):
        print(f"mean_background_fraction,{cov['mean_background_fraction']:.4f},"
              f"reference,{cov['reference_background_fraction']:.3f}")
    print(f"report: {report_dir}")
    return 0


def _cmd_cartoonize(parser, args):
    spec = BackendSpec(kind="cartoonize", levels=args.levels, edge_threshold=args.edge_threshold,
                       smoothing_iterations=args.smoothing_iterations,
                       smoothing_tolerance=args.smoothing_tolerance)
    img = read_image(args.input)
    write_png(args.output, stylize(img, spec).image)
    return 0


def _cmd_make_fixture(parser, args):
    path = make_fixture_corpus(args.directory, n_records=args.records, n_landscapes=args.landscapes,
                               seed=args.seed)
    print(path)
    return 0


COMMANDS = {
    "build": _cmd_build,
    "validate": _cmd_validate,
    "analyze": _cmd_analyze,
    "cartoonize": _cmd_cartoonize,
    "make-fixture": _cmd_make_fixture,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](parser, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except ConfigError as exc:
        print(f"toonpairs: config error: {exc}", file=sys.stderr)
        return 2
    except (ToonPairsError, DecodeError, OSError) as exc:
        print(f"toonpairs: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
