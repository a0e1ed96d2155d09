"""Command-line entry point: ``bpgorge <experiment> [flags]``."""
from __future__ import annotations

import argparse
import sys

from . import experiments as ex

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPARE = 3

HELP = {
    "gradvar": "gradient variance sweep",
    "diffvar": "cost-difference variance sweep",
    "compare": "gradient vs difference scaling, with per-cell inequality checks",
    "layerdep": "gradient variance per layer position",
    "landscape": "closed-form toy landscapes: statistics or cross-sections",
    "expressibility": "expressibility and the gradient-variance bound",
    "psr-check": "shift rule against central differences",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key = value settings file; flags override it")
    p.add_argument("--n", dest="n_list", metavar="LIST", help="qubit counts, e.g. 2,4,6 or 2..12:2")
    p.add_argument("--depth", dest="depth_list", metavar="LIST", help="layer counts, same syntax as --n")
    p.add_argument("--ensemble", dest="ensemble_size", metavar="N", help="samples per cell (default 2000)")
    p.add_argument("--seed", metavar="INT")
    p.add_argument("--mode", choices=ex.MODES, help="difference mode (default random_pair)")
    p.add_argument("--offset-length", dest="offset_length", metavar="L",
                   help="fixed-offset distance, along the unit diagonal")
    p.add_argument("--selector", metavar="SEL", help="slot indices (0,5), layer positions (first,middle,last) or all")
    p.add_argument("--observable", choices=ex.OBSERVABLES)
    p.add_argument("--max-qubits", dest="max_qubits", metavar="N")
    p.add_argument("--format", choices=ex.FORMATS)
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpgorge", description="Barren plateau and cost concentration studies.")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in ex.EXPERIMENTS:
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        _common(p)
        if name == "landscape":
            p.add_argument("--kinds", metavar="LIST", help="comma-separated landscape kinds")
            p.add_argument("--section", action="store_const", const="true",
                           help="emit diagonal cross-sections instead of statistics")
            p.add_argument("--section-points", dest="section_points", metavar="K")
            p.add_argument("--delta", metavar="X", help="tail threshold (default 0.5)")
        if name == "expressibility":
            p.add_argument("--haar-samples", dest="haar_samples", metavar="N")
    return parser


FLAGS = {"n_list": "--n", "depth_list": "--depth", "ensemble_size": "--ensemble"}
SETTINGS = ("n_list", "depth_list", "ensemble_size", "seed", "mode", "offset_length", "selector",
            "observable", "max_qubits", "format", "out", "kinds", "section", "section_points",
            "delta", "haar_samples")


def config_from_args(args: argparse.Namespace) -> ex.ExperimentConfig:
    file_values = ex.load_config(args.config) if args.config else {}
    overrides = {}
    for key in SETTINGS:
        raw = getattr(args, key, None)
        if raw is None:
            continue
        try:
            overrides[key] = ex.PARSERS[key](raw)
        except ValueError as exc:
            flag = FLAGS.get(key, "--" + key.replace("_", "-"))
            raise ex.ConfigError(f"{flag}: {exc}") from None
    try:
        return ex.make_config(args.experiment, file_values, overrides)
    except TypeError as exc:
        raise ex.ConfigError(str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.experiment == "compare":
            report = ex.run_compare(cfg)
            ex.emit(report.records, cfg.format, cfg.out)
            for line in report.summary_lines():
                print(line, file=sys.stderr)
            return EXIT_OK if report.passed else EXIT_COMPARE
        records = ex.RUNNERS[cfg.experiment](cfg)
        ex.emit(records, cfg.format, cfg.out)
    except ex.ConfigError as exc:
        print(f"bpgorge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, MemoryError) as exc:
        print(f"bpgorge: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
