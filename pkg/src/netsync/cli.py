"""Command-line entry point: ``netsync simulate|certify|preset``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PRESETS, dump_config, load_config, preset
from .errors import ConfigError, NonFiniteState
from .scenarios import certify_command, run_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_BLOWUP = 3


def _common(parser):
    parser.add_argument("--seed", type=int, help="override scenario.seed")
    parser.add_argument("--h", type=float, help="override integrate.h")
    parser.add_argument("--t-end", type=float, help="override integrate.t_end")
    parser.add_argument("--epsilon", type=float, help="report the bound with decay slack epsilon")
    parser.add_argument(
        "--preset-matrices",
        choices=("derived", "paper-figures"),
        help="source of the F and Gamma bound matrices",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netsync", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write its metrics CSV")
    p.add_argument("config", help="config file, or a preset name")
    p.add_argument("--out", type=Path, help="output directory (default: current)")
    _common(p)

    p = sub.add_parser("certify", help="print certificates and assumption checks")
    p.add_argument("config", help="config file, or a preset name")
    p.add_argument("--format", choices=("kv", "csv"), default="kv")
    _common(p)

    p = sub.add_parser("preset", help="run a built-in figure scenario")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    _common(p)
    return parser


def _load(source: str) -> dict:
    if source in PRESETS and not Path(source).exists():
        return preset(source)
    return load_config(source)


def _apply_flags(cfg: dict, args) -> dict:
    flags = {
        "scenario.seed": args.seed,
        "integrate.h": args.h,
        "integrate.t_end": args.t_end,
        "certificate.epsilon": args.epsilon,
        "certificate.preset": args.preset_matrices,
    }
    cfg = dict(cfg)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "certify":
            report = certify_command(_apply_flags(_load(args.config), args))
            sys.stdout.write(report.as_csv() if args.format == "csv" else report.as_text())
            return report.exit_code
        if args.command == "simulate":
            cfg = _apply_flags(_load(args.config), args)
            result = run_scenario(cfg, args.out)
        else:
            cfg = _apply_flags(preset(args.name), args)
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / f"{args.name}.conf").write_text(dump_config(cfg))
            result = run_scenario(cfg, args.out)
        final = result.log.records[-1]
        summary = ", ".join(f"{k}={v:.6g}" for k, v in final.items())
        print(f"{result.scenario.name}: t={result.log.times[-1]:.6g} {summary}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except NonFiniteState as exc:
        print(f"simulation blew up at t={exc.time:.6g}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
