"""svbsc calibrate|train|simulate|report.

Exit codes: 0 success, 1 usage or input error, 2 failed acceptance check
(``report --check``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiment as ex
from . import report as rp
from .config import ExperimentConfig, load_config

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="svbsc", description="Stabilised-link rateless image transmission experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_help):
        sp.add_argument("--config", type=Path, help="key = value config file (defaults if omitted)")
        sp.add_argument("--seed", type=_u64, help="overrides the config seed")
        sp.add_argument("--out", type=Path, help=out_help)

    common(sub.add_parser("calibrate", help="measure the BER map"), "BER map CSV (default: bermap.path)")
    common(sub.add_parser("train", help="fit a codec model"), "model file (default: codec.model_path)")
    sim = sub.add_parser("simulate", help="run the SNR sweep")
    common(sim, "results CSV (default: output.results)")
    sim.add_argument("--threads", type=int, help="worker processes (env SVBSC_THREADS, default 1)")

    rep = sub.add_parser("report", help="charts and acceptance summary from results CSVs")
    rep.add_argument("inputs", nargs="+", type=Path, help="results CSVs; file stems label the series")
    rep.add_argument("--out", type=Path, default=Path("report"), help="output directory")
    rep.add_argument("--force", action="store_true", help="overlay results with different config hashes")
    rep.add_argument("--check", action="store_true", help="exit 2 if any acceptance check fails")
    return p


def _config(args) -> tuple[ExperimentConfig, Path | None]:
    if args.config is None:
        cfg, base = ExperimentConfig(), None
    else:
        if not args.config.is_file():
            raise UsageError(f"config file not found: {args.config}")
        cfg, base = load_config(args.config), args.config.parent
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg, base


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"svbsc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        if args.command == "report":
            inputs = {}
            for p in args.inputs:
                label = p.stem
                while label in inputs:
                    label += "'"
                inputs[label] = rp.read_results(p)
            checks, summary = rp.build_report(inputs, args.out, force=args.force)
            print(summary, end="")
            if args.check and any(c.passed is False for c in checks):
                return EXIT_CHECK
            return EXIT_OK

        cfg, base = _config(args)
        if args.command == "calibrate":
            out = args.out or ex.resolve(cfg.bermap.path, base)
            _, table = ex.cmd_calibrate(cfg, out)
            print(table)
        elif args.command == "train":
            out = args.out or ex.resolve(cfg.codec.model_path, base)
            _, table = ex.cmd_train(cfg, out, base)
            print(table)
        elif args.command == "simulate":
            threads = ex.resolve_threads(args.threads)
            out = args.out or ex.resolve(cfg.output.results, base)
            results = ex.cmd_simulate(cfg, out, threads, base)
            print(f"wrote {len(results)} rows to {out}")
    except (UsageError, ValueError, OSError) as exc:
        print(f"svbsc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
