#!/usr/bin/env python3
"""Calibrate, train, sweep and chart the shipped configs into one work directory.

    python scripts/run_sweeps.py --work runs/full --threads 4
    python scripts/run_sweeps.py --work runs/quick --configs quick

Each config is rewritten with its artifact paths pointing into the work
directory, so the shipped files stay untouched.  All configs share one BER
map (calibrated with the first config's seed).
"""

import argparse
import sys
from pathlib import Path

from svbsc.cli import main as svbsc
from svbsc.config import load_config

HERE = Path(__file__).resolve().parent / "configs"


def stage(work: Path, name: str, frames: int | None) -> Path:
    cfg = load_config(HERE / f"{name}.cfg")
    over = dict(
        bermap__path=str(work / ("quick_bermap.csv" if name == "quick" else "bermap.csv")),
        codec__model_path=str(work / f"{name}.rljc"),
        output__results=str(work / f"{name}.csv"),
    )
    if frames:
        over["sweep__frames"] = str(frames)
    path = work / f"{name}.cfg"
    path.write_text(cfg.replace(**over).to_text())
    return path


def run(*argv) -> None:
    rc = svbsc([str(a) for a in argv])
    if rc:
        sys.exit(rc)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--work", type=Path, default=Path("runs/full"))
    ap.add_argument("--configs", nargs="+", default=["ladder", "baseline", "code1", "code2"])
    ap.add_argument("--frames", type=int, help="override frames per point")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    args.work.mkdir(parents=True, exist_ok=True)

    staged = [stage(args.work, n, args.frames) for n in args.configs]
    bmap = load_config(staged[0]).bermap.path
    if not Path(bmap).exists():
        run("calibrate", "--config", staged[0])
    for cfg in staged:
        run("train", "--config", cfg)
        run("simulate", "--config", cfg, "--threads", args.threads)
    # Sweeps with different configs carry different hashes; overlaying them is the point here.
    csvs = [args.work / f"{n}.csv" for n in args.configs]
    run("report", *csvs, "--out", args.work / "report", "--force")


if __name__ == "__main__":
    main()
