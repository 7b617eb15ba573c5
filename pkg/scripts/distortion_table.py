#!/usr/bin/env python3
"""Distortion d[L] of the ladder and baseline codecs over a memoryless flip pipe.

    python scripts/distortion_table.py --flip 0 0.01 0.05

Trains both codecs on the default synthetic set (6000 vectors) and prints
mean PSNR on the 500 held-out vectors for every breakpoint-induced L.
"""

import argparse

from svbsc import experiment as ex
from svbsc.config import ExperimentConfig
from svbsc.metrics import distortion_profile


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--flip", type=float, nargs="+", default=[0.0, 0.05])
    ap.add_argument("--preset", default="code3")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = ExperimentConfig(seed=args.seed).replace(codec__preset=args.preset)
    data = ex.load_dataset(cfg)
    held_out = ex.test_vectors(cfg, data)
    models = {v: ex.train_model(cfg.replace(codec__variant=v), data) for v in ("ladder", "baseline")}

    lengths = tuple(range(1152, -1, -128))
    print("flip   codec     " + " ".join(f"{L:>6d}" for L in lengths))
    for q in args.flip:
        for name, model in models.items():
            rep = distortion_profile(model, held_out, lengths=lengths, flip_prob=q, seed=args.seed)
            print(f"{q:<6g} {name:<9s} " + " ".join(f"{p:6.2f}" for p in rep.mean_psnr_db))


if __name__ == "__main__":
    main()
