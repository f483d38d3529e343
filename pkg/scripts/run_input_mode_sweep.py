"""Sweep the four pair-sampling modes under one shared configuration.

Pretrains one encoder per mode and probes each, keeping everything else
fixed so the numbers are directly comparable.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dtg.evaluation import linear_probe, video_features
from dtg.presets import reference_bank, reference_corpus, reference_train_config
from dtg.sampling import PairMode
from dtg.trainer import pretrain


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--out", default=None, help="CSV destination")
    args = ap.parse_args()

    rows = []
    for seed in args.seeds:
        corpus = reference_corpus(seed)
        labels = corpus.labels()
        bank = reference_bank(corpus, seed)
        for mode in PairMode:
            cfg = reference_train_config(seed, pair_mode=mode)
            enc, _ = pretrain(cfg, corpus, bank)
            top1 = linear_probe(video_features(enc, corpus), labels).top1
            rows.append((seed, mode.value, top1))
            print(f"seed {seed} {mode.value:>16}: top1 {top1:.4f}")

    for mode in PairMode:
        vals = [r[2] for r in rows if r[1] == mode.value]
        print(f"{mode.value:>16}: mean top1 {np.mean(vals):.4f} +/- {np.std(vals):.4f}")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "pair_mode", "top1"])
            w.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
