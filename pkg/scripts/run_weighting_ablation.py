"""Weighting-scheme ablation on the 4-teacher bank (alignments 0.9 to 0.1).

For each seed: pretrain under uniform, offline, online1 and online2 fusion,
probe each encoder, and log the final-epoch mean weights so the learned
ordering is visible.
"""

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dtg.evaluation import linear_probe, teacher_view_accuracies, video_features
from dtg.losses import WeightScheme
from dtg.presets import four_teacher_bank, reference_corpus, reference_train_config
from dtg.trainer import pretrain

SCHEMES = (WeightScheme.UNIFORM, WeightScheme.OFFLINE,
           WeightScheme.ONLINE1, WeightScheme.ONLINE2)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--out", default=None, help="CSV destination")
    args = ap.parse_args()

    rows = []
    for seed in args.seeds:
        corpus = reference_corpus(seed)
        labels = corpus.labels()
        bank = four_teacher_bank(corpus, seed)
        accs = teacher_view_accuracies(corpus, bank, seed=seed)
        print(f"seed {seed}: teacher view accuracies {np.round(accs, 3)}")
        for scheme in SCHEMES:
            cfg = reference_train_config(
                seed, weight_scheme=scheme,
                offline_accuracies=accs if scheme is WeightScheme.OFFLINE else None)
            enc, report = pretrain(cfg, corpus, bank)
            top1 = linear_probe(video_features(enc, corpus), labels).top1
            weights = report.records[-1].mean_weights
            rows.append((seed, scheme.value, top1, *weights))
            print(f"  {scheme.value:>8}: top1 {top1:.4f}  "
                  f"final weights {np.round(weights, 4)}")

    for scheme in SCHEMES:
        vals = [r[2] for r in rows if r[1] == scheme.value]
        print(f"{scheme.value:>8}: mean top1 {np.mean(vals):.4f} "
              f"+/- {np.std(vals):.4f}")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "scheme", "top1", "w0", "w1", "w2", "w3"])
            w.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
