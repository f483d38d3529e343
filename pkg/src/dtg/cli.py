"""Command-line experiment runner.

Subcommands:
    gen-data     generate a corpus file from the inline spec
    pretrain     self-supervised training, writes checkpoint + report
    train-joint  supervised joint training, writes checkpoint + report
    probe        evaluate a checkpoint: linear probe, kNN, overlap, 2D map
    report       aggregate several run directories into mean/std rows

Exit codes: 0 success, 2 bad or missing config, 3 I/O or file-format
failure, 4 numeric abort.  Every artifact embeds the resolved config and
seed.  DTG_THREADS caps worker threads (default 1; results are identical
either way).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .binio import FormatError
from .config import ConfigError, ExperimentConfig, load_config, resolve, to_dict
from .corpus import generate_corpus, load_corpus, save_corpus
from .evaluation import (
    ProbeConfig,
    class_overlap,
    knn_top1,
    linear_probe,
    project_2d,
    video_features,
    write_overlap_json,
    write_probe_json,
    write_projection_csv,
)
from .model import TeacherBank, build_head, build_student, build_teacher, load_student, save_student
from .numerics import DegenerateInputError
from .trainer import NumericAbortError, pretrain, train_joint, write_report


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _prepare(args) -> ExperimentConfig:
    cfg = resolve(load_config(args.config), args.seed, args.out)
    if cfg.out_dir is None:
        raise ConfigError("no output directory: set out_dir in the config or pass --out")
    return cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(cfg: ExperimentConfig, out: Path) -> None:
    out.joinpath("config.json").write_text(
        json.dumps(to_dict(cfg), indent=2, sort_keys=True) + "\n"
    )


def _load_corpus(cfg: ExperimentConfig):
    if cfg.corpus_path is not None:
        return load_corpus(cfg.corpus_path)
    if cfg.corpus is None:
        raise ConfigError("config needs a corpus spec or a corpus path")
    return generate_corpus(cfg.corpus)


def _build_bank(cfg: ExperimentConfig, corpus) -> TeacherBank:
    return TeacherBank(tuple(
        build_teacher(corpus, t.rho, cfg.train.d, t.seed, name=t.name)
        for t in cfg.teachers
    ))


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def cmd_gen_data(args) -> int:
    cfg = _prepare(args)
    if cfg.corpus is None:
        raise ConfigError("gen-data needs an inline corpus spec, not a corpus path")
    out = _out_dir(cfg)
    corpus = generate_corpus(cfg.corpus)
    save_corpus(corpus, out / "corpus.dtgc")
    _write_config(cfg, out)
    _say(args, f"wrote {out / 'corpus.dtgc'} ({corpus.num_videos} videos)")
    return 0


def _finish_training(args, cfg, out, report, label: str) -> int:
    report = dataclasses.replace(report, checkpoint_path="checkpoint.dtgm")
    write_report(report, out, to_dict(cfg))
    _write_config(cfg, out)
    last = report.records[-1] if report.records else None
    if last is not None:
        if last.contrastive_loss is None:
            tail = "final epoch all cold-queue skips"
        else:
            tail = f"final contrastive loss {last.contrastive_loss:.4f}"
        if last.ce_loss is not None:
            tail += f", ce loss {last.ce_loss:.4f}"
        _say(args, f"{label} done in {report.wall_time_s:.1f}s; {tail}")
    else:
        _say(args, f"{label} done (0 epochs)")
    return 0


def cmd_pretrain(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(cfg)
    corpus = _load_corpus(cfg)
    bank = _build_bank(cfg, corpus)
    enc, report = pretrain(cfg.train, corpus, bank)
    save_student(out / "checkpoint.dtgm", enc)
    return _finish_training(args, cfg, out, report, "pretrain")


def cmd_train_joint(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(cfg)
    corpus = _load_corpus(cfg)
    bank = _build_bank(cfg, corpus)
    init = None
    if args.init is not None:
        enc, head = load_student(args.init)
        if head is None:
            head = build_head(cfg.train.d, corpus.spec.num_classes, cfg.train.seed)
        init = (enc, head)
    (enc, head), report = train_joint(cfg.train, corpus, bank, init)
    save_student(out / "checkpoint.dtgm", enc, head)
    return _finish_training(args, cfg, out, report, "train-joint")


def cmd_probe(args) -> int:
    cfg = _prepare(args)
    out = _out_dir(cfg)
    corpus = _load_corpus(cfg)
    if args.checkpoint is not None:
        enc, _ = load_student(args.checkpoint)
    else:
        enc = build_student(corpus.spec.frame_dim, cfg.train.h, cfg.train.d, cfg.train.seed)
        _say(args, "no --checkpoint given; probing a freshly initialized encoder")
    feats = video_features(enc, corpus)
    labels = corpus.labels()
    probe_cfg = ProbeConfig(epochs=cfg.eval.probe_epochs, lr=cfg.eval.probe_lr, seed=cfg.seed)
    result = linear_probe(feats, labels, cfg.eval.split_frac, probe_cfg)
    knn = knn_top1(feats, labels, cfg.eval.knn_k)
    overlap = class_overlap(feats, labels)
    doc = to_dict(cfg)
    write_probe_json(result, out / "probe.json", doc, seed=cfg.seed,
                     extras={"knn_top1": knn})
    write_overlap_json(overlap, out / "overlap.json", doc, seed=cfg.seed)
    if cfg.eval.projection:
        coords = project_2d(feats)
        write_projection_csv(out / "projection.csv",
                             [v.video_id for v in corpus.videos], labels, coords,
                             seed=cfg.seed)
    _write_config(cfg, out)
    _say(args, f"top1 {result.top1:.4f}, knn {knn:.4f}, overlap {overlap:.4f}")
    return 0


_METRIC_SOURCES = (
    ("probe.json", "top1", "top1"),
    ("probe.json", "knn_top1", "knn_top1"),
    ("overlap.json", "class_overlap", "class_overlap"),
)


def _run_metrics(run_dir: Path) -> dict[str, float]:
    found = {}
    for fname, key, metric in _METRIC_SOURCES:
        path = run_dir / fname
        if path.is_file():
            value = json.loads(path.read_text()).get(key)
            if value is not None:
                found[metric] = float(value)
    report = run_dir / "report.json"
    if report.is_file():
        epochs = json.loads(report.read_text()).get("epochs", [])
        if epochs:
            if epochs[-1].get("contrastive_loss") is not None:
                found["final_contrastive_loss"] = float(epochs[-1]["contrastive_loss"])
            if epochs[-1].get("ce_loss") is not None:
                found["final_ce_loss"] = float(epochs[-1]["ce_loss"])
    return found


def cmd_report(args) -> int:
    rows = []
    per_metric: dict[str, list[float]] = {}
    for run in args.runs:
        run_dir = Path(run)
        if not run_dir.is_dir():
            raise FileNotFoundError(f"run directory not found: {run_dir}")
        for metric, value in _run_metrics(run_dir).items():
            per_metric.setdefault(metric, []).append(value)
    if not per_metric:
        return _fail("no metrics found in the given run directories", 3)
    for metric in sorted(per_metric):
        values = np.array(per_metric[metric])
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        rows.append((metric, float(values.mean()), std, values.size))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        fh.write("# runs=" + ";".join(str(Path(r)) for r in args.runs) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "std", "n"])
        for metric, mean, std, n in rows:
            writer.writerow([metric, repr(mean), repr(std), n])
    for metric, mean, std, n in rows:
        _say(args, f"{metric}: {mean:.4f} +/- {std:.4f} (n={n})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtg",
        description="teacher-guided contrastive training on synthetic video corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment JSON")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("gen-data", help="generate and save a corpus")
    common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("pretrain", help="self-supervised training")
    common(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train-joint", help="joint contrastive + supervised training")
    common(p)
    p.add_argument("--init", default=None, help="checkpoint to start from")
    p.set_defaults(func=cmd_train_joint)

    p = sub.add_parser("probe", help="evaluate a checkpoint")
    common(p)
    p.add_argument("--checkpoint", default=None, help="student checkpoint to evaluate")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("report", help="aggregate run directories")
    p.add_argument("--runs", nargs="+", required=True, help="run directories")
    p.add_argument("--out", default=None,
                   help="directory to write summary.csv into (default: cwd)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(str(exc), 2)
    except (NumericAbortError, DegenerateInputError) as exc:
        return _fail(f"numeric abort: {exc}", 4)
    except (FormatError, OSError) as exc:
        return _fail(str(exc), 3)
    except ValueError as exc:
        return _fail(str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
