"""Training loops: self-supervised pretraining and supervised joint training.

Both loops share the same machinery.  Each epoch visits every video once in
a seeded random order; each step samples one contrastive pair per video,
embeds anchors with the student and guidance with every teacher, reads a
snapshot of negatives from each teacher's queue, applies one SGD step to
the student (and classifier head in joint mode), then enqueues the fresh
guidance features.  Teachers are never updated.

Queues start cold.  Until every queue has seen K features the loss and the
parameter update are skipped; guidance features are still enqueued each
step, so training proper begins within the first epoch (K is smaller than
the video count).  Per-sample randomness is keyed by (seed, video_id,
epoch); with DTG_THREADS > 1 the per-sample loss work fans out across a
thread pool but results are reduced in sample order, keeping runs
bit-identical to serial execution.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .losses import (
    ContrastiveOutcome,
    FusionLevel,
    WeightScheme,
    cross_entropy_batch,
    fused_contrastive,
)
from .model import (
    ClassifierHead,
    StudentEncoder,
    TeacherBank,
    backward_batch,
    build_head,
    build_student,
    forward_batch,
    pool_frames,
    teacher_features,
)
from .queues import GuidanceQueue, enqueue_batch, negatives
from .sampling import PairMode, make_pair
from .seeding import substream


class NumericAbortError(RuntimeError):
    """Training hit a non-finite loss or gradient."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 64
    lr0: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0005
    milestones: tuple[int, ...] = (30, 50)
    decay: float = 0.1
    tau: float = 0.07
    K: int = 256
    alpha: float = 0.1
    beta: float = 1.0
    pair_mode: PairMode = PairMode.SEQ_SEQ_OVERLAP
    weight_scheme: WeightScheme = WeightScheme.UNIFORM
    fusion_level: FusionLevel = FusionLevel.LOSS
    d: int = 16
    h: int = 32
    seed: int = 0
    segments: int = 4
    jitter: float = 0.0
    mask_frac: float = 0.0
    normalize: bool = True  # L2-normalize anchor features (cosine logits)
    offline_accuracies: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        ms = tuple(self.milestones)
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError("milestones must be strictly increasing")
        if any(m >= self.epochs for m in ms) and self.epochs > 0:
            raise ValueError("milestones must be < epochs")
        if min(self.d, self.h, self.segments) < 1:
            raise ValueError("d, h and segments must be >= 1")
        if self.weight_scheme is WeightScheme.OFFLINE and self.offline_accuracies is None:
            raise ValueError("offline weighting requires offline_accuracies")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    contrastive_loss: float | None   # None if every step was a cold-queue skip
    ce_loss: float | None            # None outside joint mode
    mean_weights: tuple[float, ...]  # applied teacher weights, mean over the epoch
    std_weights: tuple[float, ...]   # spread across samples (0 for fixed schemes)


@dataclass(frozen=True)
class RunReport:
    seed: int
    records: tuple[EpochRecord, ...]
    checkpoint_path: str | None = None
    wall_time_s: float = 0.0


def lr_at(config: TrainConfig, epoch: int) -> float:
    """Step-decay schedule: lr0 * decay^(number of milestones <= epoch)."""
    if not 0 <= epoch < max(config.epochs, 1):
        raise ValueError(f"epoch {epoch} outside [0, {config.epochs})")
    drops = sum(1 for m in config.milestones if m <= epoch)
    return config.lr0 * config.decay ** drops


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             velocity: dict[str, np.ndarray], lr: float, momentum: float,
             weight_decay: float) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """One momentum step with coupled weight decay.

    v <- momentum * v + g + weight_decay * p
    p <- p - lr * v
    """
    if set(params) != set(grads) or set(params) != set(velocity):
        raise ValueError("params, grads and velocity must share keys")
    new_p, new_v = {}, {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape or velocity[name].shape != p.shape:
            raise ValueError(f"shape mismatch for parameter {name}")
        if not np.all(np.isfinite(g)):
            raise NumericAbortError(f"non-finite gradient for parameter {name}")
        v = momentum * velocity[name] + g + weight_decay * p
        new_v[name] = v
        new_p[name] = p - lr * v
    return new_p, new_v


def _worker_count() -> int:
    return max(1, int(os.environ.get("DTG_THREADS", "1")))


def _validate_run(config: TrainConfig, corpus: Corpus, bank: TeacherBank) -> None:
    if config.K >= corpus.num_videos:
        raise ValueError(
            f"queue capacity {config.K} must be smaller than the "
            f"number of training videos ({corpus.num_videos})"
        )
    if corpus.spec.frames_per_video < config.segments:
        raise ValueError("segments exceed frames per video")
    acc = config.offline_accuracies
    if acc is not None and len(acc) != len(bank):
        raise ValueError(f"expected {len(bank)} offline accuracies, got {len(acc)}")


def _sample_batch(config: TrainConfig, corpus: Corpus, order: np.ndarray, epoch: int):
    pairs = []
    for vid_index in order:
        video = corpus.videos[vid_index]
        rng = substream(config.seed, "pair", video.video_id, epoch)
        pairs.append(make_pair(video, config.pair_mode, config.segments, rng,
                               jitter=config.jitter, mask_frac=config.mask_frac))
    return pairs


def _contrastive_pass(config: TrainConfig, feats: np.ndarray, guidance: np.ndarray,
                      negatives: np.ndarray, pool: ThreadPoolExecutor | None
                      ) -> list[ContrastiveOutcome]:
    def one(i: int) -> ContrastiveOutcome:
        return fused_contrastive(
            feats[i], guidance[:, i, :], negatives, config.tau,
            config.weight_scheme, config.fusion_level,
            accuracies=config.offline_accuracies,
        )

    idx = range(feats.shape[0])
    if pool is None:
        return [one(i) for i in idx]
    return list(pool.map(one, idx))  # map preserves order: reduction stays serial


@dataclass
class _EpochStats:
    ct_sum: float = 0.0
    ce_sum: float = 0.0
    count: int = 0
    weights: list = field(default_factory=list)

    def record(self, outcomes, ce_loss=None):
        self.ct_sum += sum(o.loss for o in outcomes)
        self.count += len(outcomes)
        self.weights.extend(o.weights for o in outcomes)
        if ce_loss is not None:
            self.ce_sum += ce_loss * len(outcomes)

    def close(self, epoch: int, lr: float, joint: bool) -> EpochRecord:
        if self.count == 0:  # every batch this epoch hit a cold queue
            return EpochRecord(epoch, lr, None, None, (), ())
        w = np.stack(self.weights)
        std = w.std(axis=0)
        std[(w == w[0]).all(axis=0)] = 0.0  # constant schemes log exactly zero
        return EpochRecord(
            epoch=epoch,
            lr=lr,
            contrastive_loss=self.ct_sum / self.count,
            ce_loss=(self.ce_sum / self.count) if joint else None,
            mean_weights=tuple(w.mean(axis=0)),
            std_weights=tuple(std),
        )


def _run_loop(config: TrainConfig, corpus: Corpus, bank: TeacherBank,
              enc: StudentEncoder, head: ClassifierHead | None):
    start = time.perf_counter()
    joint = head is not None
    queues = [GuidanceQueue(config.K, config.d) for _ in bank.teachers]
    params = dict(enc.parameters())
    if joint:
        params.update(head.parameters())
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    labels_all = corpus.labels()
    workers = _worker_count()
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    records = []
    try:
        for epoch in range(config.epochs):
            lr = lr_at(config, epoch)
            order = substream(config.seed, "epoch-order", epoch).permutation(corpus.num_videos)
            stats = _EpochStats()
            for b0 in range(0, corpus.num_videos, config.batch_size):
                batch_idx = order[b0:b0 + config.batch_size]
                pairs = _sample_batch(config, corpus, batch_idx, epoch)
                n = len(pairs)
                pooled_guid = np.stack([pool_frames(p.guidance_input) for p in pairs])
                guidance = np.stack([teacher_features(t, pooled_guid) for t in bank.teachers])

                if not all(q.warm for q in queues):
                    # Cold start: no loss, no update; just feed the queues.
                    for k, q in enumerate(queues):
                        enqueue_batch(q, guidance[k])
                    continue

                pooled_anchor = np.stack([pool_frames(p.anchor_input) for p in pairs])
                feats, cache = forward_batch(enc, pooled_anchor, normalize=config.normalize)
                negs = np.stack([negatives(q) for q in queues])

                outcomes = _contrastive_pass(config, feats, guidance, negs, pool)
                ct_loss = sum(o.loss for o in outcomes) / n
                d_feats = np.stack([o.grad_anchor for o in outcomes]) / n

                ce_loss = None
                if joint:
                    logits = head.logits(feats)
                    ce_loss, d_logits = cross_entropy_batch(logits, labels_all[batch_idx])
                    d_feats = config.alpha * d_feats + config.beta * (d_logits @ head.W)
                    head_grads = {
                        "head.W": config.beta * (d_logits.T @ feats),
                        "head.b": config.beta * d_logits.sum(axis=0),
                    }
                    step_loss = config.alpha * ct_loss + config.beta * ce_loss
                else:
                    step_loss = ct_loss
                if not np.isfinite(step_loss):
                    raise NumericAbortError(
                        f"non-finite loss at epoch {epoch}, batch {b0 // config.batch_size}"
                    )

                grads = backward_batch(enc, cache, d_feats)
                if joint:
                    grads.update(head_grads)
                params, velocity = sgd_step(params, grads, velocity, lr,
                                            config.momentum, config.weight_decay)
                enc.set_parameters([params[k] for k, _ in enc.parameters()])
                if joint:
                    head.W = params["head.W"]
                    head.b = params["head.b"]

                for k, q in enumerate(queues):
                    enqueue_batch(q, guidance[k])
                stats.record(outcomes, ce_loss)
            records.append(stats.close(epoch, lr, joint))
    finally:
        if pool is not None:
            pool.shutdown()
    report = RunReport(seed=config.seed, records=tuple(records),
                       wall_time_s=time.perf_counter() - start)
    return enc, head, report


def pretrain(config: TrainConfig, corpus: Corpus, bank: TeacherBank
             ) -> tuple[StudentEncoder, RunReport]:
    """Self-supervised training of the student against frozen teachers."""
    _validate_run(config, corpus, bank)
    enc = build_student(corpus.spec.frame_dim, config.h, config.d, config.seed)
    enc, _, report = _run_loop(config, corpus, bank, enc, head=None)
    return enc, report


def train_joint(config: TrainConfig, corpus: Corpus, bank: TeacherBank,
                init: tuple[StudentEncoder, ClassifierHead] | None = None
                ) -> tuple[tuple[StudentEncoder, ClassifierHead], RunReport]:
    """Supervised training of alpha * contrastive + beta * cross-entropy.

    The contrastive branch sees the raw pair; the classifier head sees the
    anchor feature.  Teachers stay frozen and queue discipline matches
    pretraining exactly.
    """
    _validate_run(config, corpus, bank)
    if init is None:
        enc = build_student(corpus.spec.frame_dim, config.h, config.d, config.seed)
        head = build_head(config.d, corpus.spec.num_classes, config.seed)
    else:
        enc, head = init[0].copy(), ClassifierHead(init[1].W.copy(), init[1].b.copy())
    enc, head, report = _run_loop(config, corpus, bank, enc, head)
    return (enc, head), report


def report_to_dict(report: RunReport, resolved_config: dict | None = None) -> dict:
    """JSON-ready view of a run.  Wall time is deliberately left out so the
    serialized report is byte-identical across repeated seeded runs."""
    return {
        "seed": report.seed,
        "checkpoint": report.checkpoint_path,
        "config": resolved_config or {},
        "epochs": [
            {
                "epoch": r.epoch,
                "lr": r.lr,
                "contrastive_loss": r.contrastive_loss,
                "ce_loss": r.ce_loss,
                "mean_weights": list(r.mean_weights),
                "std_weights": list(r.std_weights),
            }
            for r in report.records
        ],
    }


def write_report(report: RunReport, out_dir, resolved_config: dict | None = None) -> None:
    """Emit report.json plus a per-epoch epochs.csv under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(report_to_dict(report, resolved_config), indent=2, sort_keys=True)
    (out / "report.json").write_text(payload + "\n")
    with open(out / "epochs.csv", "w", newline="") as fh:
        fh.write(f"# seed={report.seed}; full run configuration in report.json\n")
        writer = csv.writer(fh)
        n_teachers = max((len(r.mean_weights) for r in report.records), default=0)
        header = ["epoch", "lr", "contrastive_loss", "ce_loss"]
        header += [f"w{t}_mean" for t in range(n_teachers)]
        header += [f"w{t}_std" for t in range(n_teachers)]
        writer.writerow(header)
        blank = lambda x: "" if x is None else repr(x)
        for r in report.records:
            row = [r.epoch, repr(r.lr), blank(r.contrastive_loss), blank(r.ce_loss)]
            row += [repr(x) for x in r.mean_weights] + [""] * (n_teachers - len(r.mean_weights))
            row += [repr(x) for x in r.std_weights] + [""] * (n_teachers - len(r.std_weights))
            writer.writerow(row)
