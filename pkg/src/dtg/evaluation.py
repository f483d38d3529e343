"""Representation quality metrics for frozen features.

linear_probe trains only an affine classifier on top of fixed features and
reports held-out top-1; knn_top1 is a leave-one-out cosine vote;
class_overlap compresses "how tangled are the classes" into one scalar
(mean intra-class pairwise distance over mean inter-class pairwise
distance, smaller = cleaner); project_2d gives a deterministic top-2 PCA
view for plotting.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .losses import cross_entropy_batch
from .model import (
    StudentEncoder,
    Teacher,
    TeacherBank,
    forward_batch,
    pool_frames,
    teacher_features,
)
from .numerics import DegenerateInputError, as_matrix
from .sampling import PairMode, make_pair
from .seeding import substream


@dataclass(frozen=True)
class ProbeConfig:
    epochs: int = 100
    lr: float = 0.01
    seed: int = 0


@dataclass(frozen=True)
class ProbeResult:
    top1: float
    per_class: tuple[float, ...]  # held-out accuracy per class id
    split_seed: int


def video_features(enc: StudentEncoder, corpus: Corpus, normalize: bool = True) -> np.ndarray:
    """One feature per video, from its full frame stack (no sampling)."""
    pooled = np.stack([pool_frames(v.frames) for v in corpus.videos])
    out, _ = forward_batch(enc, pooled, normalize=normalize)
    return out


def teacher_video_features(teacher: Teacher, corpus: Corpus) -> np.ndarray:
    pooled = np.stack([pool_frames(v.frames) for v in corpus.videos])
    return teacher_features(teacher, pooled)


def teacher_view_accuracies(corpus: Corpus, bank: TeacherBank, seed: int = 0,
                            mode: PairMode = PairMode.SEQ_SEQ_OVERLAP,
                            segments: int = 4, k: int = 5) -> tuple[float, ...]:
    """Per-teacher kNN top-1 on guidance features of one sampled view per
    video.  Views are drawn with the trainer's sampler rather than pooling
    whole videos: full-video pooling averages the frame noise away and makes
    noisy teachers look as good as clean ones.  These scores are the natural
    source for offline fusion weights."""
    y = corpus.labels()
    pooled = []
    for v in corpus.videos:
        rng = substream(seed, "teacher-acc", v.video_id)
        pair = make_pair(v, mode, segments, rng)
        pooled.append(pool_frames(pair.guidance_input))
    pooled = np.stack(pooled)
    return tuple(
        knn_top1(teacher_features(t, pooled), y, k) for t in bank.teachers
    )


def stratified_split(labels: np.ndarray, split_frac: float, seed: int
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; every class keeps at least one example on
    each side."""
    if not 0 < split_frac < 1:
        raise ValueError("split_frac must lie strictly between 0 and 1")
    y = np.asarray(labels)
    train, test = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if idx.size < 2:
            raise ValueError(f"class {c} has fewer than 2 examples; cannot split")
        perm = substream(seed, "probe-split", int(c)).permutation(idx.size)
        n_train = min(max(int(round(split_frac * idx.size)), 1), idx.size - 1)
        train.append(idx[perm[:n_train]])
        test.append(idx[perm[n_train:]])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def linear_probe(features: np.ndarray, labels: np.ndarray, split_frac: float = 0.8,
                 config: ProbeConfig = ProbeConfig()) -> ProbeResult:
    """Affine classifier on frozen features: full-batch gradient descent from
    zero init, CE loss, held-out top-1 on the stratified test split."""
    x = as_matrix(features, "features")
    y = np.asarray(labels)
    if y.shape != (x.shape[0],):
        raise ValueError("need one label per feature row")
    classes = np.unique(y)
    if x.shape[0] < classes.size:
        raise ValueError("fewer examples than classes")
    tr, te = stratified_split(y, split_frac, config.seed)
    if set(np.unique(y[tr])) != set(classes):
        raise ValueError("a class is absent from the train split")
    n_cls = int(classes.max()) + 1
    w = np.zeros((n_cls, x.shape[1]))
    b = np.zeros(n_cls)
    xt, yt = x[tr], y[tr]
    for _ in range(config.epochs):
        _, d_logits = cross_entropy_batch(xt @ w.T + b, yt)
        w -= config.lr * (d_logits.T @ xt)
        b -= config.lr * d_logits.sum(axis=0)
    pred = np.argmax(x[te] @ w.T + b, axis=1)
    correct = pred == y[te]
    per_class = tuple(float(correct[y[te] == c].mean()) for c in classes)
    return ProbeResult(top1=float(correct.mean()), per_class=per_class,
                       split_seed=config.seed)


def knn_top1(features: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Leave-one-out k-nearest-neighbor accuracy under cosine similarity.
    Vote ties resolve to the smallest class id."""
    x = as_matrix(features, "features")
    y = np.asarray(labels)
    m = x.shape[0]
    if y.shape != (m,):
        raise ValueError("need one label per feature row")
    if not 1 <= k < m:
        raise ValueError(f"k must satisfy 1 <= k < {m}, got {k}")
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise DegenerateInputError("zero-norm feature row")
    u = x / norms
    sims = u @ u.T
    np.fill_diagonal(sims, -np.inf)
    neighbors = np.argsort(-sims, axis=1, kind="stable")[:, :k]
    correct = 0
    n_cls = int(y.max()) + 1
    for i in range(m):
        votes = np.bincount(y[neighbors[i]], minlength=n_cls)
        correct += int(np.argmax(votes) == y[i])  # argmax breaks ties low
    return correct / m


def class_overlap(features: np.ndarray, labels: np.ndarray) -> float:
    """Mean intra-class pairwise distance over mean inter-class pairwise
    distance.  Invariant to rotating or uniformly scaling the features."""
    x = as_matrix(features, "features")
    y = np.asarray(labels)
    if y.shape != (x.shape[0],):
        raise ValueError("need one label per feature row")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise ValueError("need at least 2 classes")
    if counts.min() < 2:
        raise ValueError("every class needs at least 2 points")
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    same = y[:, None] == y[None, :]
    upper = np.triu(np.ones_like(same), k=1).astype(bool)
    intra = dist[same & upper]
    inter = dist[~same & upper]
    denom = inter.mean()
    if denom == 0:
        raise DegenerateInputError("all points identical; overlap undefined")
    return float(intra.mean() / denom)


def project_2d(features: np.ndarray) -> np.ndarray:
    """Top-2 PCA coordinates.  Component signs are fixed by requiring the
    largest-magnitude loading of each component to be positive, so repeated
    runs agree exactly."""
    x = as_matrix(features, "features")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 points")
    centered = x - x.mean(axis=0)
    if not np.any(centered):
        raise DegenerateInputError("rank-0 data; no principal directions")
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[: min(2, vt.shape[0])]
    if comps.shape[0] < 2:
        comps = np.vstack([comps, np.zeros_like(comps[0])])
    for row in comps:
        j = np.argmax(np.abs(row))
        if row[j] < 0:
            row *= -1
    return centered @ comps.T


def write_probe_json(result: ProbeResult, path, resolved_config: dict | None = None,
                     seed: int | None = None, extras: dict | None = None) -> None:
    payload = {
        "top1": result.top1,
        "per_class": list(result.per_class),
        "split_seed": result.split_seed,
        "seed": result.split_seed if seed is None else seed,
        "config": resolved_config or {},
    }
    if extras:
        payload.update(extras)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_overlap_json(overlap: float, path, resolved_config: dict | None = None,
                       seed: int = 0) -> None:
    payload = {"class_overlap": overlap, "seed": seed, "config": resolved_config or {}}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_projection_csv(path, video_ids, labels, coords, seed: int = 0) -> None:
    pts = np.asarray(coords)
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed={seed}; full run configuration in config.json\n")
        writer = csv.writer(fh)
        writer.writerow(["video_id", "label", "x", "y"])
        for vid, lab, (px, py) in zip(video_ids, labels, pts):
            writer.writerow([int(vid), int(lab), repr(float(px)), repr(float(py))])
