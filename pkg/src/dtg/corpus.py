"""Synthetic labeled video corpora.

A "video" here is a length-L sequence of D-dimensional frame feature vectors.
Class identity and per-video identity live in a Ds-dimensional signal
subspace; the orthogonal complement carries only nuisance variation (drift
and frame noise), which no downstream task depends on.  Each video draws a
latent around its class prototype inside the signal subspace, then frames
add a slow linear drift along a random direction plus per-frame noise:

    z       = mu_c + video_spread * (eps @ signal_basis)   (eps ~ N(0, I_Ds))
    frame_t = z + drift * t * u + frame_noise * eps_t      (u a random unit vector)

The signal/nuisance bases are exposed so frozen teachers with a controllable
task alignment can be built on the same corpus.

File format (``save_corpus``/``load_corpus``): header line ``DTGC v1``, then
little-endian u32 counts (C, V, L, D, Ds), f64 spread/noise/drift, u64 seed,
the two bases row-major, then per video u32 label, u64 id, row-major frames,
and finally a u64 FNV-1a checksum of all preceding bytes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .binio import RecordReader, RecordWriter
from .seeding import substream

CORPUS_HEADER = "DTGC v1"


@dataclass(frozen=True)
class CorpusSpec:
    num_classes: int
    videos_per_class: int
    frames_per_video: int
    frame_dim: int
    signal_dim: int
    video_spread: float = 0.5
    frame_noise: float = 0.1
    drift: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("num_classes", "videos_per_class", "frames_per_video", "frame_dim", "signal_dim"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.signal_dim > self.frame_dim:
            raise ValueError("signal_dim must not exceed frame_dim")
        for name in ("video_spread", "frame_noise", "drift"):
            if float(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class Video:
    frames: np.ndarray  # (L, D) float64
    label: int
    video_id: int


@dataclass(frozen=True)
class Corpus:
    spec: CorpusSpec
    videos: tuple[Video, ...]
    signal_basis: np.ndarray    # (Ds, D), orthonormal rows
    nuisance_basis: np.ndarray  # (D - Ds, D), orthonormal rows

    @property
    def num_videos(self) -> int:
        return len(self.videos)

    def labels(self) -> np.ndarray:
        return np.array([v.label for v in self.videos], dtype=np.int64)


def _orthonormal_bases(rng: np.random.Generator, dim: int, signal_dim: int):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    # fix orientation so the factorization is unique given the draw
    q = q * np.sign(np.diag(r))
    rows = q.T
    return rows[:signal_dim].copy(), rows[signal_dim:].copy()


def generate_corpus(spec: CorpusSpec) -> Corpus:
    """Deterministically generate a corpus from its spec."""
    d, ds = spec.frame_dim, spec.signal_dim
    signal_basis, nuisance_basis = _orthonormal_bases(
        substream(spec.seed, "corpus-bases"), d, ds
    )
    proto_coeffs = substream(spec.seed, "corpus-prototypes").standard_normal(
        (spec.num_classes, ds)
    )
    prototypes = proto_coeffs @ signal_basis

    videos = []
    ts = np.arange(spec.frames_per_video, dtype=np.float64)[:, None]
    for label in range(spec.num_classes):
        for _ in range(spec.videos_per_class):
            vid = len(videos)
            rng = substream(spec.seed, "corpus-video", vid)
            z = prototypes[label] + spec.video_spread * (rng.standard_normal(ds) @ signal_basis)
            direction = rng.standard_normal(d)
            direction /= np.linalg.norm(direction)
            frames = (
                z
                + spec.drift * ts * direction
                + spec.frame_noise * rng.standard_normal((spec.frames_per_video, d))
            )
            videos.append(Video(frames=frames, label=label, video_id=vid))
    return Corpus(
        spec=spec,
        videos=tuple(videos),
        signal_basis=signal_basis,
        nuisance_basis=nuisance_basis,
    )


def split_videos(corpus: Corpus, train_frac: float, seed: int) -> tuple[Corpus, Corpus]:
    """Stratified video-level split into (train, held_out) corpora.

    Per class, a seeded permutation sends round(train_frac * n) videos to the
    train side, clamped so both sides keep at least one video.  The halves
    share the parent's spec and bases; they are in-memory views for held-out
    evaluation, not intended for save_corpus (counts no longer match spec).
    """
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be in (0, 1)")
    by_class: dict[int, list[int]] = {}
    for i, v in enumerate(corpus.videos):
        by_class.setdefault(v.label, []).append(i)
    train_idx, held_idx = [], []
    for label in sorted(by_class):
        idx = np.array(by_class[label])
        n = len(idx)
        if n < 2:
            raise ValueError(f"class {label} needs >= 2 videos to split")
        n_train = min(max(int(round(train_frac * n)), 1), n - 1)
        perm = substream(seed, "video-split", label).permutation(n)
        train_idx.extend(idx[perm[:n_train]])
        held_idx.extend(idx[perm[n_train:]])
    pick = lambda ids: tuple(corpus.videos[i] for i in sorted(ids))
    train = dataclasses.replace(corpus, videos=pick(train_idx))
    held = dataclasses.replace(corpus, videos=pick(held_idx))
    return train, held


def save_corpus(corpus: Corpus, path) -> None:
    spec = corpus.spec
    w = RecordWriter(CORPUS_HEADER)
    w.u32(spec.num_classes)
    w.u32(spec.videos_per_class)
    w.u32(spec.frames_per_video)
    w.u32(spec.frame_dim)
    w.u32(spec.signal_dim)
    w.f64(spec.video_spread)
    w.f64(spec.frame_noise)
    w.f64(spec.drift)
    w.u64(spec.seed)
    w.array(corpus.signal_basis)
    w.array(corpus.nuisance_basis)
    for v in corpus.videos:
        w.u32(v.label)
        w.u64(v.video_id)
        w.array(v.frames)
    Path(path).write_bytes(w.finish())


def load_corpus(path) -> Corpus:
    r = RecordReader(Path(path).read_bytes(), CORPUS_HEADER)
    spec = CorpusSpec(
        num_classes=r.u32(),
        videos_per_class=r.u32(),
        frames_per_video=r.u32(),
        frame_dim=r.u32(),
        signal_dim=r.u32(),
        video_spread=r.f64(),
        frame_noise=r.f64(),
        drift=r.f64(),
        seed=r.u64(),
    )
    d, ds = spec.frame_dim, spec.signal_dim
    signal_basis = r.array((ds, d))
    nuisance_basis = r.array((d - ds, d))
    videos = []
    for _ in range(spec.num_classes * spec.videos_per_class):
        label = r.u32()
        vid = r.u64()
        frames = r.array((spec.frames_per_video, d))
        videos.append(Video(frames=frames, label=label, video_id=vid))
    r.expect_end()
    return Corpus(
        spec=spec,
        videos=tuple(videos),
        signal_basis=signal_basis,
        nuisance_basis=nuisance_basis,
    )
