"""Segment-based sparse frame sampling and contrastive pair construction.

Both members of a pair come from the same video; they differ by which frames
were sampled and by per-view augmentation (feature jitter plus a contiguous
coordinate mask, the feature-space analog of a random crop).  Four input
modes are supported:

  img-img           two distinct single frames
  img-seq           a single guidance frame plus a T-segment anchor sequence
  seq-seq-overlap   two independent T-segment sequences over the full video
  seq-seq-disjoint  anchor from the first half, guidance from the second
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import Video


class PairMode(Enum):
    IMG_IMG = "img-img"
    IMG_SEQ = "img-seq"
    SEQ_SEQ_OVERLAP = "seq-seq-overlap"
    SEQ_SEQ_DISJOINT = "seq-seq-disjoint"


@dataclass(frozen=True)
class FrameSequence:
    frame_indices: tuple[int, ...]
    features: np.ndarray  # (T, D), copied from the source video

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.frame_indices, self.frame_indices[1:])):
            raise ValueError("frame indices must be strictly increasing")
        if self.features.shape[0] != len(self.frame_indices):
            raise ValueError("one feature row per frame index required")


@dataclass(frozen=True)
class ContrastivePair:
    anchor_input: FrameSequence
    guidance_input: FrameSequence
    video_id: int
    label: int


def segment_bounds(num_frames: int, segments: int) -> list[tuple[int, int]]:
    """Partition [0, num_frames) into ``segments`` contiguous half-open ranges
    [floor(i*L/T), floor((i+1)*L/T))."""
    if segments < 1 or segments > num_frames:
        raise ValueError(f"need 1 <= segments <= frames, got {segments} of {num_frames}")
    return [
        (i * num_frames // segments, (i + 1) * num_frames // segments)
        for i in range(segments)
    ]


def _gather(video: Video, indices) -> FrameSequence:
    idx = tuple(int(i) for i in indices)
    return FrameSequence(frame_indices=idx, features=video.frames[list(idx)].copy())


def augment(
    seq: FrameSequence,
    rng: np.random.Generator,
    jitter: float = 0.0,
    mask_frac: float = 0.0,
) -> FrameSequence:
    """Add isotropic noise of scale ``jitter``, then zero a random contiguous
    block of floor(mask_frac * D) coordinates shared across the sequence."""
    if not 0 <= mask_frac < 1:
        raise ValueError("mask_frac must lie in [0, 1)")
    feats = seq.features.copy()
    if jitter > 0:
        feats += jitter * rng.standard_normal(feats.shape)
    dim = feats.shape[1]
    width = int(mask_frac * dim)
    if width > 0:
        start = int(rng.integers(dim - width + 1))
        feats[:, start:start + width] = 0.0
    return FrameSequence(frame_indices=seq.frame_indices, features=feats)


def sample_sequence(
    video: Video,
    segments: int,
    window: range,
    rng: np.random.Generator,
    jitter: float = 0.0,
    mask_frac: float = 0.0,
) -> FrameSequence:
    """One uniformly random frame per segment of ``window``, then augment."""
    if window.step != 1:
        raise ValueError("window must have unit step")
    lo, hi = window.start, window.stop
    length = hi - lo
    if lo < 0 or hi > video.frames.shape[0] or length < segments:
        raise ValueError(f"window {window} too small for {segments} segments")
    indices = [
        lo + a + int(rng.integers(b - a)) for a, b in segment_bounds(length, segments)
    ]
    return augment(_gather(video, indices), rng, jitter, mask_frac)


def make_pair(
    video: Video,
    mode: PairMode,
    segments: int,
    rng: np.random.Generator,
    jitter: float = 0.0,
    mask_frac: float = 0.0,
) -> ContrastivePair:
    """Sample an (anchor, guidance) pair from one video.

    The anchor is the student-side input.  Draw order is fixed (anchor first)
    so a given rng state always yields the same pair.
    """
    num_frames = video.frames.shape[0]

    if mode is PairMode.IMG_IMG:
        if num_frames < 2:
            raise ValueError("img-img needs at least 2 frames")
        i = int(rng.integers(num_frames))
        j = int(rng.integers(num_frames - 1))
        if j >= i:
            j += 1
        anchor = augment(_gather(video, [i]), rng, jitter, mask_frac)
        guidance = augment(_gather(video, [j]), rng, jitter, mask_frac)
    elif mode is PairMode.IMG_SEQ:
        if num_frames < segments:
            raise ValueError("img-seq needs at least `segments` frames")
        anchor = sample_sequence(video, segments, range(0, num_frames), rng, jitter, mask_frac)
        guidance = sample_sequence(video, 1, range(0, num_frames), rng, jitter, mask_frac)
    elif mode is PairMode.SEQ_SEQ_OVERLAP:
        if num_frames < segments:
            raise ValueError("seq-seq-overlap needs at least `segments` frames")
        anchor = sample_sequence(video, segments, range(0, num_frames), rng, jitter, mask_frac)
        guidance = sample_sequence(video, segments, range(0, num_frames), rng, jitter, mask_frac)
    elif mode is PairMode.SEQ_SEQ_DISJOINT:
        if num_frames < 2 * segments:
            raise ValueError("seq-seq-disjoint needs at least 2 * segments frames")
        half = num_frames // 2
        anchor = sample_sequence(video, segments, range(0, half), rng, jitter, mask_frac)
        guidance = sample_sequence(video, segments, range(half, num_frames), rng, jitter, mask_frac)
    else:
        raise ValueError(f"unknown pair mode {mode!r}")

    return ContrastivePair(
        anchor_input=anchor,
        guidance_input=guidance,
        video_id=video.video_id,
        label=video.label,
    )
