"""Trainable student encoder and frozen teacher bank.

The student mean-pools a frame sequence, passes it through two hidden
affine+ReLU layers and a final affine to the embedding dimension, then
L2-normalizes.  Teachers are frozen: they mean-pool, blend the signal and
nuisance projections of the input by an alignment knob rho, apply a fixed
random affine readout to the shared embedding dimension, and normalize.
rho=1 reads only the class-signal subspace, rho=0 only nuisance.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .binio import RecordReader, RecordWriter
from .numerics import EPS_NORM, DegenerateInputError
from .sampling import FrameSequence
from .seeding import substream

CHECKPOINT_HEADER = "DTGM v1"


def _as_frames(seq) -> np.ndarray:
    x = seq.features if isinstance(seq, FrameSequence) else np.asarray(seq, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a (T, D) frame array, got shape {x.shape}")
    return x


@dataclass
class StudentEncoder:
    W1: np.ndarray  # (h, D)
    b1: np.ndarray  # (h,)
    W2: np.ndarray  # (h, h)
    b2: np.ndarray  # (h,)
    W3: np.ndarray  # (d, h)
    b3: np.ndarray  # (d,)

    @property
    def frame_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def embed_dim(self) -> int:
        return self.W3.shape[0]

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        return [(n, getattr(self, n)) for n in ("W1", "b1", "W2", "b2", "W3", "b3")]

    def param_count(self) -> int:
        return sum(p.size for _, p in self.parameters())

    def set_parameters(self, arrays) -> None:
        for (name, old), new in zip(self.parameters(), arrays):
            if new.shape != old.shape:
                raise ValueError(f"shape mismatch for {name}")
            setattr(self, name, np.asarray(new, dtype=np.float64))

    def copy(self) -> "StudentEncoder":
        return StudentEncoder(*(p.copy() for _, p in self.parameters()))


def build_student(frame_dim: int, hidden_dim: int, embed_dim: int, seed: int) -> StudentEncoder:
    """Fresh student with weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    if min(frame_dim, hidden_dim, embed_dim) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = substream(seed, "student-init")

    def layer(fan_out, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, (fan_out, fan_in))
        b = rng.uniform(-bound, bound, fan_out)
        return w, b

    w1, b1 = layer(hidden_dim, frame_dim)
    w2, b2 = layer(hidden_dim, hidden_dim)
    w3, b3 = layer(embed_dim, hidden_dim)
    return StudentEncoder(w1, b1, w2, b2, w3, b3)


def forward_batch(enc: StudentEncoder, pooled: np.ndarray, normalize: bool = True):
    """Forward pass on mean-pooled inputs (B, D) -> features (B, d) plus the
    activation cache consumed by ``backward_batch``."""
    x = np.asarray(pooled, dtype=np.float64)
    z1 = x @ enc.W1.T + enc.b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ enc.W2.T + enc.b2
    a2 = np.maximum(z2, 0.0)
    z3 = a2 @ enc.W3.T + enc.b3
    if normalize:
        norms = np.linalg.norm(z3, axis=1, keepdims=True)
        if np.any(norms <= EPS_NORM):
            raise DegenerateInputError("pre-normalization feature has near-zero norm")
        out = z3 / norms
    else:
        norms = None
        out = z3
    cache = (x, z1, a1, z2, a2, out, norms)
    return out, cache


def backward_batch(enc: StudentEncoder, cache, d_out: np.ndarray) -> dict[str, np.ndarray]:
    """Hand-derived reverse pass; returns gradients summed over the batch."""
    x, z1, a1, z2, a2, out, norms = cache
    if norms is not None:
        # through y = z / |z|:  dz = (dy - (dy . y) y) / |z|
        inner = np.sum(d_out * out, axis=1, keepdims=True)
        dz3 = (d_out - inner * out) / norms
    else:
        dz3 = d_out
    grads = {}
    grads["W3"] = dz3.T @ a2
    grads["b3"] = dz3.sum(axis=0)
    da2 = dz3 @ enc.W3
    dz2 = da2 * (z2 > 0)
    grads["W2"] = dz2.T @ a1
    grads["b2"] = dz2.sum(axis=0)
    da1 = dz2 @ enc.W2
    dz1 = da1 * (z1 > 0)
    grads["W1"] = dz1.T @ x
    grads["b1"] = dz1.sum(axis=0)
    return grads


def pool_frames(seq) -> np.ndarray:
    # per-column sorted reduction: the mean is bit-identical under any
    # reordering of the frames
    return np.sort(_as_frames(seq), axis=0).mean(axis=0)


def embed_student(enc: StudentEncoder, seq, normalize: bool = True) -> np.ndarray:
    """Anchor feature of one frame sequence (unit norm unless disabled)."""
    x = pool_frames(seq)
    if x.shape[0] != enc.frame_dim:
        raise ValueError(f"frame width {x.shape[0]} does not match encoder dim {enc.frame_dim}")
    out, _ = forward_batch(enc, x[None, :], normalize=normalize)
    return out[0]


@dataclass(frozen=True)
class Teacher:
    """Frozen encoder: frame mean -> alignment blend -> fixed affine -> unit norm."""

    name: str
    rho: float
    weight: np.ndarray  # (d, D), already includes the blend
    bias: np.ndarray    # (d,)

    @property
    def embed_dim(self) -> int:
        return self.weight.shape[0]


def _semi_orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    # Haar-distributed rather than plain Gaussian: an isometric readout keeps
    # every teacher's noise amplification identical, so differences between
    # teachers come only from their alignment rho.
    n = max(rows, cols)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    return q[:rows, :] if rows <= cols else q[:, :cols]


def build_teacher(corpus, rho: float, embed_dim: int, seed: int, name: str = "teacher") -> Teacher:
    """Teacher reading rho * signal projection + (1 - rho) * nuisance projection
    of the corpus feature space, through a fixed random isometry."""
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    if embed_dim < 1:
        raise ValueError("embed_dim must be >= 1")
    bs, bn = corpus.signal_basis, corpus.nuisance_basis
    dim = bs.shape[1]
    blend = rho * (bs.T @ bs) + (1.0 - rho) * (bn.T @ bn)
    rng = substream(seed, "teacher-init")
    w = _semi_orthogonal(rng, embed_dim, dim)
    b = 0.1 * rng.standard_normal(embed_dim)
    return Teacher(name=name, rho=float(rho), weight=w @ blend, bias=b)


def teacher_features(teacher: Teacher, pooled: np.ndarray) -> np.ndarray:
    """Guidance features for mean-pooled inputs (B, D) -> unit rows (B, d)."""
    z = np.asarray(pooled, dtype=np.float64) @ teacher.weight.T + teacher.bias
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    if np.any(norms <= EPS_NORM):
        raise DegenerateInputError("guidance feature has near-zero norm")
    return z / norms


@dataclass(frozen=True)
class TeacherBank:
    teachers: tuple[Teacher, ...]

    def __post_init__(self):
        if not self.teachers:
            raise ValueError("bank needs at least one teacher")
        dims = {t.embed_dim for t in self.teachers}
        if len(dims) != 1:
            raise ValueError(f"teachers disagree on embed dim: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.teachers)

    @property
    def embed_dim(self) -> int:
        return self.teachers[0].embed_dim


def embed_teacher(bank: TeacherBank, k: int, seq) -> np.ndarray:
    """Guidance feature g_k for one sequence; teachers receive no gradients."""
    if not 0 <= k < len(bank):
        raise IndexError(f"teacher index {k} out of range for bank of {len(bank)}")
    return teacher_features(bank.teachers[k], pool_frames(seq)[None, :])[0]


@dataclass
class ClassifierHead:
    """Single affine layer on the anchor feature, used in joint training."""

    W: np.ndarray  # (C, d)
    b: np.ndarray  # (C,)

    @property
    def num_classes(self) -> int:
        return self.W.shape[0]

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        return [("head.W", self.W), ("head.b", self.b)]

    def logits(self, feats: np.ndarray) -> np.ndarray:
        return feats @ self.W.T + self.b


def build_head(embed_dim: int, num_classes: int, seed: int) -> ClassifierHead:
    rng = substream(seed, "head-init")
    bound = 1.0 / np.sqrt(embed_dim)
    return ClassifierHead(
        W=rng.uniform(-bound, bound, (num_classes, embed_dim)),
        b=rng.uniform(-bound, bound, num_classes),
    )


def save_student(path, enc: StudentEncoder, head: ClassifierHead | None = None) -> None:
    """Checkpoint: ``DTGM v1`` header, layer dims, row-major float64 weights,
    optional classifier head, FNV-1a checksum."""
    w = RecordWriter(CHECKPOINT_HEADER)
    w.u32(enc.frame_dim)
    w.u32(enc.hidden_dim)
    w.u32(enc.embed_dim)
    for _, p in enc.parameters():
        w.array(p)
    w.u8(0 if head is None else 1)
    if head is not None:
        w.u32(head.num_classes)
        w.array(head.W)
        w.array(head.b)
    Path(path).write_bytes(w.finish())


def load_student(path) -> tuple[StudentEncoder, ClassifierHead | None]:
    r = RecordReader(Path(path).read_bytes(), CHECKPOINT_HEADER)
    dim, hidden, embed = r.u32(), r.u32(), r.u32()
    enc = StudentEncoder(
        W1=r.array((hidden, dim)),
        b1=r.array((hidden,)),
        W2=r.array((hidden, hidden)),
        b2=r.array((hidden,)),
        W3=r.array((embed, hidden)),
        b3=r.array((embed,)),
    )
    head = None
    if r.u8():
        classes = r.u32()
        head = ClassifierHead(W=r.array((classes, embed)), b=r.array((classes,)))
    r.expect_end()
    return enc, head
