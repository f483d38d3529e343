"""Contrastive and supervised losses.

The contrastive objective scores one anchor feature against a positive
guidance feature and K queued negatives with a temperature-scaled softmax
and penalizes the negative log-probability of the positive.  Its gradient
with respect to the anchor splits into an attraction term on the positive
(coefficient p0 - 1 < 0) and repulsion terms on every negative
(coefficients p_i > 0).

With several teachers, per-teacher objectives are combined under a weight
scheme.  Two of the schemes (``online1``, ``online2``) depend on the anchor
itself; ``online1`` is differentiable in the anchor, so its fused gradient
carries an extra softmax term, while ``online2`` uses ranks and is
piecewise constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .numerics import DegenerateInputError, EPS_NORM, as_matrix, as_vector, softmax


class WeightScheme(Enum):
    UNIFORM = "uniform"
    OFFLINE = "offline"    # fixed weights from supplied teacher accuracies
    ONLINE1 = "online1"    # softmax over per-teacher positive similarities
    ONLINE2 = "online2"    # rank of the positive among that teacher's negatives


class FusionLevel(Enum):
    LOSS = "loss"          # weighted sum of per-teacher losses
    FEATURE = "feature"    # single loss against the weighted, renormalized positive


@dataclass(frozen=True)
class InfoNCEResult:
    loss: float
    grad_anchor: np.ndarray
    probs: np.ndarray  # softmax over (positive, negatives); entry 0 is the positive


def info_nce(anchor: np.ndarray, positive: np.ndarray, negatives: np.ndarray,
             tau: float) -> InfoNCEResult:
    """Contrastive loss for one anchor.

    ``loss = -log softmax([a.p/tau, a.n_1/tau, ..., a.n_K/tau])[0]`` and the
    analytic anchor gradient is ``((p_0 - 1) p + sum_i p_i n_i) / tau``.
    """
    if tau <= 0:
        raise ValueError("temperature must be positive")
    a = as_vector(anchor, "anchor")
    p = as_vector(positive, "positive")
    n = as_matrix(negatives, "negatives")
    if p.shape != a.shape:
        raise ValueError("anchor and positive dimensions differ")
    if n.shape[1] != a.shape[0]:
        raise ValueError("negatives have the wrong feature dimension")
    logits = np.concatenate(([p @ a], n @ a)) / tau
    m = logits.max()
    # sorted reduction: the loss is bit-identical under any negative ordering
    lse = m + np.log(np.sort(np.exp(logits - m)).sum())
    probs = np.exp(logits - lse)
    grad = ((probs[0] - 1.0) * p + probs[1:] @ n) / tau
    return InfoNCEResult(loss=float(lse - logits[0]), grad_anchor=grad, probs=probs)


def teacher_weights(scheme: WeightScheme, num_teachers: int, *,
                    accuracies=None, pos_sims=None, neg_sims=None) -> np.ndarray:
    """Nonnegative per-teacher weights summing to one.

    uniform   1/N each.
    offline   supplied accuracies, renormalized.
    online1   softmax (unit temperature) over the anchor's similarity to each
              teacher's positive.
    online2   positive ranked against that teacher's negatives, ties favoring
              the positive; rank r maps to score K + 2 - r.
    """
    if num_teachers < 1:
        raise ValueError("need at least one teacher")
    n = num_teachers
    if scheme is WeightScheme.UNIFORM:
        return np.full(n, 1.0 / n)
    if scheme is WeightScheme.OFFLINE:
        if accuracies is None:
            raise ValueError("offline weighting needs per-teacher accuracies")
        acc = as_vector(np.asarray(accuracies, dtype=np.float64), "accuracies")
        if acc.shape[0] != n:
            raise ValueError(f"expected {n} accuracies, got {acc.shape[0]}")
        if np.any(acc < 0):
            raise ValueError("accuracies must be nonnegative")
        total = acc.sum()
        if total <= 0:
            raise ValueError("accuracies sum to zero")
        return acc / total
    if pos_sims is None:
        raise ValueError(f"{scheme.value} weighting needs positive similarities")
    s = as_vector(np.asarray(pos_sims, dtype=np.float64), "pos_sims")
    if s.shape[0] != n:
        raise ValueError(f"expected {n} positive similarities, got {s.shape[0]}")
    if scheme is WeightScheme.ONLINE1:
        return softmax(s)
    # online2
    if neg_sims is None:
        raise ValueError("online2 weighting needs negative similarities")
    ns = as_matrix(np.asarray(neg_sims, dtype=np.float64), "neg_sims")
    if ns.shape[0] != n:
        raise ValueError(f"expected {n} rows of negative similarities, got {ns.shape[0]}")
    k = ns.shape[1]
    ranks = 1 + (ns > s[:, None]).sum(axis=1)       # 1 = beat every negative
    scores = (k + 2 - ranks).astype(np.float64)      # in [1, K + 1]
    return scores / scores.sum()


@dataclass(frozen=True)
class ContrastiveOutcome:
    loss: float
    grad_anchor: np.ndarray
    weights: np.ndarray                   # (N,), sums to one
    pos_sims: np.ndarray                  # (N,), anchor . positive per teacher
    teacher_losses: np.ndarray | None     # per-teacher losses; None for feature fusion


def fused_contrastive(anchor: np.ndarray, positives: np.ndarray, negatives: np.ndarray,
                      tau: float, scheme: WeightScheme,
                      fusion: FusionLevel = FusionLevel.LOSS,
                      accuracies=None) -> ContrastiveOutcome:
    """Multi-teacher contrastive loss and its exact anchor gradient.

    ``positives`` is (N, d), one guidance feature per teacher; ``negatives``
    is (N, K, d), one queue snapshot per teacher.  Loss fusion takes the
    weighted sum of per-teacher losses.  Feature fusion renormalizes the
    weighted positive and scores it against all N*K negatives pooled.

    For ``online1`` the weights are a softmax in the anchor, so the gradient
    includes the corresponding chain term; the other schemes contribute none
    (constants, or piecewise constant ranks).
    """
    a = as_vector(anchor, "anchor")
    pos = as_matrix(positives, "positives")
    neg = np.asarray(negatives, dtype=np.float64)
    if neg.ndim != 3:
        raise ValueError(f"negatives must be (N, K, d), got shape {neg.shape}")
    n_teachers, k, dim = neg.shape
    if pos.shape != (n_teachers, dim) or dim != a.shape[0]:
        raise ValueError("positives, negatives and anchor disagree on shape")

    pos_sims = pos @ a
    weights = teacher_weights(scheme, n_teachers, accuracies=accuracies,
                              pos_sims=pos_sims, neg_sims=neg @ a)

    if fusion is FusionLevel.LOSS:
        per = [info_nce(a, pos[i], neg[i], tau) for i in range(n_teachers)]
        losses = np.array([r.loss for r in per])
        loss = float(weights @ losses)
        grad = np.einsum("i,id->d", weights, np.stack([r.grad_anchor for r in per]))
        if scheme is WeightScheme.ONLINE1:
            # d w_i / da = w_i (pos_i - sum_m w_m pos_m); contracting with the
            # per-teacher losses gives sum_i w_i (L_i - L̄) pos_i
            grad = grad + (weights * (losses - loss)) @ pos
        return ContrastiveOutcome(loss, grad, weights, pos_sims, losses)

    # feature fusion
    y = weights @ pos
    ny = float(np.linalg.norm(y))
    if ny <= EPS_NORM:
        raise DegenerateInputError("weighted positive collapsed to near-zero norm")
    g_fused = y / ny
    r = info_nce(a, g_fused, neg.reshape(n_teachers * k, dim), tau)
    grad = r.grad_anchor
    if scheme is WeightScheme.ONLINE1:
        d_gf = (r.probs[0] - 1.0) * a / tau                  # dL/d g_fused
        v = (d_gf - (d_gf @ g_fused) * g_fused) / ny         # dL/dy
        c = pos @ v
        grad = grad + (weights * (c - weights @ c)) @ pos
    return ContrastiveOutcome(r.loss, grad, weights, pos_sims, None)


def joint_loss(contrastive: float, ce: float, alpha: float, beta: float) -> float:
    """alpha-weighted contrastive plus beta-weighted cross-entropy."""
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    return alpha * contrastive + beta * ce


def cross_entropy(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Softmax cross-entropy for one example; returns (loss, grad wrt logits)."""
    z = as_vector(logits, "logits")
    if not 0 <= label < z.shape[0]:
        raise ValueError(f"label {label} out of range for {z.shape[0]} classes")
    m = z.max()
    lse = m + np.log(np.exp(z - m).sum())
    g = np.exp(z - lse)
    loss = float(lse - z[label])
    g[label] -= 1.0
    return loss, g


def cross_entropy_batch(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over a batch and the gradient of that mean."""
    z = as_matrix(logits, "logits")
    y = np.asarray(labels)
    if y.shape != (z.shape[0],):
        raise ValueError("labels must be one integer per row of logits")
    if np.any((y < 0) | (y >= z.shape[1])):
        raise ValueError("label out of range")
    m = z.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=1, keepdims=True))
    rows = np.arange(z.shape[0])
    loss = float((lse[:, 0] - z[rows, y]).mean())
    grad = np.exp(z - lse)
    grad[rows, y] -= 1.0
    return loss, grad / z.shape[0]
