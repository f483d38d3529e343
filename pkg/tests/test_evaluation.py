import json

import numpy as np
import pytest

from dtg.corpus import CorpusSpec, generate_corpus
from dtg.evaluation import (ProbeConfig, class_overlap, knn_top1, linear_probe,
                            project_2d, stratified_split,
                            teacher_video_features, teacher_view_accuracies,
                            video_features, write_overlap_json,
                            write_probe_json, write_projection_csv)
from dtg.model import TeacherBank, build_student, build_teacher
from dtg.numerics import DegenerateInputError


def _one_hot_features(n_per_class, n_classes, dim=None):
    dim = dim or n_classes
    labels = np.repeat(np.arange(n_classes), n_per_class)
    feats = np.zeros((labels.size, dim))
    feats[np.arange(labels.size), labels] = 1.0
    return feats, labels


# --- stratified split ---

def test_split_partitions_and_keeps_every_class():
    labels = np.repeat(np.arange(3), 10)
    tr, te = stratified_split(labels, 0.8, seed=0)
    assert np.array_equal(np.sort(np.concatenate([tr, te])), np.arange(30))
    assert set(labels[tr]) == set(labels[te]) == {0, 1, 2}
    assert tr.size == 24 and te.size == 6


def test_split_deterministic_and_seed_sensitive():
    labels = np.repeat(np.arange(4), 8)
    assert np.array_equal(stratified_split(labels, 0.75, 3)[0],
                          stratified_split(labels, 0.75, 3)[0])
    alts = {tuple(stratified_split(labels, 0.75, s)[0]) for s in range(10)}
    assert len(alts) > 1


def test_split_rejects_singleton_class():
    with pytest.raises(ValueError):
        stratified_split(np.array([0, 0, 1]), 0.5, seed=0)


# --- linear probe ---

def test_probe_one_hot_is_perfect():
    feats, labels = _one_hot_features(10, 4)
    result = linear_probe(feats, labels)
    assert result.top1 == 1.0
    assert result.per_class == (1.0, 1.0, 1.0, 1.0)


def test_probe_noise_features_are_chance_level():
    rng = np.random.default_rng(0)
    labels = np.repeat(np.arange(10), 25)
    scores = [linear_probe(rng.standard_normal((250, 16)), labels,
                           config=ProbeConfig(seed=s)).top1 for s in range(3)]
    assert 0.1 - 0.05 <= np.mean(scores) <= 0.1 + 0.05


def test_probe_duplicated_columns_change_nothing():
    rng = np.random.default_rng(1)
    feats = rng.standard_normal((60, 6))
    labels = np.repeat(np.arange(3), 20)
    base = linear_probe(feats, labels).top1
    doubled = linear_probe(np.hstack([feats, feats]), labels).top1
    assert abs(base - doubled) < 1e-6


def test_probe_invariant_to_coordinate_permutation():
    rng = np.random.default_rng(2)
    feats = rng.standard_normal((60, 8))
    labels = np.repeat(np.arange(3), 20)
    perm = rng.permutation(8)
    assert linear_probe(feats, labels).top1 == linear_probe(feats[:, perm], labels).top1


def test_probe_top1_is_weighted_mean_of_per_class():
    rng = np.random.default_rng(3)
    feats = rng.standard_normal((40, 6))
    labels = np.repeat(np.arange(4), 10)
    result = linear_probe(feats, labels)
    _, te = stratified_split(labels, 0.8, result.split_seed)
    counts = np.bincount(labels[te])
    weighted = float(np.dot(result.per_class, counts) / counts.sum())
    assert result.top1 == pytest.approx(weighted, abs=1e-12)


# --- kNN ---

def test_knn_perfect_on_collapsed_classes():
    spec = CorpusSpec(2, 6, 4, 10, 4, video_spread=0.0, frame_noise=0.0, seed=5)
    corpus = generate_corpus(spec)
    teacher = build_teacher(corpus, 1.0, embed_dim=6, seed=0)
    feats = teacher_video_features(teacher, corpus)
    labels = np.array([v.label for v in corpus.videos])
    assert knn_top1(feats, labels, k=5) == 1.0


def test_knn_duplicated_points_k1():
    rng = np.random.default_rng(6)
    feats = rng.standard_normal((20, 5))
    labels = np.arange(20) % 4
    doubled = np.concatenate([feats, feats])
    assert knn_top1(doubled, np.concatenate([labels, labels]), k=1) == 1.0


def test_knn_random_features_near_chance():
    rng = np.random.default_rng(7)
    feats = rng.standard_normal((300, 12))
    labels = np.repeat(np.arange(3), 100)
    acc = knn_top1(feats, labels, k=5)
    assert abs(acc - 1 / 3) < 0.1


def test_knn_validates_k():
    feats = np.eye(4)
    labels = np.array([0, 0, 1, 1])
    with pytest.raises(ValueError):
        knn_top1(feats, labels, k=0)
    with pytest.raises(ValueError):
        knn_top1(feats, labels, k=4)


# --- class overlap ---

def test_overlap_zero_for_collapsed_classes():
    feats = np.array([[0.0, 0], [0, 0], [5, 5], [5, 5]])
    labels = np.array([0, 0, 1, 1])
    assert class_overlap(feats, labels) == 0.0


def test_overlap_near_one_under_label_shuffling():
    rng = np.random.default_rng(8)
    feats = rng.standard_normal((60, 4))
    labels = np.repeat(np.arange(3), 20)
    ratios = []
    for _ in range(30):
        ratios.append(class_overlap(feats, rng.permutation(labels)))
    assert abs(np.mean(ratios) - 1.0) < 0.05


def test_overlap_below_one_for_separated_gaussians():
    rng = np.random.default_rng(9)
    a = rng.standard_normal((30, 3)) + np.array([10.0, 0, 0])
    b = rng.standard_normal((30, 3)) - np.array([10.0, 0, 0])
    feats = np.vstack([a, b])
    labels = np.repeat([0, 1], 30)
    assert class_overlap(feats, labels) < 1.0


def test_overlap_rotation_and_scale_invariant():
    rng = np.random.default_rng(10)
    feats = rng.standard_normal((24, 5))
    labels = np.repeat(np.arange(2), 12)
    base = class_overlap(feats, labels)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    assert abs(class_overlap(feats @ q * 3.7, labels) - base) < 1e-10


def test_overlap_identical_points_degenerate():
    feats = np.ones((6, 3))
    labels = np.repeat([0, 1], 3)
    with pytest.raises(DegenerateInputError):
        class_overlap(feats, labels)


# --- 2D projection ---

def test_project_2d_preserves_planar_data():
    rng = np.random.default_rng(11)
    feats = rng.standard_normal((40, 2))
    coords = project_2d(feats)
    # distances are preserved: the projection is a rotation of centered data
    d_orig = np.linalg.norm(feats[:, None] - feats[None], axis=2)
    d_proj = np.linalg.norm(coords[:, None] - coords[None], axis=2)
    assert np.abs(d_orig - d_proj).max() < 1e-10


def test_project_2d_rank_one_second_coordinate_zero():
    t = np.linspace(-3, 3, 25)
    direction = np.array([1.0, 2.0, -0.5])
    feats = t[:, None] * direction[None]
    coords = project_2d(feats)
    assert np.abs(coords[:, 1]).max() < 1e-10


def test_project_2d_isotropic_variances_match():
    rng = np.random.default_rng(12)
    feats = rng.standard_normal((4000, 3))
    coords = project_2d(feats)
    v = coords.var(axis=0)
    assert v[0] >= v[1]
    assert v[0] / v[1] < 1.1


def test_project_2d_sign_convention_stable():
    rng = np.random.default_rng(13)
    feats = rng.standard_normal((30, 6))
    assert np.array_equal(project_2d(feats), project_2d(feats))


def test_project_2d_minimal_reconstruction_error():
    rng = np.random.default_rng(14)
    feats = rng.standard_normal((25, 4)) @ np.diag([3.0, 2.0, 1.0, 0.5])
    centered = feats - feats.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    pca_err = ((centered - centered @ vt[:2].T @ vt[:2]) ** 2).sum()
    for _ in range(50):
        q, _ = np.linalg.qr(rng.standard_normal((4, 2)))
        err = ((centered - centered @ q @ q.T) ** 2).sum()
        assert pca_err <= err + 1e-9


def test_project_2d_rank_zero_degenerate():
    with pytest.raises(DegenerateInputError):
        project_2d(np.ones((5, 3)))


# --- teacher view accuracies ---

def test_view_accuracies_order_teachers_by_alignment():
    spec = CorpusSpec(4, 10, 8, 16, 8, video_spread=1.0, frame_noise=0.2, seed=15)
    corpus = generate_corpus(spec)
    bank = TeacherBank(teachers=(
        build_teacher(corpus, 1.0, embed_dim=8, seed=1, name="hi"),
        build_teacher(corpus, 0.0, embed_dim=8, seed=1, name="lo"),
    ))
    accs = teacher_view_accuracies(corpus, bank, seed=0)
    assert len(accs) == 2
    assert all(0.0 <= a <= 1.0 for a in accs)
    assert accs[0] > accs[1]
    assert accs == teacher_view_accuracies(corpus, bank, seed=0)


# --- student feature export ---

def test_video_features_unit_rows(tiny_corpus):
    enc = build_student(tiny_corpus.spec.frame_dim, 8, 5, seed=0)
    feats = video_features(enc, tiny_corpus)
    assert feats.shape == (len(tiny_corpus.videos), 5)
    assert np.abs(np.linalg.norm(feats, axis=1) - 1.0).max() < 1e-10


# --- artifact writers ---

def test_probe_json_self_describing(tmp_path):
    feats, labels = _one_hot_features(5, 3)
    result = linear_probe(feats, labels)
    path = tmp_path / "probe.json"
    write_probe_json(result, path, {"seed": 9}, seed=9, extras={"knn_top1": 0.5})
    doc = json.loads(path.read_text())
    assert doc["top1"] == 1.0
    assert doc["seed"] == 9
    assert doc["config"] == {"seed": 9}
    assert doc["knn_top1"] == 0.5


def test_overlap_json_self_describing(tmp_path):
    path = tmp_path / "overlap.json"
    write_overlap_json(0.42, path, {"seed": 3}, seed=3)
    doc = json.loads(path.read_text())
    assert doc["class_overlap"] == 0.42
    assert doc["seed"] == 3 and doc["config"] == {"seed": 3}


def test_projection_csv_layout(tmp_path):
    path = tmp_path / "projection.csv"
    write_projection_csv(path, [7, 8], [0, 1], np.array([[1.0, 2.0], [3.0, 4.0]]),
                         seed=5)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# seed=5")
    assert lines[1] == "video_id,label,x,y"
    assert lines[2].split(",") == ["7", "0", "1.0", "2.0"]
