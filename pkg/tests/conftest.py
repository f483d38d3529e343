import numpy as np
import pytest

from dtg.corpus import CorpusSpec, generate_corpus
from dtg.model import TeacherBank, build_teacher


@pytest.fixture(scope="session")
def tiny_spec():
    return CorpusSpec(num_classes=2, videos_per_class=3, frames_per_video=8,
                      frame_dim=8, signal_dim=4, video_spread=1.0,
                      frame_noise=0.3, seed=7)


@pytest.fixture(scope="session")
def tiny_corpus(tiny_spec):
    return generate_corpus(tiny_spec)


@pytest.fixture(scope="session")
def tiny_bank(tiny_corpus):
    teachers = [build_teacher(tiny_corpus, rho, embed_dim=6, seed=11, name=f"t{i}")
                for i, rho in enumerate((0.9, 0.3))]
    return TeacherBank(teachers=tuple(teachers))


def unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
