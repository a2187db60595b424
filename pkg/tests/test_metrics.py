import numpy as np
import pytest

from crossframe.denoiser import PromptEmbedding, embed_prompt
from crossframe.metrics import PatchEmbedder, frame_consistency, prompt_consistency
from crossframe.numerics import Rng


class StubEmbedder:
    """Hand-built unit embeddings keyed by frame value; prompt maps to (1, 0).

    The vectors are chosen so the float64 cosine arithmetic lands exactly on
    the hand-derived scores: dot((1,0),(0.8,0.6)) = 0.8 and |(0.8,0.6)|^2
    evaluates to exactly 1.0 in float64.
    """

    table = {
        0: np.array([1.0, 0.0]),
        1: np.array([0.8, 0.6]),
        2: np.array([0.0, 1.0]),
    }

    def embed_frame(self, frame):
        return self.table[int(round(float(frame.ravel()[0])))]

    def embed_prompt(self, tau):
        return np.array([1.0, 0.0])


def tagged_video(tags):
    v = np.zeros((len(tags), 3, 8, 8), dtype=np.float32)
    for i, t in enumerate(tags):
        v[i] = t
    return v


def dummy_tau():
    return PromptEmbedding(token_count=0, matrix=np.zeros((16, 16), dtype=np.float32))


# ---------------------------------------------------------------- hand cases

def test_constant_video_scores_exactly_100():
    video = np.full((4, 3, 16, 16), 0.5, dtype=np.float32)
    emb = PatchEmbedder(seed=0, grid=8)
    assert frame_consistency(video, emb) == 100.0


def test_orthogonal_embeddings_score_zero():
    assert frame_consistency(tagged_video([0, 2]), StubEmbedder()) == 0.0


def test_stub_pairwise_cosines_give_exactly_70():
    # consecutive cosines (0.8, 0.6) -> mean 0.7 -> 70.0, exact in float64
    assert frame_consistency(tagged_video([0, 1, 2]), StubEmbedder()) == 70.0


def test_prompt_consistency_hand_cases():
    stub = StubEmbedder()
    assert prompt_consistency(tagged_video([0, 0]), dummy_tau(), stub) == 100.0
    assert prompt_consistency(tagged_video([0, 2]), dummy_tau(), stub) == 50.0
    assert prompt_consistency(tagged_video([2, 2]), dummy_tau(), stub) == 0.0


# ---------------------------------------------------------------- contracts

def test_frame_consistency_needs_two_frames():
    with pytest.raises(ValueError):
        frame_consistency(np.zeros((1, 3, 8, 8), np.float32), StubEmbedder())


def test_scores_bounded():
    emb = PatchEmbedder(seed=1, grid=4)
    for seed in range(5):
        video = np.clip(Rng(seed).gaussian((5, 3, 8, 8)) * 0.2 + 0.5, 0, 1)
        fc = frame_consistency(video, emb)
        pc = prompt_consistency(video, embed_prompt("x", 3), emb)
        assert -100.0 <= fc <= 100.0
        assert -100.0 <= pc <= 100.0


def test_reversal_leaves_frame_consistency_unchanged():
    emb = PatchEmbedder(seed=2, grid=4)
    video = np.clip(Rng(3).gaussian((6, 3, 8, 8)) * 0.2 + 0.5, 0, 1)
    assert frame_consistency(video, emb) == pytest.approx(
        frame_consistency(video[::-1], emb), abs=1e-12
    )


def test_monotone_degradation_under_noise():
    emb = PatchEmbedder(seed=4, grid=4)
    base = np.clip(Rng(5).gaussian((6, 3, 8, 8)) * 0.1 + 0.5, 0, 1)
    amplitudes = [0.0, 0.25, 0.5, 1.0]
    means = []
    for amp in amplitudes:
        scores = []
        for seed in range(30):
            noisy = base + np.float32(amp) * Rng(1000 + seed).gaussian(base.shape)
            scores.append(frame_consistency(noisy, emb))
        means.append(float(np.mean(scores)))
    assert all(means[i + 1] <= means[i] + 1e-9 for i in range(len(means) - 1)), means


# ---------------------------------------------------------------- embedder

def test_embedder_outputs_unit_norm():
    emb = PatchEmbedder(seed=6, grid=8)
    v = emb.embed_frame(Rng(7).gaussian((3, 16, 16)))
    assert abs(float(np.linalg.norm(v)) - 1.0) < 1e-6
    p = emb.embed_prompt(embed_prompt("hello", 7))
    assert abs(float(np.linalg.norm(p)) - 1.0) < 1e-6


def test_embedder_deterministic_and_seed_sensitive():
    frame = Rng(8).gaussian((3, 16, 16))
    a = PatchEmbedder(seed=1).embed_frame(frame)
    b = PatchEmbedder(seed=1).embed_frame(frame)
    c = PatchEmbedder(seed=2).embed_frame(frame)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_embedder_handles_all_black_frames():
    emb = PatchEmbedder(seed=9, grid=4)
    v = emb.embed_frame(np.zeros((3, 8, 8), dtype=np.float32))
    assert abs(float(np.linalg.norm(v)) - 1.0) < 1e-6


def test_embedder_rejects_bad_shapes():
    emb = PatchEmbedder(seed=10, grid=4)
    with pytest.raises(ValueError):
        emb.embed_frame(np.zeros((1, 8, 8), dtype=np.float32))
    with pytest.raises(ValueError):
        emb.embed_frame(np.zeros((3, 6, 6), dtype=np.float32))
