"""Frame- and prompt-consistency scores with a pluggable embedder.

The default embedder replaces a pretrained vision/text encoder with a seeded
random projection: frames are average-pooled onto a fixed patch grid,
flattened, augmented with a constant bias feature (so degenerate all-zero
inputs still embed), projected, and L2-normalised. Scores from it are
internally comparable across runs of this package but are on a different
scale from any pretrained encoder's numbers; reports must carry the embedder
identifier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .denoiser import PromptEmbedding
from .numerics import Rng, cosine_similarity


@dataclass
class PatchEmbedder:
    """frame -> unit vector and prompt-embedding -> unit vector, seeded."""

    seed: int = 0
    grid: int = 8
    out_dim: int = 32
    prompt_dim: int = 16
    max_prompt_tokens: int = 16

    def __post_init__(self):
        rng = Rng(self.seed ^ 0xE3B)
        feat = 3 * self.grid * self.grid + 1
        self._frame_proj = rng.gaussian((feat, self.out_dim)).astype(np.float64)
        pfeat = self.max_prompt_tokens * self.prompt_dim + 1
        self._prompt_proj = rng.gaussian((pfeat, self.out_dim)).astype(np.float64)

    @property
    def identifier(self) -> str:
        return f"patch-projection(grid={self.grid}, dim={self.out_dim}, seed={self.seed})"

    def embed_frame(self, frame: np.ndarray) -> np.ndarray:
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim != 3 or frame.shape[0] != 3:
            raise ValueError(f"expected frame (3, H, W), got {frame.shape}")
        c, h, w = frame.shape
        if h % self.grid or w % self.grid:
            raise ValueError(f"frame dims {h}x{w} not divisible by pool grid {self.grid}")
        pooled = frame.reshape(c, self.grid, h // self.grid, self.grid, w // self.grid).mean(
            axis=(2, 4)
        )
        feat = np.concatenate([pooled.ravel(), [1.0]])
        v = feat @ self._frame_proj
        return v / np.linalg.norm(v)

    def embed_prompt(self, tau: PromptEmbedding) -> np.ndarray:
        if tau.matrix.shape != (self.max_prompt_tokens, self.prompt_dim):
            raise ValueError(
                f"prompt embedding shape {tau.matrix.shape} does not match embedder "
                f"({self.max_prompt_tokens}, {self.prompt_dim})"
            )
        feat = np.concatenate([tau.matrix.astype(np.float64).ravel(), [1.0]])
        v = feat @ self._prompt_proj
        return v / np.linalg.norm(v)


def frame_consistency(video: np.ndarray, emb) -> float:
    """100 x mean cosine similarity over consecutive frame-embedding pairs."""
    video = np.asarray(video)
    if video.shape[0] < 2:
        raise ValueError("frame consistency needs at least 2 frames")
    es = [emb.embed_frame(f) for f in video]
    sims = [cosine_similarity(es[i], es[i + 1]) for i in range(len(es) - 1)]
    return 100.0 * float(np.mean(sims))


def prompt_consistency(video: np.ndarray, tau: PromptEmbedding, emb) -> float:
    """100 x mean cosine similarity between each frame embedding and the prompt's."""
    video = np.asarray(video)
    if video.shape[0] < 1:
        raise ValueError("prompt consistency needs at least 1 frame")
    pe = emb.embed_prompt(tau)
    sims = [cosine_similarity(emb.embed_frame(f), pe) for f in video]
    return 100.0 * float(np.mean(sims))
