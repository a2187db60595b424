"""Deterministic fixtures: a synthetic moving-shape condition sequence, seeded
weights, and golden tensors used by the test suite and the make-fixtures
command."""

from __future__ import annotations

import os

import numpy as np

from . import denoiser
from .numerics import Rng, write_tnsr


def moving_square_conditions(
    frames: int, height: int, width: int, channels: int = 1, size: int | None = None
) -> np.ndarray:
    """A bright square sweeping diagonally across a dark field, one step per
    frame; a stand-in for an edge/depth motion sequence in latent resolution."""
    if frames < 1 or height < 4 or width < 4:
        raise ValueError("need frames >= 1 and spatial dims >= 4")
    size = size or max(2, min(height, width) // 4)
    cond = np.zeros((frames, channels, height, width), dtype=np.float32)
    span_y = max(height - size, 1)
    span_x = max(width - size, 1)
    for i in range(frames):
        frac = i / max(frames - 1, 1)
        y = int(round(frac * span_y))
        x = int(round(frac * span_x))
        cond[i, :, y : y + size, x : x + size] = 1.0
    return cond


def write_fixtures(out_dir: str, *, weights_seed: int = 1, frames: int = 15, latent_hw: int = 32):
    """Write weights, a condition stack, and golden tensors; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    golden = os.path.join(out_dir, "golden")
    os.makedirs(golden, exist_ok=True)

    arch = denoiser.ArchSpec(latent_size=latent_hw)
    w = denoiser.init_weights(weights_seed, arch)
    manifest = os.path.join(out_dir, "weights.json")
    blob = os.path.join(out_dir, "weights.bin")
    denoiser.save_weights(w, manifest, blob)

    cond_path = os.path.join(out_dir, "conditions.tnsr")
    write_tnsr(cond_path, moving_square_conditions(frames, latent_hw, latent_hw))

    write_tnsr(os.path.join(golden, "gaussian_seed0_64.tnsr"), Rng(0).gaussian((64,)))
    write_tnsr(
        os.path.join(golden, "prompt_a_seed7.tnsr"), denoiser.embed_prompt("a", 7).matrix
    )
    return {"weights_manifest": manifest, "weights_blob": blob, "conditions": cond_path, "golden": golden}
