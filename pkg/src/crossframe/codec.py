"""Invertible linear codec between RGB video and latent video.

Stands in for a learned autoencoder: an f x f pixel-unshuffle (blocks become
channels) followed by a fixed orthogonal channel mix. decode is the exact
inverse of encode, which is what lets the smoother's algebra be tested to
machine precision instead of "approximately reconstructs".

Layouts: RGB video (frames, 3, H, W); latent video (frames, 3*f*f, H/f, W/f).
Block pixel (i, j) of channel c maps to latent channel c*f*f + i*f + j before
mixing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import Rng


@dataclass(frozen=True)
class CodecSpec:
    factor: int = 2
    seed: int = 0
    mix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError("spatial factor must be >= 1")
        c = 3 * self.factor * self.factor
        g = Rng(self.seed ^ 0xC0DEC).gaussian((c, c)).astype(np.float64)
        q, r = np.linalg.qr(g)
        q = q * np.sign(np.diag(r))  # fix QR sign ambiguity for determinism
        object.__setattr__(self, "mix", q.astype(np.float32))

    @property
    def latent_channels(self) -> int:
        return 3 * self.factor * self.factor


def encode(x: np.ndarray, spec: CodecSpec) -> np.ndarray:
    """RGB (N, 3, H, W) -> latent (N, 3f^2, H/f, W/f)."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 4 or x.shape[1] != 3:
        raise ValueError(f"expected RGB video (N, 3, H, W), got {x.shape}")
    f = spec.factor
    n, c, h, w = x.shape
    if h % f or w % f:
        raise ValueError(f"spatial dims {h}x{w} not divisible by factor {f}")
    blocks = x.reshape(n, c, h // f, f, w // f, f)
    stacked = blocks.transpose(0, 1, 3, 5, 2, 4).reshape(n, c * f * f, h // f, w // f)
    return np.einsum("dc,nchw->ndhw", spec.mix, stacked, optimize=True).astype(np.float32)


def decode(z: np.ndarray, spec: CodecSpec) -> np.ndarray:
    """Latent (N, 3f^2, h, w) -> RGB (N, 3, h*f, w*f); exact inverse of encode."""
    z = np.asarray(z, dtype=np.float32)
    f = spec.factor
    cz = spec.latent_channels
    if z.ndim != 4 or z.shape[1] != cz:
        raise ValueError(f"expected latent video (N, {cz}, h, w), got {z.shape}")
    n, _, h, w = z.shape
    unmixed = np.einsum("dc,ndhw->nchw", spec.mix, z, optimize=True)
    blocks = unmixed.reshape(n, 3, f, f, h, w)
    return blocks.transpose(0, 1, 4, 2, 5, 3).reshape(n, 3, h * f, w * f).astype(np.float32)
