"""Scaled dot-product attention and the cross-frame key/value constructions.

Frame tokens are float32 arrays of shape (frames, tokens_per_frame, model_dim).
The four mechanisms differ only in which frames supply keys and values; the
query is always the frame's own tokens. Key-frame and clip attention are the
two building blocks of the hierarchical long-video sampler.

A module-level ScoreCounter records the size of every attention score matrix
(query rows x key rows), so memory/compute footprints of the mechanisms can be
compared without timing noise.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .numerics import softmax_rows


class Mechanism(Enum):
    INDIVIDUAL = "individual"  # no interaction between frames
    FIRST_ONLY = "first-only"  # every frame attends to frame 0
    SPARSE_CAUSAL = "sparse-causal"  # frame 0 plus the previous frame
    FULLY = "fully"  # all frames concatenated into one "large image"


@dataclass(frozen=True)
class AttentionParams:
    """Query/key/value projections, each (model_dim, head_dim). Single head."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    def __post_init__(self):
        if not (self.w_q.shape == self.w_k.shape == self.w_v.shape):
            raise ValueError("w_q, w_k, w_v must share one shape")
        if self.w_q.ndim != 2 or self.w_q.shape[1] < 1:
            raise ValueError(f"projections must be (model_dim, d) with d >= 1, got {self.w_q.shape}")

    @property
    def head_dim(self) -> int:
        return self.w_q.shape[1]


class ScoreCounter:
    """Tracks attention score-matrix entries: running total and per-call peak."""

    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self):
        with self._lock:
            self.total = 0
            self.peak = 0
            self.calls = 0

    def record(self, q_rows: int, k_rows: int):
        entries = q_rows * k_rows
        with self._lock:
            self.total += entries
            self.peak = max(self.peak, entries)
            self.calls += 1


score_counter = ScoreCounter()


def scaled_dot_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray, d: int) -> np.ndarray:
    """softmax(q k^T / sqrt(d)) v for rank-2 q, k, v."""
    q = np.asarray(q, dtype=np.float32)
    k = np.asarray(k, dtype=np.float32)
    v = np.asarray(v, dtype=np.float32)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ValueError("q, k, v must be rank 2")
    if q.shape[1] != d or k.shape[1] != d:
        raise ValueError(f"q/k width must equal d={d}, got {q.shape[1]} and {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ValueError(f"k rows ({k.shape[0]}) must match v rows ({v.shape[0]})")
    score_counter.record(q.shape[0], k.shape[0])
    scores = (q @ k.T) * np.float32(1.0 / math.sqrt(d))
    return softmax_rows(scores) @ v


def _check_frames(frames: np.ndarray) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float32)
    if frames.ndim != 3:
        raise ValueError(f"frame tokens must be (frames, tokens, dim), got shape {frames.shape}")
    if frames.shape[0] < 1:
        raise ValueError("empty frame stack")
    return frames


def _kv_frames(mech: Mechanism, i: int, n: int) -> list[int]:
    if mech is Mechanism.INDIVIDUAL:
        return [i]
    if mech is Mechanism.FIRST_ONLY:
        return [0]
    if mech is Mechanism.SPARSE_CAUSAL:
        # frame 0 plus the previous frame, deduplicated at the boundary
        return [0] if i <= 1 else [0, i - 1]
    if mech is Mechanism.FULLY:
        return list(range(n))
    raise ValueError(f"unknown mechanism {mech!r}")


def cross_frame_attend(
    frames: np.ndarray, mech: Mechanism, params: AttentionParams
) -> np.ndarray:
    """Attention with mechanism-selected key/value frames.

    Returns (frames, tokens, head_dim): attended values, before any output
    projection (callers own that). The fully mechanism runs as one attention
    call over the frame concatenation (the "large image"); the sparser
    mechanisms run one call per query frame, which is exactly their memory
    advantage.
    """
    frames = _check_frames(frames)
    n, tokens, _ = frames.shape
    d = params.head_dim
    if mech is Mechanism.FULLY:
        flat = frames.reshape(n * tokens, -1)
        out = scaled_dot_attention(flat @ params.w_q, flat @ params.w_k, flat @ params.w_v, d)
        return out.reshape(n, tokens, d)
    out = np.empty((n, tokens, d), dtype=np.float32)
    for i in range(n):
        src = _kv_frames(mech, i, n)
        kv = frames[src[0]] if len(src) == 1 else np.concatenate([frames[j] for j in src], axis=0)
        out[i] = scaled_dot_attention(frames[i] @ params.w_q, kv @ params.w_k, kv @ params.w_v, d)
    return out


def keyframe_attend(keys: np.ndarray, params: AttentionParams) -> np.ndarray:
    """Joint attention over the key frames: the fully mechanism, by definition."""
    return cross_frame_attend(keys, Mechanism.FULLY, params)


def clip_attend(clip: np.ndarray, key_pair: np.ndarray, params: AttentionParams) -> np.ndarray:
    """Clip frames query the concatenated tokens of their two bounding key frames."""
    clip = _check_frames(clip)
    key_pair = _check_frames(key_pair)
    if key_pair.shape[0] != 2:
        raise ValueError(f"key_pair must hold exactly 2 frames, got {key_pair.shape[0]}")
    if key_pair.shape[2] != clip.shape[2]:
        raise ValueError("clip and key_pair token dims differ")
    d = params.head_dim
    kv = key_pair.reshape(-1, key_pair.shape[2])
    q = clip.reshape(-1, clip.shape[2]) @ params.w_q
    out = scaled_dot_attention(q, kv @ params.w_k, kv @ params.w_v, d)
    return out.reshape(clip.shape[0], clip.shape[1], d)
