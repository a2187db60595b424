"""End-to-end samplers: the short-video loop, the hierarchical long-video
sampler, and the mechanism ablation runner.

The long-video sampler works per timestep in two phases. Key frames (every
clip_spacing-th frame plus the last) are denoised jointly with full key-to-key
attention; each clip's interior frames are then denoised in a window
[key_lo, interiors..., key_hi] whose attention keys/values come only from the
two bounding key frames, read at their pre-step values. Clips therefore never
see each other and may run in parallel; key trajectories never depend on
interiors at all.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import attention, codec, denoiser, metrics, schedule, smoother
from .attention import Mechanism
from .numerics import Rng

THREADS_ENV = "CONTROLVIDEO_THREADS"


@dataclass(frozen=True)
class ClipPartition:
    """Key frames at multiples of clip_spacing (last frame always a key) and
    the interior index ranges between consecutive keys."""

    n: int
    clip_spacing: int
    key_indices: tuple[int, ...]
    clips: tuple[tuple[int, tuple[int, ...], int], ...]  # (key_lo, interiors, key_hi)


def partition_clips(n: int, clip_spacing: int) -> ClipPartition:
    if n < 2:
        raise ValueError(f"cannot partition fewer than 2 frames, got {n}")
    if clip_spacing < 2:
        raise ValueError(f"clip spacing must be >= 2, got {clip_spacing}")
    if clip_spacing >= n:
        raise ValueError(f"clip spacing {clip_spacing} must be < frame count {n}")
    keys = list(range(0, n, clip_spacing))
    if keys[-1] != n - 1:
        keys.append(n - 1)
    clips = tuple(
        (keys[i], tuple(range(keys[i] + 1, keys[i + 1])), keys[i + 1])
        for i in range(len(keys) - 1)
        if keys[i + 1] - keys[i] > 1
    )
    return ClipPartition(n, clip_spacing, tuple(keys), clips)


@dataclass(frozen=True)
class SampleConfig:
    frames: int = 15
    height: int = 64
    width: int = 64
    seed: int = 0
    mechanism: Mechanism = Mechanism.FULLY
    smoother: smoother.SmootherConfig | None = field(default_factory=smoother.SmootherConfig)
    t_train: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    sample_count: int = 50
    clip_spacing: int = 10
    shared_noise: bool = False
    codec_factor: int = 2
    codec_seed: int = 0

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("frame count must be >= 1")
        down = self.codec_factor * 4  # codec factor x network downsampling
        if self.height % down or self.width % down:
            raise ValueError(f"resolution {self.height}x{self.width} must be divisible by {down}")
        if self.smoother is not None:
            self.smoother.validate_for(self.sample_count)

    def build_schedule(self) -> schedule.NoiseSchedule:
        return schedule.build_schedule(self.t_train, self.beta_start, self.beta_end, self.sample_count)

    def codec_spec(self) -> codec.CodecSpec:
        return codec.CodecSpec(factor=self.codec_factor, seed=self.codec_seed)

    @property
    def latent_shape(self) -> tuple[int, int, int, int]:
        f = self.codec_factor
        return (self.frames, 3 * f * f, self.height // f, self.width // f)


def initial_noise(cfg: SampleConfig) -> np.ndarray:
    """Per-frame Gaussian init from one seeded stream; shared_noise replicates
    a single frame draw (useful for replication-symmetry checks)."""
    rng = Rng(cfg.seed)
    n, c, h, w = cfg.latent_shape
    if cfg.shared_noise:
        one = rng.gaussian((1, c, h, w))
        return np.repeat(one, n, axis=0)
    return rng.gaussian((n, c, h, w))


def _check_cond(cond: np.ndarray, cfg: SampleConfig, arch: denoiser.ArchSpec) -> np.ndarray:
    cond = np.asarray(cond, dtype=np.float32)
    n, _, h, w = cfg.latent_shape
    want = (n, arch.cond_channels, h, w)
    if cond.shape != want:
        raise ValueError(f"condition stack shape {cond.shape} does not match config {want}")
    return cond


def _apply_step(z, eps, idx, t, t_prev, sched, spec, cfg):
    sm = cfg.smoother
    if sm is not None and idx in sm.steps:
        return smoother.smoothed_ddim_step(
            z, eps, t, t_prev, sched, spec, sm.parity_for(idx), sm.interp()
        )
    return schedule.ddim_step(z, eps, t, t_prev, sched)


def sample_short(
    cond: np.ndarray,
    tau: denoiser.PromptEmbedding,
    cfg: SampleConfig,
    w: denoiser.DenoiserWeights,
    on_step=None,
) -> np.ndarray:
    """Full DDIM loop over all frames jointly; returns the decoded RGB video."""
    cond = _check_cond(cond, cfg, w.arch)
    sched = cfg.build_schedule()
    spec = cfg.codec_spec()
    z = initial_noise(cfg)
    for idx, (t, t_prev) in enumerate(sched.step_pairs()):
        eps = denoiser.denoise(z, t, cond, tau, w, cfg.mechanism)
        z = _apply_step(z, eps, idx, t, t_prev, sched, spec, cfg)
        if on_step is not None:
            on_step(idx, t, z)
    return codec.decode(z, spec)


def worker_count(n_tasks: int) -> int:
    """Worker cap from the CONTROLVIDEO_THREADS env var; 0 or unset = auto."""
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        cap = int(raw)
    except ValueError as e:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from e
    if cap <= 0:
        cap = min(4, os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def _keyframe_attend(tok, params):
    return attention.keyframe_attend(tok, params)


def _clip_window_attend(tok, params):
    return attention.clip_attend(tok, tok[np.array([0, -1])], params)


def sample_long(
    cond: np.ndarray,
    tau: denoiser.PromptEmbedding,
    cfg: SampleConfig,
    w: denoiser.DenoiserWeights,
    on_step=None,
) -> np.ndarray:
    """Hierarchical sampler: joint key-frame denoising plus per-clip denoising
    against the bounding key pair, then one global DDIM (or smoothed) update."""
    cond = _check_cond(cond, cfg, w.arch)
    part = partition_clips(cfg.frames, cfg.clip_spacing)
    sched = cfg.build_schedule()
    spec = cfg.codec_spec()
    z = initial_noise(cfg)
    keys = np.array(part.key_indices)

    for idx, (t, t_prev) in enumerate(sched.step_pairs()):
        eps = np.empty_like(z)
        eps[keys] = denoiser.denoise_with(z[keys], t, cond[keys], tau, w, _keyframe_attend)

        def run_clip(clip, z=z, t=t):
            lo, interiors, hi = clip
            sel = np.array([lo, *interiors, hi])
            ew = denoiser.denoise_with(z[sel], t, cond[sel], tau, w, _clip_window_attend)
            return interiors, ew[1:-1]

        workers = worker_count(len(part.clips))
        if workers > 1 and len(part.clips) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run_clip, part.clips))
        else:
            results = [run_clip(c) for c in part.clips]
        for interiors, e in results:
            eps[np.array(interiors)] = e

        z = _apply_step(z, eps, idx, t, t_prev, sched, spec, cfg)
        if on_step is not None:
            on_step(idx, t, z)
    return codec.decode(z, spec)


def ablate(
    cond: np.ndarray,
    tau: denoiser.PromptEmbedding,
    cfg: SampleConfig,
    w: denoiser.DenoiserWeights,
    mechanisms: list[Mechanism],
    embedder: metrics.PatchEmbedder | None = None,
) -> list[dict]:
    """Run sample_short once per mechanism (shared seed and conditions) and
    score each run; rows mirror the mechanism / consistency / time table."""
    if not mechanisms:
        raise ValueError("mechanism list is empty")
    emb = embedder or metrics.PatchEmbedder(seed=cfg.seed)
    rows = []
    for mech in mechanisms:
        run_cfg = replace(cfg, mechanism=mech)
        t0 = time.perf_counter()
        video = sample_short(cond, tau, run_cfg, w)
        elapsed = time.perf_counter() - t0
        rows.append(
            {
                "mechanism": mech.value,
                "frame_consistency": metrics.frame_consistency(video, emb),
                "prompt_consistency": metrics.prompt_consistency(video, tau, emb),
                "time_s": elapsed,
            }
        )
    return rows
