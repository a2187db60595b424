"""Training-free video diffusion sampling at desk scale.

Core pieces: a fixed-seed numerics layer (Philox4x32-10 Gaussian source, TNSR
tensor files), a linear-beta DDIM schedule, cross-frame attention mechanisms,
an exactly invertible RGB/latent codec, an interleaved-frame smoother, a toy
conditioned denoiser with an auxiliary condition branch, consistency metrics,
and short/long/ablation sampling pipelines.
"""

from .attention import AttentionParams, Mechanism, cross_frame_attend, keyframe_attend, clip_attend, scaled_dot_attention
from .codec import CodecSpec, decode, encode
from .denoiser import ArchSpec, DenoiserWeights, PromptEmbedding, denoise, denoise_with, embed_prompt, inflate_kernel, init_weights, load_weights, save_weights
from .metrics import PatchEmbedder, frame_consistency, prompt_consistency
from .numerics import Rng, cosine_similarity, gaussian, read_tnsr, softmax_rows, write_tnsr
from .pipeline import ClipPartition, SampleConfig, ablate, partition_clips, sample_long, sample_short
from .schedule import NoiseSchedule, build_schedule, ddim_step, ddim_update, forward_marginal, predict_x0
from .smoother import SmootherConfig, midpoint, smooth_video, smoothed_ddim_step

__version__ = "0.1.0"

__all__ = [
    "AttentionParams", "Mechanism", "cross_frame_attend", "keyframe_attend", "clip_attend",
    "scaled_dot_attention", "CodecSpec", "decode", "encode", "ArchSpec", "DenoiserWeights",
    "PromptEmbedding", "denoise", "denoise_with", "embed_prompt", "inflate_kernel",
    "init_weights", "load_weights", "save_weights", "PatchEmbedder", "frame_consistency",
    "prompt_consistency", "Rng", "cosine_similarity", "gaussian", "read_tnsr", "softmax_rows",
    "write_tnsr", "ClipPartition", "SampleConfig", "ablate", "partition_clips", "sample_long",
    "sample_short", "NoiseSchedule", "build_schedule", "ddim_step", "ddim_update",
    "forward_marginal", "predict_x0", "SmootherConfig", "midpoint", "smooth_video",
    "smoothed_ddim_step",
]
