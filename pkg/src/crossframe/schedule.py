"""Noise schedule, forward diffusion marginal, and the deterministic DDIM update.

Coefficients (betas, alpha_bars) are kept in float64 so the thousand-term
cumulative product does not drift; they are applied to float32 tensors as
Python floats, which numpy keeps in float32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    """Linear-beta diffusion schedule plus a decreasing DDIM timestep subsequence.

    alpha_bars is indexed by timestep 0..t_train with alpha_bars[0] == 1.0
    (the convention that makes the final DDIM step return the clean latent).
    """

    t_train: int
    betas: np.ndarray  # shape (t_train,), betas[i] is beta of timestep i+1
    alpha_bars: np.ndarray  # shape (t_train + 1,)
    sample_steps: tuple[int, ...] = field(default=())  # strictly decreasing

    def alpha_bar(self, t: int) -> float:
        if not 0 <= t <= self.t_train:
            raise ValueError(f"timestep {t} outside [0, {self.t_train}]")
        return float(self.alpha_bars[t])

    def step_pairs(self):
        """(t, t_prev) pairs in sampling order; the last pair ends at t_prev=0."""
        steps = list(self.sample_steps)
        return list(zip(steps, steps[1:] + [0]))


def build_schedule(
    t_train: int = 1000,
    beta_start: float = 1e-4,
    beta_end: float = 0.02,
    sample_count: int = 50,
) -> NoiseSchedule:
    """Linear betas from beta_start to beta_end over t_train steps.

    sample_steps is the uniformly strided subsequence of [1..t_train] ending
    at t_train, length sample_count, listed in decreasing (sampling) order.
    """
    if t_train < 1:
        raise ValueError("t_train must be >= 1")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(
            f"betas must satisfy 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    if not 1 <= sample_count <= t_train:
        raise ValueError(f"sample_count must lie in [1, {t_train}], got {sample_count}")
    betas = np.linspace(beta_start, beta_end, t_train, dtype=np.float64)
    alpha_bars = np.empty(t_train + 1, dtype=np.float64)
    alpha_bars[0] = 1.0
    alpha_bars[1:] = np.cumprod(1.0 - betas)
    stride = t_train // sample_count
    steps = tuple(t_train - i * stride for i in range(sample_count))
    return NoiseSchedule(t_train, betas, alpha_bars, steps)


def _check_shapes(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def forward_marginal(z0: np.ndarray, t: int, eps: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Closed-form noising: sqrt(abar_t) z0 + sqrt(1 - abar_t) eps."""
    z0 = np.asarray(z0, dtype=np.float32)
    eps = np.asarray(eps, dtype=np.float32)
    _check_shapes(z0, eps, "forward_marginal")
    abar = sched.alpha_bar(t)
    return math.sqrt(abar) * z0 + math.sqrt(1.0 - abar) * eps


def predict_x0(z_t: np.ndarray, eps_pred: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Clean-latent estimate (z_t - sqrt(1 - abar_t) eps) / sqrt(abar_t)."""
    z_t = np.asarray(z_t, dtype=np.float32)
    eps_pred = np.asarray(eps_pred, dtype=np.float32)
    _check_shapes(z_t, eps_pred, "predict_x0")
    abar = sched.alpha_bar(t)
    if abar == 0.0:
        raise ValueError("alpha_bar is zero; cannot recover x0")
    return (z_t - math.sqrt(1.0 - abar) * eps_pred) / math.sqrt(abar)


def ddim_update(
    z_t: np.ndarray,
    eps_pred: np.ndarray,
    alpha_bar_t: float,
    alpha_bar_prev: float,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """One deterministic (eta = 0) DDIM step expressed directly in alpha-bars.

    x0, when given, replaces the internally predicted clean latent (this is
    how the smoother substitutes its deflickered estimate).
    """
    z_t = np.asarray(z_t, dtype=np.float32)
    eps_pred = np.asarray(eps_pred, dtype=np.float32)
    _check_shapes(z_t, eps_pred, "ddim_update")
    if x0 is None:
        if alpha_bar_t == 0.0:
            raise ValueError("alpha_bar is zero; cannot recover x0")
        x0 = (z_t - math.sqrt(1.0 - alpha_bar_t) * eps_pred) / math.sqrt(alpha_bar_t)
    else:
        x0 = np.asarray(x0, dtype=np.float32)
        _check_shapes(z_t, x0, "ddim_update(x0)")
    return math.sqrt(alpha_bar_prev) * x0 + math.sqrt(1.0 - alpha_bar_prev) * eps_pred


def ddim_step(
    z_t: np.ndarray,
    eps_pred: np.ndarray,
    t: int,
    t_prev: int,
    sched: NoiseSchedule,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """DDIM step z_t -> z_{t_prev}; t_prev = 0 lands on the clean prediction."""
    if t_prev >= t:
        raise ValueError(f"t_prev must be < t, got t_prev={t_prev}, t={t}")
    return ddim_update(z_t, eps_pred, sched.alpha_bar(t), sched.alpha_bar(t_prev), x0=x0)
