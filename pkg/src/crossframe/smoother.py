"""Interleaved-frame smoother: parity-alternating middle-frame interpolation.

At a selected sampling step the predicted clean latent is decoded to RGB,
every interior frame of one parity is replaced by an interpolation of its two
neighbours (reading pre-pass frames only), and the result is re-encoded and
substituted into the DDIM update. Two consecutive steps with opposite parity
cover every interior frame exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codec, schedule

PARITIES = ("odd", "even")


def midpoint(x_prev: np.ndarray, x_next: np.ndarray) -> np.ndarray:
    """Default interpolator: the linear midpoint of the two neighbour frames."""
    return np.float32(0.5) * (x_prev + x_next)


# Passing interp=None disables replacement entirely ("identity" in configs).
# An interpolator only sees the neighbours, so a no-op cannot be expressed as
# one; it is a mode of smooth_video instead.
IDENTITY = None

INTERPOLATORS = {"linear": midpoint, "identity": IDENTITY}


@dataclass(frozen=True)
class SmootherConfig:
    """Which sampling-step indices smooth, and with which parity/interpolator.

    steps are indices into the DDIM step sequence (0 = first, noisiest step),
    not raw training timesteps. Parity alternates along the sorted step list
    starting from start_parity, so the default (30, 31) smooths odd interior
    frames first, then even ones.
    """

    steps: tuple[int, ...] = (30, 31)
    start_parity: str = "odd"
    interpolator: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(sorted(set(int(s) for s in self.steps))))
        if self.start_parity not in PARITIES:
            raise ValueError(f"parity must be one of {PARITIES}, got {self.start_parity!r}")
        if self.interpolator not in INTERPOLATORS:
            raise ValueError(f"unknown interpolator {self.interpolator!r}")
        if any(s < 0 for s in self.steps):
            raise ValueError("smoother step indices must be >= 0")

    def validate_for(self, sample_count: int) -> None:
        bad = [s for s in self.steps if s >= sample_count]
        if bad:
            raise ValueError(f"smoother steps {bad} outside [0, {sample_count})")

    def parity_for(self, step_index: int) -> str:
        pos = self.steps.index(step_index)
        flip = pos % 2
        start = PARITIES.index(self.start_parity)
        return PARITIES[(start + flip) % 2]

    def interp(self):
        return INTERPOLATORS[self.interpolator]


def smooth_video(x: np.ndarray, parity: str, interp=midpoint) -> np.ndarray:
    """Replace parity-matching interior frames by interp(neighbours).

    Frames 0 and N-1 and non-matching frames are returned bitwise unchanged;
    neighbour reads always see the input array, never freshly written frames.
    interp=None is a full pass-through. Videos shorter than 3 frames are
    returned as-is.
    """
    x = np.asarray(x, dtype=np.float32)
    if parity not in PARITIES:
        raise ValueError(f"parity must be one of {PARITIES}, got {parity!r}")
    n = x.shape[0]
    if interp is None or n < 3:
        return x.copy()
    rem = 1 if parity == "odd" else 0
    out = x.copy()
    for i in range(1, n - 1):
        if i % 2 == rem:
            out[i] = interp(x[i - 1], x[i + 1])
    return out


def smoothed_indices(n: int, parity: str) -> list[int]:
    rem = 1 if parity == "odd" else 0
    return [i for i in range(1, n - 1) if i % 2 == rem]


def smoothed_ddim_step(
    z_t: np.ndarray,
    eps_pred: np.ndarray,
    t: int,
    t_prev: int,
    sched: schedule.NoiseSchedule,
    spec: codec.CodecSpec,
    parity: str,
    interp=midpoint,
) -> np.ndarray:
    """DDIM step whose clean-latent estimate is deflickered in RGB space.

    Pipeline: predict x0, decode, smooth one parity class, re-encode, then
    take the standard update with the smoothed clean latent substituted and
    the same noise prediction reused.
    """
    x0 = schedule.predict_x0(z_t, eps_pred, t, sched)
    x = codec.decode(x0, spec)
    x_smooth = smooth_video(x, parity, interp)
    z0_smooth = codec.encode(x_smooth, spec)
    return schedule.ddim_step(z_t, eps_pred, t, t_prev, sched, x0=z0_smooth)
