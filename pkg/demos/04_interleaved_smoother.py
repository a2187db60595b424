"""The interleaved-frame smoother, from index bookkeeping to the full step.

Two consecutive passes with opposite parity touch every interior frame
exactly once; each replacement is the midpoint of its neighbours, computed on
the decoded clean prediction and folded back into the DDIM update.
"""

import numpy as np

from crossframe import CodecSpec, Rng, build_schedule, ddim_step, encode, smooth_video, smoothed_ddim_step
from crossframe.smoother import smoothed_indices

print("=== parity coverage over a 10-frame video ===")
n = 10
odd = smoothed_indices(n, "odd")
even = smoothed_indices(n, "even")
print(f"odd pass replaces  {odd}")
print(f"even pass replaces {even}")
print(f"union is every interior frame once: {sorted(odd + even)} (endpoints 0 and {n-1} never)")

print()
print("=== a flickering scalar sequence, smoothed ===")
vals = np.float32([0.0, 10.0, 4.0, 9.0, 2.0, 6.0])
video = np.broadcast_to(vals[:, None, None, None], (6, 3, 2, 2)).copy()
after_odd = smooth_video(video, "odd")
after_both = smooth_video(after_odd, "even")
tv = lambda v: float(np.abs(np.diff(v[:, 0, 0, 0])).sum())
print(f"frames:          {video[:, 0, 0, 0].tolist()}   total variation {tv(video):.1f}")
print(f"after odd pass:  {after_odd[:, 0, 0, 0].tolist()}   total variation {tv(after_odd):.1f}")
print(f"after even pass: {after_both[:, 0, 0, 0].tolist()}   total variation {tv(after_both):.1f}")

print()
print("=== the smoothed DDIM step ===")
sched = build_schedule(1000, 1e-4, 0.02, 50)
spec = CodecSpec(factor=2, seed=0)
z = Rng(3).gaussian((6, 12, 4, 4))
eps = Rng(4).gaussian((6, 12, 4, 4))
t, t_prev = 600, 580

plain = ddim_step(z, eps, t, t_prev, sched)
smoothed = smoothed_ddim_step(z, eps, t, t_prev, sched, spec, "odd")
noop = smoothed_ddim_step(z, eps, t, t_prev, sched, spec, "odd", interp=None)
print(f"identity interpolator vs plain step: {np.max(np.abs(noop - plain)):.2e} (codec round trip only)")
moved = [i for i in range(6) if np.max(np.abs(smoothed[i] - plain[i])) > 1e-4]
print(f"midpoint interpolator moved frames {moved} and left the others at the plain update")

const = encode(np.full((5, 3, 8, 8), 0.4, dtype=np.float32), spec)
same = smoothed_ddim_step(const, np.zeros_like(const), t, t_prev, sched, spec, "even")
ref = ddim_step(const, np.zeros_like(const), t, t_prev, sched)
print(f"constant videos are a fixed point: {np.max(np.abs(same - ref)):.2e}")
