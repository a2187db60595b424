"""Toy noise-prediction network: main U-Net plus condition-injecting auxiliary U-Net.

The structure mirrors the full-scale system it stands in for, at a size where
invariants are testable on a CPU:

* 2-D convolutions are inflated to 1x3x3 video kernels, so convs never mix
  frames and all temporal interaction happens in attention.
* Each resolution level carries one attention block: cross-frame
  self-attention (mechanism pluggable) followed by prompt cross-attention.
* The auxiliary network is a copy of the main encoder that additionally
  ingests a per-frame condition map; its features enter the main decoder
  through zero-initialised projections, so a freshly initialised model is
  exactly condition-blind.

Weights are seeded, never trained. Layout of activations is
(frames, channels, height, width) in latent space; attention levels run at
1/2 and 1/4 of the latent resolution.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import attention
from .attention import AttentionParams, Mechanism
from .numerics import Rng, tnsr_from_bytes, tnsr_to_bytes


@dataclass(frozen=True)
class ArchSpec:
    """Architecture descriptor; channel widths and the token grid it implies."""

    latent_channels: int = 12
    cond_channels: int = 1
    base_channels: int = 16
    temb_dim: int = 32
    prompt_dim: int = 16
    max_prompt_tokens: int = 16
    norm_groups: int = 4
    latent_size: int = 32  # default latent H=W; convs accept any multiple of 4

    @property
    def level_channels(self) -> tuple[int, int]:
        return self.base_channels, 2 * self.base_channels

    @property
    def tokens_per_frame(self) -> tuple[int, int]:
        return (self.latent_size // 2) ** 2, (self.latent_size // 4) ** 2


@dataclass
class PromptEmbedding:
    token_count: int
    matrix: np.ndarray  # (max_tokens, prompt_dim), zero rows past token_count


@dataclass
class DenoiserWeights:
    seed: int
    arch: ArchSpec
    params: dict[str, np.ndarray]

    def attn_params(self, prefix: str) -> AttentionParams:
        p = self.params
        return AttentionParams(p[f"{prefix}.wq"], p[f"{prefix}.wk"], p[f"{prefix}.wv"])


def embed_prompt(text: str, seed: int, *, dim: int = 16, max_tokens: int = 16) -> PromptEmbedding:
    """Deterministic stand-in for a text encoder.

    UTF-8 bytes are bucketed into a 256-row seeded embedding table
    (index = (byte + 131 * position) mod 256), truncated to max_tokens and
    padded with zero rows. The empty string embeds to the all-zero matrix.
    """
    table = Rng(seed).gaussian((256, dim))
    raw = text.encode("utf-8")[:max_tokens]
    m = np.zeros((max_tokens, dim), dtype=np.float32)
    for i, b in enumerate(raw):
        m[i] = table[(b + 131 * i) % 256]
    return PromptEmbedding(token_count=len(raw), matrix=m)


# ----------------------------------------------------------------------------
# kernel inflation


def inflate_kernel(k: np.ndarray) -> np.ndarray:
    """Lift a 3x3 spatial kernel to a 1x3x3 video kernel (unit temporal extent)."""
    k = np.asarray(k, dtype=np.float32)
    if k.shape[-2:] != (3, 3):
        raise ValueError(f"expected trailing kernel dims 3x3, got {k.shape}")
    return k[..., None, :, :].copy()


def conv_video(x: np.ndarray, k3: np.ndarray, b: np.ndarray | None = None, stride: int = 1) -> np.ndarray:
    """Apply an inflated (out, in, 1, 3, 3) kernel to a (frames, in, H, W) stack.

    Unit temporal extent means each output frame depends on its input frame
    only; spatially this is a stride-`stride` same-padded 3x3 convolution.
    """
    k3 = np.asarray(k3, dtype=np.float32)
    if k3.ndim != 5 or k3.shape[2] != 1:
        raise ValueError(f"expected inflated kernel (out, in, 1, 3, 3), got {k3.shape}")
    return _conv3x3(x, k3[:, :, 0], b, stride=stride)


def _conv3x3(x: np.ndarray, w: np.ndarray, b: np.ndarray | None, stride: int = 1) -> np.ndarray:
    n, c, h, wd = x.shape
    co, ci = w.shape[0], w.shape[1]
    if ci != c:
        raise ValueError(f"conv expects {ci} input channels, got {c}")
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))
    if stride != 1:
        win = win[:, :, ::stride, ::stride]
    ho, wo = win.shape[2], win.shape[3]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * 9)
    out = cols @ w.reshape(co, ci * 9).T
    if b is not None:
        out = out + b
    return out.reshape(n, ho, wo, co).transpose(0, 3, 1, 2)


def _conv1x1(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum("oc,nchw->nohw", w, x, optimize=True)


def _silu(x: np.ndarray) -> np.ndarray:
    # exp only of non-positive values, so large pre-norm activations cannot overflow
    neg = x < 0
    e = np.exp(np.where(neg, x, -x))
    return np.where(neg, x * e / (1.0 + e), x / (1.0 + e))


def _group_norm(x: np.ndarray, groups: int, eps: float = 1e-5) -> np.ndarray:
    n, c, h, w = x.shape
    g = x.reshape(n, groups, c // groups, h, w)
    mean = g.mean(axis=(2, 3, 4), keepdims=True)
    var = ((g - mean) ** 2).mean(axis=(2, 3, 4), keepdims=True)
    return ((g - mean) / np.sqrt(var + np.float32(eps))).reshape(n, c, h, w)


def _sinusoidal(t: float, dim: int) -> np.ndarray:
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half, dtype=np.float64) / max(half - 1, 1))
    args = float(t) * freqs
    return np.concatenate([np.cos(args), np.sin(args)]).astype(np.float32)


def _upsample2(x: np.ndarray) -> np.ndarray:
    return x.repeat(2, axis=2).repeat(2, axis=3)


# ----------------------------------------------------------------------------
# weight initialisation and serialisation


def _encoder_specs(side: str, a: ArchSpec):
    """(name, shape, init) for one encoder; init is 'w' (scaled draw) or 'b' (zero)."""
    c0, c1 = a.level_channels
    te, pe = a.temb_dim, a.prompt_dim
    specs = [
        (f"{side}.temb.lin1.w", (te, te), "w"),
        (f"{side}.temb.lin1.b", (te,), "b"),
        (f"{side}.temb.lin2.w", (te, te), "w"),
        (f"{side}.temb.lin2.b", (te,), "b"),
        (f"{side}.conv_in.w", (c0, a.latent_channels, 3, 3), "w"),
        (f"{side}.conv_in.b", (c0,), "b"),
        (f"{side}.down0.w", (c0, c0, 3, 3), "w"),
        (f"{side}.down0.b", (c0,), "b"),
    ]
    for lvl, c in ((0, c0), (1, c1)):
        specs += [
            (f"{side}.res{lvl}.conv1.w", (c, c, 3, 3), "w"),
            (f"{side}.res{lvl}.conv1.b", (c,), "b"),
            (f"{side}.res{lvl}.temb.w", (c, te), "w"),
            (f"{side}.res{lvl}.temb.b", (c,), "b"),
            (f"{side}.res{lvl}.conv2.w", (c, c, 3, 3), "w"),
            (f"{side}.res{lvl}.conv2.b", (c,), "b"),
            (f"{side}.attn{lvl}.wq", (c, c), "w"),
            (f"{side}.attn{lvl}.wk", (c, c), "w"),
            (f"{side}.attn{lvl}.wv", (c, c), "w"),
            (f"{side}.attn{lvl}.wo", (c, c), "w"),
            (f"{side}.attn{lvl}.pq", (c, c), "w"),
            (f"{side}.attn{lvl}.pk", (pe, c), "w"),
            (f"{side}.attn{lvl}.pv", (pe, c), "w"),
            (f"{side}.attn{lvl}.po", (c, c), "w"),
        ]
        if lvl == 0:
            specs += [
                (f"{side}.down1.w", (c1, c0, 3, 3), "w"),
                (f"{side}.down1.b", (c1,), "b"),
            ]
    specs += [
        (f"{side}.mid.conv1.w", (c1, c1, 3, 3), "w"),
        (f"{side}.mid.conv1.b", (c1,), "b"),
        (f"{side}.mid.temb.w", (c1, te), "w"),
        (f"{side}.mid.temb.b", (c1,), "b"),
        (f"{side}.mid.conv2.w", (c1, c1, 3, 3), "w"),
        (f"{side}.mid.conv2.b", (c1,), "b"),
    ]
    return specs


def _decoder_specs(a: ArchSpec):
    c0, c1 = a.level_channels
    te = a.temb_dim
    specs = [
        ("main.up1.w", (c0, c1, 3, 3), "w"),
        ("main.up1.b", (c0,), "b"),
    ]
    for name in ("dec0", "dec1"):
        specs += [
            (f"main.{name}.conv1.w", (c0, 2 * c0, 3, 3), "w"),
            (f"main.{name}.conv1.b", (c0,), "b"),
            (f"main.{name}.temb.w", (c0, te), "w"),
            (f"main.{name}.temb.b", (c0,), "b"),
            (f"main.{name}.conv2.w", (c0, c0, 3, 3), "w"),
            (f"main.{name}.conv2.b", (c0,), "b"),
            (f"main.{name}.skip.w", (c0, 2 * c0), "w"),
        ]
        if name == "dec0":
            specs += [
                ("main.up0.w", (c0, c0, 3, 3), "w"),
                ("main.up0.b", (c0,), "b"),
            ]
    specs += [
        ("main.conv_out.w", (a.latent_channels, c0, 3, 3), "w"),
        ("main.conv_out.b", (a.latent_channels,), "b"),
    ]
    return specs


def param_specs(a: ArchSpec):
    """Full (name, shape, init) list; init 'copy' mirrors the main encoder."""
    c0, c1 = a.level_channels
    specs = _encoder_specs("main", a) + _decoder_specs(a)
    for name, shape, _ in _encoder_specs("aux", a):
        specs.append((name, shape, "copy"))
    specs += [
        ("aux.cond_in.w", (c0, a.cond_channels, 3, 3), "w"),
        ("aux.cond_in.b", (c0,), "b"),
        ("aux.zero_e0.w", (c0, c0), "z"),
        ("aux.zero_a0.w", (c0, c0), "z"),
        ("aux.zero_mid.w", (c1, c1), "z"),
    ]
    return specs


def init_weights(seed: int, arch: ArchSpec | None = None) -> DenoiserWeights:
    """Seeded init: scaled Gaussian weights, zero biases, aux encoder a copy of
    the main encoder (same pretrained-clone wiring as the full-scale system),
    and all-zero auxiliary output projections."""
    arch = arch or ArchSpec()
    rng = Rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape, kind in param_specs(arch):
        if kind == "w":
            fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
            params[name] = rng.gaussian(shape) * np.float32(1.0 / math.sqrt(fan_in))
        elif kind in ("b", "z"):
            params[name] = np.zeros(shape, dtype=np.float32)
        elif kind == "copy":
            params[name] = params["main" + name[3:]].copy()
        else:
            raise AssertionError(kind)
    return DenoiserWeights(seed=seed, arch=arch, params=params)


def save_weights(w: DenoiserWeights, manifest_path, blob_path) -> None:
    names = [n for n, _, _ in param_specs(w.arch)]
    manifest = {
        "format": "crossframe-weights",
        "version": 1,
        "seed": w.seed,
        "arch": asdict(w.arch),
        "tensors": [{"name": n, "dims": list(w.params[n].shape)} for n in names],
    }
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    with open(blob_path, "wb") as f:
        for n in names:
            f.write(tnsr_to_bytes(w.params[n]))


def load_weights(manifest_path, blob_path) -> DenoiserWeights:
    with open(manifest_path) as f:
        manifest = json.load(f)
    if manifest.get("format") != "crossframe-weights" or manifest.get("version") != 1:
        raise ValueError("unrecognised weights manifest")
    arch = ArchSpec(**manifest["arch"])
    with open(blob_path, "rb") as f:
        blob = f.read()
    params: dict[str, np.ndarray] = {}
    off = 0
    for entry in manifest["tensors"]:
        dims = tuple(entry["dims"])
        rank = len(dims)
        size = 6 + 4 * rank + 4 * int(np.prod(dims))
        if off + size > len(blob):
            raise ValueError(f"weights manifest/blob mismatch: blob truncated at {entry['name']}")
        t = tnsr_from_bytes(blob[off : off + size])
        if t.shape != dims:
            raise ValueError(f"weights manifest/blob mismatch: {entry['name']} dims {t.shape} != {dims}")
        params[entry["name"]] = t
        off += size
    if off != len(blob):
        raise ValueError("weights manifest/blob mismatch: trailing bytes in blob")
    expected = {n: s for n, s, _ in param_specs(arch)}
    if set(params) != set(expected) or any(params[n].shape != expected[n] for n in expected):
        raise ValueError("weights manifest/blob mismatch: tensor set does not match architecture")
    return DenoiserWeights(seed=int(manifest["seed"]), arch=arch, params=params)


# ----------------------------------------------------------------------------
# forward pass


def _temb(p: dict, side: str, t: float, dim: int) -> np.ndarray:
    e = _sinusoidal(t, dim)
    e = _silu(e @ p[f"{side}.temb.lin1.w"].T + p[f"{side}.temb.lin1.b"])
    return e @ p[f"{side}.temb.lin2.w"].T + p[f"{side}.temb.lin2.b"]


def _resblock(p: dict, prefix: str, x: np.ndarray, temb: np.ndarray, groups: int) -> np.ndarray:
    k1 = inflate_kernel(p[f"{prefix}.conv1.w"])
    k2 = inflate_kernel(p[f"{prefix}.conv2.w"])
    h = conv_video(_silu(_group_norm(x, groups)), k1, p[f"{prefix}.conv1.b"])
    h = h + (temb @ p[f"{prefix}.temb.w"].T + p[f"{prefix}.temb.b"])[None, :, None, None]
    h = conv_video(_silu(_group_norm(h, groups)), k2, p[f"{prefix}.conv2.b"])
    skip_w = p.get(f"{prefix}.skip.w")
    return h + (_conv1x1(x, skip_w) if skip_w is not None else x)


def _to_tokens(x: np.ndarray) -> np.ndarray:
    n, c, h, w = x.shape
    return x.transpose(0, 2, 3, 1).reshape(n, h * w, c)


def _from_tokens(tok: np.ndarray, h: int, w: int) -> np.ndarray:
    n, L, c = tok.shape
    return tok.reshape(n, h, w, c).transpose(0, 3, 1, 2)


def _attnblock(
    w: DenoiserWeights, prefix: str, x: np.ndarray, attend, tau: PromptEmbedding
) -> np.ndarray:
    p = w.params
    groups = w.arch.norm_groups
    n, c, h, wd = x.shape
    tok = _to_tokens(_group_norm(x, groups))
    sa = attend(tok, w.attn_params(prefix))
    x = x + _from_tokens(sa @ p[f"{prefix}.wo"], h, wd)
    tok = _to_tokens(_group_norm(x, groups))
    q = tok.reshape(n * h * wd, c) @ p[f"{prefix}.pq"]
    k = tau.matrix @ p[f"{prefix}.pk"]
    v = tau.matrix @ p[f"{prefix}.pv"]
    pa = attention.scaled_dot_attention(q, k, v, c).reshape(n, h * wd, c)
    return x + _from_tokens(pa @ p[f"{prefix}.po"], h, wd)


def _encode_side(
    w: DenoiserWeights,
    side: str,
    x: np.ndarray,
    t: float,
    attend,
    tau: PromptEmbedding,
    cond: np.ndarray | None = None,
):
    p = w.params
    g = w.arch.norm_groups
    temb = _temb(p, side, t, w.arch.temb_dim)
    e0 = conv_video(x, inflate_kernel(p[f"{side}.conv_in.w"]), p[f"{side}.conv_in.b"])
    if cond is not None:
        e0 = e0 + conv_video(cond, inflate_kernel(p["aux.cond_in.w"]), p["aux.cond_in.b"])
    h = conv_video(e0, inflate_kernel(p[f"{side}.down0.w"]), p[f"{side}.down0.b"], stride=2)
    h = _resblock(p, f"{side}.res0", h, temb, g)
    a0 = _attnblock(w, f"{side}.attn0", h, attend, tau)
    h = conv_video(a0, inflate_kernel(p[f"{side}.down1.w"]), p[f"{side}.down1.b"], stride=2)
    h = _resblock(p, f"{side}.res1", h, temb, g)
    h = _attnblock(w, f"{side}.attn1", h, attend, tau)
    mid = _resblock(p, f"{side}.mid", h, temb, g)
    return e0, a0, mid, temb


def denoise_with(
    z_t: np.ndarray,
    t: float,
    cond: np.ndarray,
    tau: PromptEmbedding,
    w: DenoiserWeights,
    attend,
) -> np.ndarray:
    """Predict the noise in z_t with a caller-supplied frame-attention rule.

    attend(tokens, params) -> attended tokens is invoked for every
    self-attention block in both networks; the standard mechanisms and the
    hierarchical sampler's key/clip rules all plug in here.
    """
    z_t = np.asarray(z_t, dtype=np.float32)
    cond = np.asarray(cond, dtype=np.float32)
    a = w.arch
    if z_t.ndim != 4 or z_t.shape[1] != a.latent_channels:
        raise ValueError(f"latent video must be (N, {a.latent_channels}, H, W), got {z_t.shape}")
    n, _, h, wd = z_t.shape
    if h % 4 or wd % 4 or h < 4 or wd < 4:
        raise ValueError(f"latent spatial dims must be multiples of 4, got {h}x{wd}")
    if cond.shape != (n, a.cond_channels, h, wd):
        raise ValueError(
            f"condition stack must be ({n}, {a.cond_channels}, {h}, {wd}), got {cond.shape}"
        )
    if tau.matrix.shape != (a.max_prompt_tokens, a.prompt_dim):
        raise ValueError(
            f"prompt embedding must be ({a.max_prompt_tokens}, {a.prompt_dim}), got {tau.matrix.shape}"
        )
    p = w.params
    g = a.norm_groups

    e0, a0, mid, temb = _encode_side(w, "main", z_t, t, attend, tau)
    e0x, a0x, midx, _ = _encode_side(w, "aux", z_t, t, attend, tau, cond=cond)

    mid = mid + _conv1x1(midx, p["aux.zero_mid.w"])
    a0 = a0 + _conv1x1(a0x, p["aux.zero_a0.w"])
    e0 = e0 + _conv1x1(e0x, p["aux.zero_e0.w"])

    u = conv_video(_upsample2(mid), inflate_kernel(p["main.up1.w"]), p["main.up1.b"])
    hm = _resblock(p, "main.dec0", np.concatenate([u, a0], axis=1), temb, g)
    u = conv_video(_upsample2(hm), inflate_kernel(p["main.up0.w"]), p["main.up0.b"])
    hm = _resblock(p, "main.dec1", np.concatenate([u, e0], axis=1), temb, g)
    out = conv_video(
        _silu(_group_norm(hm, g)), inflate_kernel(p["main.conv_out.w"]), p["main.conv_out.b"]
    )
    return out.astype(np.float32)


def denoise(
    z_t: np.ndarray,
    t: float,
    cond: np.ndarray,
    tau: PromptEmbedding,
    w: DenoiserWeights,
    mech: Mechanism = Mechanism.FULLY,
) -> np.ndarray:
    """Noise prediction with one of the named cross-frame mechanisms."""
    return denoise_with(
        z_t, t, cond, tau, w, lambda tok, p: attention.cross_frame_attend(tok, mech, p)
    )
