"""Command-line front end.

Subcommands: sample-short, sample-long, ablate, metrics, make-fixtures.
Configuration is a JSON document; every key has a documented default, unknown
keys are rejected, and the fully resolved config is echoed into report.json.
Frames are written as binary PPM (P6, 8-bit, clamp(round(255*x))). Exit codes:
0 success, 1 usage error, 2 data/shape error.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time

import numpy as np

from . import denoiser, fixtures, metrics, pipeline
from .attention import Mechanism
from .numerics import read_tnsr
from .smoother import SmootherConfig

USAGE_ERROR = 1
DATA_ERROR = 2

CONFIG_DEFAULTS = {
    "frames": 15,
    "height": 64,
    "width": 64,
    "seed": 0,
    "mechanism": "fully",
    "smoother": {"steps": [30, 31], "start_parity": "odd", "interpolator": "linear"},
    "schedule": {"t_train": 1000, "beta_start": 1e-4, "beta_end": 0.02, "sample_count": 50},
    "clip_spacing": 10,
    "shared_noise": False,
    "codec": {"factor": 2, "seed": 0},
    "prompt": "",
    "prompt_seed": 7,
    "embedder_seed": 0,
    "conditions": None,
    "weights": None,
    "weights_blob": None,
    "out": None,
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit(2); usage errors are 1 here
        raise UsageError(message)


def _merge_config(defaults: dict, given: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise DataError(f"unknown config key: {where}")
        if isinstance(defaults[key], dict) and value is not None:
            if not isinstance(value, dict):
                raise DataError(f"config key {where} must be an object")
            out[key] = _merge_config(defaults[key], value, where)
        else:
            out[key] = value
    return out


def load_config(path: str | None, overrides: dict) -> dict:
    given = {}
    if path is not None:
        try:
            with open(path) as f:
                given = json.load(f)
        except FileNotFoundError:
            raise DataError(f"missing config file: {path}")
        except json.JSONDecodeError as e:
            raise DataError(f"malformed JSON config {path}: {e}")
        if not isinstance(given, dict):
            raise DataError(f"config root must be a JSON object: {path}")
    cfg = _merge_config(CONFIG_DEFAULTS, given)
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    return cfg


def _mechanism(name: str) -> Mechanism:
    for mech in Mechanism:
        if mech.value == name:
            return mech
    raise DataError(f"unknown mechanism {name!r}; valid: {[m.value for m in Mechanism]}")


def to_sample_config(cfg: dict) -> pipeline.SampleConfig:
    sm = cfg["smoother"]
    try:
        return pipeline.SampleConfig(
            frames=cfg["frames"],
            height=cfg["height"],
            width=cfg["width"],
            seed=cfg["seed"],
            mechanism=_mechanism(cfg["mechanism"]),
            smoother=None
            if sm is None
            else SmootherConfig(
                steps=tuple(sm["steps"]),
                start_parity=sm["start_parity"],
                interpolator=sm["interpolator"],
            ),
            t_train=cfg["schedule"]["t_train"],
            beta_start=cfg["schedule"]["beta_start"],
            beta_end=cfg["schedule"]["beta_end"],
            sample_count=cfg["schedule"]["sample_count"],
            clip_spacing=cfg["clip_spacing"],
            shared_noise=cfg["shared_noise"],
            codec_factor=cfg["codec"]["factor"],
            codec_seed=cfg["codec"]["seed"],
        )
    except ValueError as e:
        raise DataError(f"invalid config: {e}")


def _require(cfg: dict, key: str) -> str:
    if not cfg.get(key):
        raise UsageError(f"{key} must be given via --{key} or the config file")
    return cfg[key]


def _load_weights(cfg: dict) -> denoiser.DenoiserWeights:
    manifest = _require(cfg, "weights")
    blob = cfg["weights_blob"] or os.path.splitext(manifest)[0] + ".bin"
    cfg["weights_blob"] = blob
    for p in (manifest, blob):
        if not os.path.exists(p):
            raise DataError(f"missing weights file: {p}")
    try:
        return denoiser.load_weights(manifest, blob)
    except (ValueError, json.JSONDecodeError) as e:
        raise DataError(f"cannot load weights: {e}")


def _load_conditions(cfg: dict) -> np.ndarray:
    path = _require(cfg, "conditions")
    if not os.path.exists(path):
        raise DataError(f"missing condition file: {path}")
    try:
        cond = read_tnsr(path)
    except ValueError as e:
        raise DataError(f"malformed TNSR {path}: {e}")
    if cond.ndim != 4:
        raise DataError(f"condition stack must be rank 4 [frames, channels, H, W], got rank {cond.ndim}")
    return cond


def write_ppm(path: str, frame: np.ndarray) -> None:
    """P6, maxval 255; values are clamp(round(255 * x)) with round-half-up."""
    c, h, w = frame.shape
    u8 = np.clip(np.floor(255.0 * frame.astype(np.float64) + 0.5), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(u8.transpose(1, 2, 0).tobytes())


def read_ppm(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    pos, fields = 0, []
    if data[:2] != b"P6":
        raise DataError(f"not a P6 PPM file: {path}")
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(x) for x in fields)
    if maxval != 255:
        raise DataError(f"unsupported PPM maxval {maxval} in {path}")
    body = data[pos : pos + 3 * w * h]
    if len(body) != 3 * w * h:
        raise DataError(f"truncated PPM payload in {path}")
    img = np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
    return (img.astype(np.float32) / np.float32(255.0)).transpose(2, 0, 1)


def _write_report(out_dir: str, report: dict) -> str:
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as f:
        json.dump(report, f, indent=1, sort_keys=True)
        f.write("\n")
    return path


def _run_sampler(cfg: dict, long: bool) -> int:
    sample_cfg = to_sample_config(cfg)
    w = _load_weights(cfg)
    cond = _load_conditions(cfg)
    out_dir = _require(cfg, "out")
    os.makedirs(out_dir, exist_ok=True)
    tau = denoiser.embed_prompt(
        cfg["prompt"], cfg["prompt_seed"], dim=w.arch.prompt_dim, max_tokens=w.arch.max_prompt_tokens
    )

    step_times, last = [], time.perf_counter()

    def on_step(idx, t, z):
        nonlocal last
        now = time.perf_counter()
        step_times.append({"step": idx, "t": t, "seconds": now - last})
        last = now

    sampler = pipeline.sample_long if long else pipeline.sample_short
    try:
        video = sampler(cond, tau, sample_cfg, w, on_step=on_step)
    except ValueError as e:
        raise DataError(str(e))

    for i, frame in enumerate(video):
        write_ppm(os.path.join(out_dir, f"frame_{i:04d}.ppm"), frame)

    emb = metrics.PatchEmbedder(seed=cfg["embedder_seed"])
    report = {
        "command": "sample-long" if long else "sample-short",
        "config": cfg,
        "embedder": emb.identifier,
        "frames_written": int(video.shape[0]),
        "metrics": {
            "frame_consistency": metrics.frame_consistency(video, emb) if video.shape[0] > 1 else None,
            "prompt_consistency": metrics.prompt_consistency(video, tau, emb),
        },
        "timing": {"steps": step_times, "total_seconds": sum(s["seconds"] for s in step_times)},
    }
    path = _write_report(out_dir, report)
    print(f"wrote {video.shape[0]} frames and {path}")
    return 0


def _format_table(rows: list[dict]) -> str:
    headers = ["mechanism", "frame consistency (%)", "prompt consistency (%)", "time cost (s)"]
    cells = [
        [r["mechanism"], f"{r['frame_consistency']:.2f}", f"{r['prompt_consistency']:.2f}", f"{r['time_s']:.2f}"]
        for r in rows
    ]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(c[i].ljust(widths[i]) for i in range(len(headers))) for c in cells]
    return "\n".join(lines) + "\n"


def _run_ablate(cfg: dict, mech_csv: str) -> int:
    names = [m.strip() for m in mech_csv.split(",") if m.strip()]
    if not names:
        raise UsageError("empty mechanism list")
    mechs = [_mechanism(n) for n in names]
    sample_cfg = to_sample_config(cfg)
    w = _load_weights(cfg)
    cond = _load_conditions(cfg)
    out_dir = _require(cfg, "out")
    os.makedirs(out_dir, exist_ok=True)
    tau = denoiser.embed_prompt(
        cfg["prompt"], cfg["prompt_seed"], dim=w.arch.prompt_dim, max_tokens=w.arch.max_prompt_tokens
    )
    emb = metrics.PatchEmbedder(seed=cfg["embedder_seed"])
    try:
        rows = pipeline.ablate(cond, tau, sample_cfg, w, mechs, embedder=emb)
    except ValueError as e:
        raise DataError(str(e))
    with open(os.path.join(out_dir, "ablate.json"), "w") as f:
        json.dump({"config": cfg, "embedder": emb.identifier, "rows": rows}, f, indent=1, sort_keys=True)
        f.write("\n")
    table = _format_table(rows)
    with open(os.path.join(out_dir, "ablate.txt"), "w") as f:
        f.write(table)
    print(table, end="")
    return 0


def _run_metrics(cfg: dict, frames_dir: str, out_path: str | None) -> int:
    if not os.path.isdir(frames_dir):
        raise DataError(f"missing frame directory: {frames_dir}")
    names = sorted(n for n in os.listdir(frames_dir) if n.endswith(".ppm"))
    if not names:
        raise DataError(f"no .ppm frames in {frames_dir}")
    video = np.stack([read_ppm(os.path.join(frames_dir, n)) for n in names])
    emb = metrics.PatchEmbedder(seed=cfg["embedder_seed"])
    tau = denoiser.embed_prompt(cfg["prompt"], cfg["prompt_seed"])
    try:
        report = {
            "embedder": emb.identifier,
            "embedder_seed": cfg["embedder_seed"],
            "frames": len(names),
            "frame_consistency": metrics.frame_consistency(video, emb) if len(names) > 1 else None,
            "prompt_consistency": metrics.prompt_consistency(video, tau, emb),
        }
    except ValueError as e:
        raise DataError(str(e))
    text = json.dumps(report, indent=1, sort_keys=True)
    if out_path:
        with open(out_path, "w") as f:
            f.write(text + "\n")
    print(text)
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file (defaults apply for missing keys)")
    p.add_argument("--conditions", help="TNSR condition stack [frames, channels, H, W] (latent resolution)")
    p.add_argument("--weights", help="weights manifest JSON (blob defaults to same name with .bin)")
    p.add_argument("--weights-blob", dest="weights_blob", help="weights tensor blob")
    p.add_argument("--out", help="output directory")
    p.add_argument("--prompt", help="text prompt")
    p.add_argument("--seed", type=int, help="sampling seed")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crossframe", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("sample-short", "sample-long"):
        _add_common(sub.add_parser(name, help=f"{name.replace('-', ' ')} video sampling"))
    pab = sub.add_parser("ablate", help="run the cross-frame mechanism comparison")
    _add_common(pab)
    pab.add_argument(
        "--mechanisms",
        default=",".join(m.value for m in Mechanism),
        help="comma-separated mechanism list",
    )
    pm = sub.add_parser("metrics", help="score an existing frame directory")
    pm.add_argument("--frames", required=True, help="directory of .ppm frames")
    pm.add_argument("--prompt", help="text prompt")
    pm.add_argument("--config", help="JSON config file")
    pm.add_argument("--out", help="report JSON path")
    pf = sub.add_parser("make-fixtures", help="write seeded weights, conditions, and golden tensors")
    pf.add_argument("--out", required=True, help="output directory")
    pf.add_argument("--frames", type=int, default=15)
    pf.add_argument("--weights-seed", dest="weights_seed", type=int, default=1)
    pf.add_argument("--latent-size", dest="latent_size", type=int, default=32)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "make-fixtures":
            paths = fixtures.write_fixtures(
                args.out, weights_seed=args.weights_seed, frames=args.frames, latent_hw=args.latent_size
            )
            print(json.dumps(paths, indent=1, sort_keys=True))
            return 0
        if args.command == "metrics":
            cfg = load_config(args.config, {"prompt": args.prompt})
            return _run_metrics(cfg, args.frames, args.out)
        overrides = {
            "conditions": args.conditions,
            "weights": args.weights,
            "weights_blob": args.weights_blob,
            "out": args.out,
            "prompt": args.prompt,
            "seed": args.seed,
        }
        cfg = load_config(args.config, overrides)
        if args.command == "ablate":
            return _run_ablate(cfg, args.mechanisms)
        return _run_sampler(cfg, long=(args.command == "sample-long"))
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE_ERROR
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return DATA_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
