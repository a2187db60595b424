import json

import numpy as np
import pytest

from crossframe import cli
from crossframe.numerics import Rng, write_tnsr


def tiny_config(tmp_path, fixture_paths, name="config.json", **extra):
    cfg = {
        "frames": 3,
        "height": 16,
        "width": 16,
        "seed": 0,
        "smoother": None,
        "schedule": {"sample_count": 3},
        "conditions": fixture_paths["conditions"],
        "weights": fixture_paths["weights_manifest"],
        "out": str(tmp_path / "out"),
        "prompt": "a test prompt",
    }
    cfg.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture(scope="module")
def fixture_paths(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    rc = cli.run(["make-fixtures", "--out", str(out), "--frames", "3", "--latent-size", "8"])
    assert rc == 0
    return {
        "weights_manifest": str(out / "weights.json"),
        "weights_blob": str(out / "weights.bin"),
        "conditions": str(out / "conditions.tnsr"),
        "golden": str(out / "golden"),
    }


# ---------------------------------------------------------------- fixtures command

def test_make_fixtures_outputs(fixture_paths, tmp_path):
    import os

    for key in ("weights_manifest", "weights_blob", "conditions"):
        assert os.path.exists(fixture_paths[key])
    golden = os.listdir(fixture_paths["golden"])
    assert "gaussian_seed0_64.tnsr" in golden and "prompt_a_seed7.tnsr" in golden
    from crossframe.numerics import read_tnsr

    g = read_tnsr(os.path.join(fixture_paths["golden"], "gaussian_seed0_64.tnsr"))
    assert np.array_equal(g, Rng(0).gaussian((64,)))


# ---------------------------------------------------------------- sampling

def test_sample_short_writes_frames_and_report(fixture_paths, tmp_path):
    cfg = tiny_config(tmp_path, fixture_paths)
    assert cli.run(["sample-short", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    frames = sorted(p.name for p in out.glob("frame_*.ppm"))
    assert frames == ["frame_0000.ppm", "frame_0001.ppm", "frame_0002.ppm"]
    report = json.loads((out / "report.json").read_text())
    assert report["command"] == "sample-short"
    # config echo includes defaults that the file never mentioned
    assert report["config"]["mechanism"] == "fully"
    assert report["config"]["schedule"]["t_train"] == 1000
    assert report["config"]["prompt_seed"] == 7
    assert len(report["timing"]["steps"]) == 3
    assert report["metrics"]["prompt_consistency"] is not None


def test_sample_short_rerun_byte_identical_frames(fixture_paths, tmp_path):
    cfg_a = tiny_config(tmp_path, fixture_paths, name="a.json", out=str(tmp_path / "a"))
    cfg_b = tiny_config(tmp_path, fixture_paths, name="b.json", out=str(tmp_path / "b"))
    assert cli.run(["sample-short", "--config", str(cfg_a)]) == 0
    assert cli.run(["sample-short", "--config", str(cfg_b)]) == 0
    for i in range(3):
        fa = (tmp_path / "a" / f"frame_{i:04d}.ppm").read_bytes()
        fb = (tmp_path / "b" / f"frame_{i:04d}.ppm").read_bytes()
        assert fa == fb
    ra = json.loads((tmp_path / "a" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "report.json").read_text())
    ra["timing"] = rb["timing"] = None  # wall-clock differs; everything else must not
    ra["config"]["out"] = rb["config"]["out"] = None
    assert ra == rb


def test_sample_long_runs(fixture_paths, tmp_path):
    cfg = tiny_config(
        tmp_path, fixture_paths, frames=5, clip_spacing=2,
        conditions=None, out=str(tmp_path / "long_out"),
    )
    # conditions fixture has 3 frames; build a 5-frame stack
    cond_path = tmp_path / "cond5.tnsr"
    from crossframe.fixtures import moving_square_conditions

    write_tnsr(cond_path, moving_square_conditions(5, 8, 8))
    rc = cli.run(["sample-long", "--config", str(cfg), "--conditions", str(cond_path)])
    assert rc == 0
    assert len(list((tmp_path / "long_out").glob("frame_*.ppm"))) == 5


# ---------------------------------------------------------------- metrics

def test_metrics_on_identical_frames_scores_100(tmp_path):
    frames_dir = tmp_path / "frames"
    frames_dir.mkdir()
    frame = np.full((3, 16, 16), 0.5, dtype=np.float32)
    for i in range(3):
        cli.write_ppm(str(frames_dir / f"frame_{i:04d}.ppm"), frame)
    out = tmp_path / "scores.json"
    rc = cli.run(["metrics", "--frames", str(frames_dir), "--prompt", "anything", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["frame_consistency"] == 100.0
    assert "embedder" in report


def test_ppm_round_trip(tmp_path):
    frame = np.clip(Rng(1).gaussian((3, 8, 8)) * 0.2 + 0.5, 0, 1).astype(np.float32)
    p = tmp_path / "f.ppm"
    cli.write_ppm(str(p), frame)
    back = cli.read_ppm(str(p))
    assert back.shape == (3, 8, 8)
    assert np.max(np.abs(back - frame)) <= 0.5 / 255 + 1e-6


def test_ppm_header_layout(tmp_path):
    frame = np.zeros((3, 2, 4), dtype=np.float32)
    frame[0, 0, 0] = 1.0
    p = tmp_path / "f.ppm"
    cli.write_ppm(str(p), frame)
    raw = p.read_bytes()
    assert raw.startswith(b"P6\n4 2\n255\n")
    assert len(raw) == len(b"P6\n4 2\n255\n") + 3 * 2 * 4
    assert raw[len(b"P6\n4 2\n255\n")] == 255  # clamp(round(255 * 1.0))


# ---------------------------------------------------------------- ablate

def test_ablate_table(fixture_paths, tmp_path):
    cfg = tiny_config(tmp_path, fixture_paths, out=str(tmp_path / "ab"))
    rc = cli.run(["ablate", "--config", str(cfg)])
    assert rc == 0
    data = json.loads((tmp_path / "ab" / "ablate.json").read_text())
    rows = data["rows"]
    assert [r["mechanism"] for r in rows] == ["individual", "first-only", "sparse-causal", "fully"]
    for r in rows:
        assert set(r) == {"mechanism", "frame_consistency", "prompt_consistency", "time_s"}
    table = (tmp_path / "ab" / "ablate.txt").read_text().splitlines()
    assert "mechanism" in table[0] and "time cost" in table[0]
    assert len(table) == 2 + 4  # header + rule + one line per mechanism


# ---------------------------------------------------------------- errors

def test_usage_error_exit_code_1():
    assert cli.run(["sample-short", "--no-such-flag"]) == 1
    assert cli.run(["frobnicate"]) == 1
    assert cli.run(["ablate", "--mechanisms", ""]) == 1


def test_missing_required_paths_is_usage_error(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{}")
    assert cli.run(["sample-short", "--config", str(cfg)]) == 1


def test_missing_files_exit_code_2(fixture_paths, tmp_path):
    cfg = tiny_config(tmp_path, fixture_paths, conditions=str(tmp_path / "nope.tnsr"))
    assert cli.run(["sample-short", "--config", str(cfg)]) == 2
    assert cli.run(["sample-short", "--config", str(tmp_path / "missing.json")]) == 2


def test_malformed_inputs_exit_code_2(fixture_paths, tmp_path):
    bad = tmp_path / "bad.tnsr"
    bad.write_bytes(b"JUNKJUNKJUNK")
    cfg = tiny_config(tmp_path, fixture_paths, conditions=str(bad))
    assert cli.run(["sample-short", "--config", str(cfg)]) == 2

    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    assert cli.run(["sample-short", "--config", str(bad_json)]) == 2


def test_unknown_config_key_rejected(fixture_paths, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"frames": 3, "bogus_knob": 1}))
    assert cli.run(["sample-short", "--config", str(cfg)]) == 2
    nested = tmp_path / "n.json"
    nested.write_text(json.dumps({"schedule": {"sample_count": 3, "warmup": 1}}))
    assert cli.run(["sample-short", "--config", str(nested)]) == 2


def test_shape_mismatch_exit_code_2(fixture_paths, tmp_path):
    wrong = tmp_path / "wrong.tnsr"
    write_tnsr(wrong, np.zeros((3, 1, 4, 4), dtype=np.float32))  # wrong latent dims
    cfg = tiny_config(tmp_path, fixture_paths, conditions=str(wrong))
    assert cli.run(["sample-short", "--config", str(cfg)]) == 2
