import numpy as np
import pytest

from crossframe.attention import (
    AttentionParams,
    Mechanism,
    clip_attend,
    cross_frame_attend,
    keyframe_attend,
    scaled_dot_attention,
    score_counter,
)
from crossframe.numerics import Rng

ALL_MECHS = list(Mechanism)


def make_params(rng, model_dim, d):
    return AttentionParams(
        rng.gaussian((model_dim, d)), rng.gaussian((model_dim, d)), rng.gaussian((model_dim, d))
    )


def oracle_attend(q, k, v, d):
    """Independent reference: float64, log-sum-exp softmax (no max trick)."""
    q = q.astype(np.float64)
    k = k.astype(np.float64)
    v = v.astype(np.float64)
    s = q @ k.T / np.sqrt(d)
    lse = np.log(np.exp(s - s.max(axis=1, keepdims=True)).sum(axis=1, keepdims=True)) + s.max(
        axis=1, keepdims=True
    )
    return np.exp(s - lse) @ v


def oracle_kv_sources(mech, i, n):
    if mech is Mechanism.INDIVIDUAL:
        return [i]
    if mech is Mechanism.FIRST_ONLY:
        return [0]
    if mech is Mechanism.SPARSE_CAUSAL:
        srcs = [0, max(i - 1, 0)]
        return sorted(set(srcs))
    return list(range(n))


def oracle_cross_frame(frames, mech, p):
    n = frames.shape[0]
    out = []
    for i in range(n):
        kv = np.concatenate([frames[j] for j in oracle_kv_sources(mech, i, n)], axis=0)
        out.append(oracle_attend(frames[i] @ p.w_q, kv @ p.w_k, kv @ p.w_v, p.head_dim))
    return np.stack(out)


# ---------------------------------------------------------------- scaled dot

def test_single_key_row_copies_value_row():
    rng = Rng(0)
    q = rng.gaussian((5, 3))
    k = rng.gaussian((1, 3))
    v = rng.gaussian((1, 3))
    out = scaled_dot_attention(q, k, v, 3)
    assert np.array_equal(out, np.repeat(v, 5, axis=0))


def test_zero_query_gives_column_mean():
    rng = Rng(1)
    v = rng.gaussian((4, 6))
    out = scaled_dot_attention(np.zeros((2, 6), np.float32), rng.gaussian((4, 6)), v, 6)
    assert np.allclose(out, v.mean(axis=0), atol=1e-6)


def test_hand_softmax_value():
    out = scaled_dot_attention(
        np.float32([[1.0]]), np.float32([[1.0], [-1.0]]), np.float32([[1.0], [0.0]]), 1
    )
    assert out[0, 0] == pytest.approx(0.8808, abs=1e-4)


def test_dimension_mismatches_rejected():
    q = np.zeros((2, 3), np.float32)
    with pytest.raises(ValueError):
        scaled_dot_attention(q, np.zeros((2, 4), np.float32), np.zeros((2, 3), np.float32), 3)
    with pytest.raises(ValueError):
        scaled_dot_attention(q, np.zeros((2, 3), np.float32), np.zeros((5, 3), np.float32), 3)
    with pytest.raises(ValueError):
        scaled_dot_attention(q, np.zeros((2, 3), np.float32), np.zeros((2, 3), np.float32), 4)


# ---------------------------------------------------------------- mechanisms

def test_params_validation():
    rng = Rng(2)
    with pytest.raises(ValueError):
        AttentionParams(rng.gaussian((4, 3)), rng.gaussian((4, 2)), rng.gaussian((4, 3)))


@pytest.mark.parametrize("mech", ALL_MECHS)
def test_single_frame_equals_self_attention(mech):
    rng = Rng(3)
    frames = rng.gaussian((1, 5, 4))
    p = make_params(rng, 4, 4)
    out = cross_frame_attend(frames, mech, p)
    want = scaled_dot_attention(frames[0] @ p.w_q, frames[0] @ p.w_k, frames[0] @ p.w_v, 4)
    assert np.allclose(out[0], want, atol=1e-6)


@pytest.mark.parametrize("mech", ALL_MECHS)
def test_mechanisms_match_independent_oracle(mech):
    rng = Rng(4)
    for _ in range(10):
        n = int(rng.gaussian((1,))[0] % 3) + 2
        frames = rng.gaussian((n, 4, 6))
        p = make_params(rng, 6, 5)
        got = cross_frame_attend(frames, mech, p)
        assert np.allclose(got, oracle_cross_frame(frames, mech, p), atol=1e-5)


def test_fully_equals_concatenation_oracle():
    rng = Rng(5)
    for _ in range(20):
        n = int(abs(rng.gaussian((1,))[0]) * 10) % 4 + 1
        L = int(abs(rng.gaussian((1,))[0]) * 10) % 8 + 1
        frames = rng.gaussian((n, L, 6))
        p = make_params(rng, 6, 4)
        got = cross_frame_attend(frames, Mechanism.FULLY, p)
        flat = frames.reshape(n * L, 6)
        want = oracle_attend(flat @ p.w_q, flat @ p.w_k, flat @ p.w_v, 4).reshape(n, L, 4)
        assert np.allclose(got, want, atol=1e-5)


def test_first_only_perturbation_provenance():
    rng = Rng(6)
    frames = rng.gaussian((2, 4, 6))
    p = make_params(rng, 6, 6)
    base = cross_frame_attend(frames, Mechanism.FIRST_ONLY, p)
    bumped = frames.copy()
    bumped[1] += 1.5
    out = cross_frame_attend(bumped, Mechanism.FIRST_ONLY, p)
    assert np.array_equal(out[0], base[0])  # frame 0 never sees frame 1
    assert not np.array_equal(out[1], base[1])  # its query moved...
    # ...but keys/values still come from frame 0 only
    want = scaled_dot_attention(bumped[1] @ p.w_q, frames[0] @ p.w_k, frames[0] @ p.w_v, 6)
    assert np.array_equal(out[1], want)


def test_individual_out_of_frame_invariance_exact():
    rng = Rng(7)
    frames = rng.gaussian((4, 3, 5))
    p = make_params(rng, 5, 5)
    base = cross_frame_attend(frames, Mechanism.INDIVIDUAL, p)
    for j in range(4):
        bumped = frames.copy()
        bumped[j] = rng.gaussian((3, 5))
        out = cross_frame_attend(bumped, Mechanism.INDIVIDUAL, p)
        for i in range(4):
            if i != j:
                assert np.array_equal(out[i], base[i])


def test_sparse_causal_invariance_sets_exact():
    rng = Rng(8)
    n = 5
    frames = rng.gaussian((n, 3, 4))
    p = make_params(rng, 4, 4)
    base = cross_frame_attend(frames, Mechanism.SPARSE_CAUSAL, p)
    for i in range(n):
        visible = {i, 0, max(i - 1, 0)}
        for j in range(n):
            if j in visible:
                continue
            bumped = frames.copy()
            bumped[j] += 2.0
            out = cross_frame_attend(bumped, Mechanism.SPARSE_CAUSAL, p)
            assert np.array_equal(out[i], base[i]), (i, j)


# ---------------------------------------------------------------- key frames / clips

def test_keyframe_is_fully_bitwise():
    rng = Rng(9)
    keys = rng.gaussian((3, 4, 6))
    p = make_params(rng, 6, 5)
    assert np.array_equal(keyframe_attend(keys, p), cross_frame_attend(keys, Mechanism.FULLY, p))


def test_keyframe_single_frame_is_self_attention():
    rng = Rng(10)
    keys = rng.gaussian((1, 5, 4))
    p = make_params(rng, 4, 4)
    want = scaled_dot_attention(keys[0] @ p.w_q, keys[0] @ p.w_k, keys[0] @ p.w_v, 4)
    assert np.allclose(keyframe_attend(keys, p)[0], want, atol=1e-6)


def test_keyframe_matches_concat_oracle():
    rng = Rng(11)
    keys = rng.gaussian((3, 4, 6))
    p = make_params(rng, 6, 4)
    flat = keys.reshape(12, 6)
    want = oracle_attend(flat @ p.w_q, flat @ p.w_k, flat @ p.w_v, 4).reshape(3, 4, 4)
    assert np.allclose(keyframe_attend(keys, p), want, atol=1e-5)


def test_clip_attend_requires_two_keys():
    rng = Rng(12)
    p = make_params(rng, 4, 4)
    with pytest.raises(ValueError, match="exactly 2"):
        clip_attend(rng.gaussian((2, 3, 4)), rng.gaussian((3, 3, 4)), p)


def test_clip_attend_rows_are_convex_combinations():
    rng = Rng(13)
    clip = rng.gaussian((1, 6, 5))
    key_pair = rng.gaussian((2, 4, 5))
    p = make_params(rng, 5, 3)
    out = clip_attend(clip, key_pair, p)
    assert out.shape == (1, 6, 3)
    vhat = key_pair.reshape(8, 5) @ p.w_v
    lo, hi = vhat.min(axis=0), vhat.max(axis=0)
    assert np.all(out[0] >= lo - 1e-6) and np.all(out[0] <= hi + 1e-6)


def test_clip_attend_depends_only_on_clip_frame_and_key_pair():
    rng = Rng(14)
    stack = rng.gaussian((6, 3, 4))
    p = make_params(rng, 4, 4)
    clip = stack[1:4]
    pair = stack[np.array([0, 4])]
    base = clip_attend(clip, pair, p)
    # frame 5 is outside clip and key pair entirely; clip frame 2's output is
    # also exactly invariant to clip frames 1 and 3 (queries do not interact)
    bumped = clip.copy()
    bumped[0] += 3.0
    bumped[2] -= 1.0
    out = clip_attend(bumped, pair, p)
    assert np.array_equal(out[1], base[1])


def test_clip_attend_identical_keys_match_direct_computation():
    rng = Rng(15)
    frame = rng.gaussian((1, 4, 5))
    pair = np.concatenate([frame, frame], axis=0)
    p = make_params(rng, 5, 5)
    out = clip_attend(frame, pair, p)
    kv = pair.reshape(8, 5)
    want = oracle_attend(frame[0] @ p.w_q, kv @ p.w_k, kv @ p.w_v, 5)
    assert np.allclose(out[0], want, atol=1e-5)


# ---------------------------------------------------------------- properties

@pytest.mark.parametrize("mech", ALL_MECHS)
def test_outputs_in_value_hull(mech):
    rng = Rng(16)
    for _ in range(5):
        frames = rng.gaussian((3, 4, 5))
        p = make_params(rng, 5, 4)
        out = cross_frame_attend(frames, mech, p)
        for i in range(3):
            vhat = np.concatenate(
                [frames[j] @ p.w_v for j in oracle_kv_sources(mech, i, 3)], axis=0
            )
            lo, hi = vhat.min(axis=0), vhat.max(axis=0)
            assert np.all(out[i] >= lo - 1e-6) and np.all(out[i] <= hi + 1e-6)


def test_empty_frames_rejected():
    rng = Rng(17)
    p = make_params(rng, 4, 4)
    with pytest.raises(ValueError):
        cross_frame_attend(np.zeros((0, 3, 4), np.float32), Mechanism.FULLY, p)


# ---------------------------------------------------------------- instrumentation

def test_score_counter_accounting():
    rng = Rng(18)
    p = make_params(rng, 4, 4)
    frames = rng.gaussian((3, 2, 4))
    score_counter.reset()
    cross_frame_attend(frames, Mechanism.FULLY, p)
    assert score_counter.calls == 1
    assert score_counter.peak == score_counter.total == 36  # (3*2)^2
    score_counter.reset()
    cross_frame_attend(frames, Mechanism.INDIVIDUAL, p)
    assert score_counter.calls == 3
    assert score_counter.peak == 4 and score_counter.total == 12
    score_counter.reset()
