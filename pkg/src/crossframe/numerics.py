"""Dense float32 tensor helpers, a fixed counter-based RNG, and TNSR file I/O.

Everything downstream works on plain numpy float32 arrays (rank <= 5,
all extents >= 1). The random source is pinned to one exact algorithm,
Philox4x32-10 feeding a Box-Muller transform, so that a seed produces the
same byte stream on every platform and numpy version. Do not swap in
``numpy.random``: its generator streams are not part of this package's
contract and golden files would rot.
"""

from __future__ import annotations

import struct

import numpy as np

MAX_RANK = 5

_TNSR_MAGIC = b"TNSR"
_TNSR_VERSION = 1

# Philox4x32 round constants (multipliers) and Weyl key increments.
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = 0x9E3779B9
_PHILOX_W1 = 0xBB67AE85
_PHILOX_ROUNDS = 10
_LO32 = np.uint64(0xFFFFFFFF)
_TWO32 = 4294967296.0


def as_f32(x) -> np.ndarray:
    """Coerce to a C-contiguous float32 array and check the rank contract."""
    a = np.ascontiguousarray(x, dtype=np.float32)
    check_dims(a.shape)
    return a


def check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) > MAX_RANK:
        raise ValueError(f"rank {len(dims)} exceeds maximum {MAX_RANK}")
    if any(d < 1 for d in dims):
        raise ValueError(f"all extents must be >= 1, got {dims}")
    return dims


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a rank-2 array, stabilised by max subtraction.

    Raises ValueError("non-finite logits") if any entry is NaN or infinite.
    """
    m = np.asarray(m, dtype=np.float32)
    if m.ndim != 2:
        raise ValueError(f"softmax_rows expects rank 2, got rank {m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite logits")
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """cos(a, b) = <a,b> / (|a||b|), accumulated in float64.

    Computed as dot / sqrt(dot_aa * dot_bb), which returns exactly 1.0 for
    identical vectors (sqrt(x*x) == x in round-to-nearest). Zero vectors are
    rejected with ValueError("zero-norm embedding").
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"vector length mismatch: {a.shape} vs {b.shape}")
    aa = float(np.dot(a, a))
    bb = float(np.dot(b, b))
    if aa == 0.0 or bb == 0.0:
        raise ValueError("zero-norm embedding")
    return float(np.dot(a, b)) / float(np.sqrt(aa * bb))


class Rng:
    """Seeded Gaussian source: Philox4x32-10 counter stream + Box-Muller.

    One counter block yields four uint32 words, hence four N(0,1) samples:
    (x0, x1) and (x2, x3) each map through
        u1 = (x + 1) / 2^32,  u2 = y / 2^32,
        r = sqrt(-2 ln u1),   z = (r cos(2 pi u2), r sin(2 pi u2)).
    Every call consumes whole blocks, so the stream position only depends on
    the sequence of requested sample counts. Single-owner: share seeds, not
    instances, across threads.
    """

    ALGORITHM = "philox4x32-10/box-muller"

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._offset = 0  # blocks consumed so far

    def _blocks(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        ctr = np.arange(self._offset, self._offset + n, dtype=np.uint64)
        self._offset += n
        c0 = (ctr & _LO32).astype(np.uint32)
        c1 = (ctr >> np.uint64(32)).astype(np.uint32)
        c2 = np.zeros(n, dtype=np.uint32)
        c3 = np.zeros(n, dtype=np.uint32)
        k0 = self.seed & 0xFFFFFFFF
        k1 = (self.seed >> 32) & 0xFFFFFFFF
        for _ in range(_PHILOX_ROUNDS):
            p0 = _PHILOX_M0 * c0.astype(np.uint64)
            p1 = _PHILOX_M1 * c2.astype(np.uint64)
            hi0 = (p0 >> np.uint64(32)).astype(np.uint32)
            lo0 = (p0 & _LO32).astype(np.uint32)
            hi1 = (p1 >> np.uint64(32)).astype(np.uint32)
            lo1 = (p1 & _LO32).astype(np.uint32)
            c0 = hi1 ^ c1 ^ np.uint32(k0)
            c1 = lo1
            c2 = hi0 ^ c3 ^ np.uint32(k1)
            c3 = lo0
            k0 = (k0 + _PHILOX_W0) & 0xFFFFFFFF
            k1 = (k1 + _PHILOX_W1) & 0xFFFFFFFF
        return c0, c1, c2, c3

    def gaussian(self, dims) -> np.ndarray:
        """i.i.d. standard normal float32 samples of the given shape."""
        dims = check_dims(dims if not isinstance(dims, int) else (dims,))
        n = int(np.prod(dims))
        nblk = (n + 3) // 4
        x0, x1, x2, x3 = self._blocks(nblk)
        u1 = (x0.astype(np.float64) + 1.0) / _TWO32
        u2 = x1.astype(np.float64) / _TWO32
        u3 = (x2.astype(np.float64) + 1.0) / _TWO32
        u4 = x3.astype(np.float64) / _TWO32
        r12 = np.sqrt(-2.0 * np.log(u1))
        r34 = np.sqrt(-2.0 * np.log(u3))
        t12 = (2.0 * np.pi) * u2
        t34 = (2.0 * np.pi) * u4
        z = np.stack(
            [r12 * np.cos(t12), r12 * np.sin(t12), r34 * np.cos(t34), r34 * np.sin(t34)],
            axis=1,
        ).reshape(-1)[:n]
        return z.astype(np.float32).reshape(dims)


def gaussian(rng: Rng, dims) -> np.ndarray:
    return rng.gaussian(dims)


def write_tnsr(path, array: np.ndarray) -> None:
    """Write the TNSR binary format.

    Layout: magic "TNSR", version byte 0x01, rank byte, rank uint32
    little-endian extents, then float32 little-endian data in row-major order.
    """
    a = as_f32(array)
    with open(path, "wb") as f:
        f.write(_TNSR_MAGIC)
        f.write(struct.pack("<BB", _TNSR_VERSION, a.ndim))
        f.write(struct.pack(f"<{a.ndim}I", *a.shape))
        f.write(a.astype("<f4").tobytes(order="C"))


def read_tnsr(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    return tnsr_from_bytes(data)


def tnsr_from_bytes(data: bytes) -> np.ndarray:
    if data[:4] != _TNSR_MAGIC:
        raise ValueError("not a TNSR file (bad magic)")
    if len(data) < 6:
        raise ValueError("truncated TNSR header")
    version, rank = data[4], data[5]
    if version != _TNSR_VERSION:
        raise ValueError(f"unsupported TNSR version {version}")
    if rank > MAX_RANK:
        raise ValueError(f"TNSR rank {rank} exceeds maximum {MAX_RANK}")
    head = 6 + 4 * rank
    if len(data) < head:
        raise ValueError("truncated TNSR dims")
    dims = struct.unpack(f"<{rank}I", data[6:head])
    check_dims(dims)
    n = int(np.prod(dims)) if rank else 1
    body = data[head:]
    if len(body) != 4 * n:
        raise ValueError(f"TNSR payload is {len(body)} bytes, expected {4 * n}")
    return np.frombuffer(body, dtype="<f4").reshape(dims).astype(np.float32)


def tnsr_to_bytes(array: np.ndarray) -> bytes:
    a = as_f32(array)
    parts = [
        _TNSR_MAGIC,
        struct.pack("<BB", _TNSR_VERSION, a.ndim),
        struct.pack(f"<{a.ndim}I", *a.shape),
        a.astype("<f4").tobytes(order="C"),
    ]
    return b"".join(parts)
