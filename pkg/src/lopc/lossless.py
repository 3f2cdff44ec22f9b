"""Reversible byte-stream stages and the chunked stream format built from them.

Stages operate on little-endian words of ``k`` bytes:

* ``Delta(k)``       -- wrapping difference to the previous word
* ``Negabinary(k)``  -- ``(v + M) ^ M`` with ``M = 0xAA..AA``
* ``BitShuffle(k)``  -- bit-plane transpose, plane ``j`` holds bit ``j`` of every word
* ``ZeroElim(k)``    -- drop zero words, keep a presence bitmap (repeated-zero elimination)

The presence bitmap is itself shrunk by repeated-word elimination, applied
recursively.  Streams are cut into independent 16 KiB chunks; a chunk whose
encoding does not shrink is stored raw.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import CorruptStream, LengthMismatch

CHUNK_SIZE = 16384

_UINT = {1: np.uint8, 2: np.uint16, 4: np.uint32, 8: np.uint64}


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


# -- word-level transforms ----------------------------------------------------

def delta_encode(words: np.ndarray) -> np.ndarray:
    """``out[0] = in[0]``, ``out[i] = in[i] - in[i-1]`` modulo the word width."""
    u = np.asarray(words)
    u = u.view(_UINT[u.dtype.itemsize])
    out = u.copy()
    out[1:] = u[1:] - u[:-1]
    return out.view(words.dtype)


def delta_decode(words: np.ndarray) -> np.ndarray:
    u = np.asarray(words)
    u = u.view(_UINT[u.dtype.itemsize])
    return np.cumsum(u, dtype=u.dtype).view(words.dtype)


def _nega_mask(dtype) -> np.ndarray:
    size = np.dtype(dtype).itemsize
    return np.array(int("AA" * size, 16), dtype=_UINT[size])


def negabinary_encode(words: np.ndarray) -> np.ndarray:
    """Signed words to negabinary digits; small magnitudes keep the high bits clear."""
    u = np.asarray(words).view(_UINT[words.dtype.itemsize])
    m = _nega_mask(u.dtype)
    return (u + m) ^ m


def negabinary_decode(words: np.ndarray, dtype=None) -> np.ndarray:
    u = np.asarray(words).view(_UINT[words.dtype.itemsize])
    m = _nega_mask(u.dtype)
    out = (u ^ m) - m
    return out.view(dtype) if dtype is not None else out


def bit_shuffle(data: np.ndarray, k: int) -> np.ndarray:
    """Bit-plane transpose of a byte buffer holding ``len(data) // k`` words."""
    data = np.asarray(data, dtype=np.uint8)
    w = len(data) // k
    bits = np.unpackbits(data.reshape(w, k), axis=1, bitorder="little")
    return np.packbits(bits.T.ravel(), bitorder="little")


def bit_unshuffle(data: np.ndarray, k: int) -> np.ndarray:
    data = np.asarray(data, dtype=np.uint8)
    w = len(data) // k
    bits = np.unpackbits(data, bitorder="little").reshape(8 * k, w)
    return np.packbits(bits.T, axis=1, bitorder="little").ravel()


# -- bitmap compression by repeated-word elimination --------------------------

def rre_encode(bitmap: np.ndarray, k: int) -> bytes:
    """Recursively drop words equal to their predecessor.

    Layout: one depth byte, the innermost keep-bitmap, then the kept words of
    each level from the innermost outwards.  Recursion stops once the data is
    at most 8 bytes or a level would not shrink it.
    """
    data = np.asarray(bitmap, dtype=np.uint8)
    levels: list[bytes] = []
    while len(data) > 8 and len(levels) < 255:
        n = len(data)
        m = _ceil_div(n, k)
        words = np.zeros(m * k, dtype=np.uint8)
        words[:n] = data
        words = words.reshape(m, k)
        keep = np.ones(m, dtype=bool)
        keep[1:] = np.any(words[1:] != words[:-1], axis=1)
        meta = np.packbits(keep, bitorder="little")
        kept = words[keep]
        if len(meta) + kept.size >= n:
            break
        levels.append(kept.tobytes())
        data = meta
    return bytes([len(levels)]) + data.tobytes() + b"".join(reversed(levels))


def rre_decode(buf: bytes | memoryview, n: int, k: int) -> tuple[np.ndarray, int]:
    """Inverse of :func:`rre_encode` for a bitmap of ``n`` bytes; returns (bitmap, bytes read)."""
    buf = np.frombuffer(buf, dtype=np.uint8)
    if len(buf) < 1:
        raise CorruptStream("missing bitmap depth byte")
    depth = int(buf[0])
    lens = [n]
    for _ in range(depth):
        lens.append(_ceil_div(_ceil_div(lens[-1], k), 8))
    pos = 1
    data = buf[pos : pos + lens[depth]]
    if len(data) != lens[depth]:
        raise CorruptStream("truncated bitmap")
    pos += lens[depth]
    for lvl in reversed(range(depth)):
        m = _ceil_div(lens[lvl], k)
        keep = np.unpackbits(data, count=m, bitorder="little").astype(bool)
        if m and not keep[0]:
            raise CorruptStream("bitmap level does not start with a kept word")
        cnt = int(keep.sum())
        kept = buf[pos : pos + cnt * k]
        if len(kept) != cnt * k:
            raise CorruptStream("truncated bitmap words")
        pos += cnt * k
        words = kept.reshape(cnt, k)[np.cumsum(keep) - 1]
        data = words.ravel()[: lens[lvl]]
    return np.ascontiguousarray(data), pos


# -- byte stages ----------------------------------------------------------------

class Stage:
    name = "stage"
    k = 1

    def encode(self, data: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decode(self, data: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"{self.name}_{self.k}"


class Delta(Stage):
    name = "DIFF"

    def __init__(self, k: int):
        self.k = k

    def encode(self, data):
        return delta_encode(data.view(_UINT[self.k])).view(np.uint8)

    def decode(self, data):
        return delta_decode(data.view(_UINT[self.k])).view(np.uint8)


class Negabinary(Stage):
    name = "NEG"

    def __init__(self, k: int):
        self.k = k

    def encode(self, data):
        return negabinary_encode(data.view(_UINT[self.k])).view(np.uint8)

    def decode(self, data):
        return negabinary_decode(data.view(_UINT[self.k])).view(np.uint8)


class BitShuffle(Stage):
    name = "BIT"

    def __init__(self, k: int):
        self.k = k

    def encode(self, data):
        return bit_shuffle(data, self.k)

    def decode(self, data):
        return bit_unshuffle(data, self.k)


class ZeroElim(Stage):
    """Repeated-zero elimination: ``u32 length | bitmap | nonzero words``."""

    name = "RZE"

    def __init__(self, k: int):
        self.k = k

    def encode(self, data):
        k = self.k
        n = len(data)
        w = _ceil_div(n, k)
        words = np.zeros(w * k, dtype=np.uint8)
        words[:n] = data
        words = words.reshape(w, k)
        nz = np.any(words != 0, axis=1)
        bitmap = np.packbits(nz, bitorder="little")
        out = struct.pack("<I", n) + rre_encode(bitmap, k) + words[nz].tobytes()
        return np.frombuffer(out, dtype=np.uint8)

    def decode(self, data):
        k = self.k
        if len(data) < 4:
            raise CorruptStream("truncated zero-elimination header")
        (n,) = struct.unpack("<I", data[:4].tobytes())
        w = _ceil_div(n, k)
        bitmap, used = rre_decode(data[4:].tobytes(), _ceil_div(w, 8), k)
        nz = np.unpackbits(bitmap, count=w, bitorder="little").astype(bool)
        payload = data[4 + used :]
        if len(payload) != int(nz.sum()) * k:
            raise CorruptStream(
                f"zero-elimination payload has {len(payload)} bytes, bitmap expects {int(nz.sum()) * k}"
            )
        words = np.zeros((w, k), dtype=np.uint8)
        words[nz] = payload.reshape(-1, k)
        return words.ravel()[:n]


PIPELINES: dict[str, list[Stage]] = {
    "bins32": [Delta(4), Negabinary(4), BitShuffle(4), ZeroElim(4), ZeroElim(1)],
    "bins64": [Delta(8), Negabinary(8), BitShuffle(8), ZeroElim(8), ZeroElim(1)],
    "subbins32": [BitShuffle(4), ZeroElim(4), ZeroElim(1)],
    "subbins64": [BitShuffle(8), ZeroElim(8), ZeroElim(1)],
}


def _pipeline(name: str) -> list[Stage]:
    try:
        return PIPELINES[name]
    except KeyError:
        raise ValueError(f"unknown pipeline {name!r}; choose from {sorted(PIPELINES)}") from None


def encode_chunk(chunk: np.ndarray, stages: list[Stage]) -> tuple[int, bytes]:
    """Encode one chunk; returns ``(flag, payload)`` with flag 0 for raw storage."""
    width = max(s.k for s in stages)
    n = len(chunk)
    data = np.zeros(_ceil_div(n, width) * width, dtype=np.uint8)
    data[:n] = chunk
    for stage in stages:
        data = stage.encode(data)
    if len(data) >= n:
        return 0, chunk.tobytes()
    return 1, data.tobytes()


def decode_chunk(payload: bytes, flag: int, n: int, stages: list[Stage]) -> bytes:
    if flag == 0:
        if len(payload) != n:
            raise LengthMismatch(f"raw chunk holds {len(payload)} bytes, expected {n}")
        return payload
    if flag != 1:
        raise CorruptStream(f"unknown chunk flag {flag}")
    width = max(s.k for s in stages)
    data = np.frombuffer(payload, dtype=np.uint8)
    try:
        for stage in reversed(stages):
            data = stage.decode(data)
            if stage.k > 1 and len(data) % stage.k:
                raise CorruptStream(f"{stage!r} produced a partial word")
    except (ValueError, IndexError) as exc:
        raise CorruptStream(str(exc)) from exc
    if len(data) != _ceil_div(n, width) * width:
        raise LengthMismatch(f"chunk decoded to {len(data)} bytes, expected {n}")
    return data[:n].tobytes()


def compress_stream(data, pipeline: str, threads: int = 1) -> bytes:
    """Chunk ``data`` and encode every chunk with the named pipeline.

    Layout: ``u32 count``, then per chunk ``u32 raw length, u32 stored length,
    u8 flag``, then the payloads in order; little-endian throughout.
    """
    stages = _pipeline(pipeline)
    if isinstance(data, (bytes, bytearray, memoryview)):
        raw = np.frombuffer(data, dtype=np.uint8)
    else:
        raw = np.ascontiguousarray(data).reshape(-1).view(np.uint8)
    chunks = [raw[i : i + CHUNK_SIZE] for i in range(0, len(raw), CHUNK_SIZE)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            encoded = list(pool.map(lambda c: encode_chunk(c, stages), chunks))
    else:
        encoded = [encode_chunk(c, stages) for c in chunks]
    head = [struct.pack("<I", len(chunks))]
    for c, (flag, payload) in zip(chunks, encoded):
        head.append(struct.pack("<IIB", len(c), len(payload), flag))
    return b"".join(head) + b"".join(p for _, p in encoded)


def decompress_stream(buf: bytes, pipeline: str, threads: int = 1) -> bytes:
    stages = _pipeline(pipeline)
    buf = bytes(buf)
    if len(buf) < 4:
        raise CorruptStream("stream shorter than its chunk count")
    (count,) = struct.unpack_from("<I", buf, 0)
    pos = 4
    if len(buf) < pos + 9 * count:
        raise CorruptStream("truncated chunk directory")
    entries = []
    for i in range(count):
        n, clen, flag = struct.unpack_from("<IIB", buf, pos)
        pos += 9
        if n > CHUNK_SIZE or n == 0:
            raise CorruptStream(f"chunk {i} claims {n} raw bytes")
        entries.append((n, clen, flag))
    jobs = []
    for n, clen, flag in entries:
        payload = buf[pos : pos + clen]
        if len(payload) != clen:
            raise CorruptStream("truncated chunk payload")
        pos += clen
        jobs.append((payload, flag, n))
    if pos != len(buf):
        raise LengthMismatch(f"{len(buf) - pos} trailing bytes after the last chunk")
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda j: decode_chunk(j[0], j[1], j[2], stages), jobs))
    else:
        parts = [decode_chunk(p, f, n, stages) for p, f, n in jobs]
    return b"".join(parts)
