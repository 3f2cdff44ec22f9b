import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lopc.errors import CorruptStream
from lopc.lossless import (
    CHUNK_SIZE,
    PIPELINES,
    BitShuffle,
    ZeroElim,
    bit_shuffle,
    bit_unshuffle,
    compress_stream,
    decompress_stream,
    delta_decode,
    delta_encode,
    negabinary_decode,
    negabinary_encode,
    rre_decode,
    rre_encode,
)

from .oracles import naive_bit_transpose


def test_delta_examples():
    assert list(delta_encode(np.array([5, 5, 5], dtype=np.uint32))) == [5, 0, 0]
    assert list(delta_encode(np.array([0, 1, 3], dtype=np.uint32))) == [0, 1, 2]


def test_delta_wraps():
    w = np.array([0, 2**32 - 1, 0], dtype=np.uint32)
    assert np.array_equal(delta_decode(delta_encode(w)), w)


def test_negabinary_small_values():
    # -1 in base -2 is 11
    assert int(negabinary_encode(np.array([-1], dtype=np.int32).view(np.uint32))[0]) == 0b11
    assert int(negabinary_encode(np.array([0], dtype=np.uint32))[0]) == 0
    assert int(negabinary_encode(np.array([1], dtype=np.uint32))[0]) == 1
    assert int(negabinary_encode(np.array([2], dtype=np.uint32))[0]) == 0b110


@given(st.lists(st.integers(0, 2**64 - 1), max_size=50))
def test_negabinary_roundtrip_64(vals):
    w = np.array(vals, dtype=np.uint64)
    assert np.array_equal(negabinary_decode(negabinary_encode(w)), w)


@given(st.lists(st.integers(0, 2**32 - 1), max_size=50))
def test_negabinary_roundtrip_32(vals):
    w = np.array(vals, dtype=np.uint32)
    assert np.array_equal(negabinary_decode(negabinary_encode(w)), w)


@pytest.mark.parametrize("k", [1, 4, 8])
@given(data=st.binary(max_size=200))
def test_bit_shuffle_matches_naive(k, data):
    n = len(data) - len(data) % k
    buf = np.frombuffer(data[:n], dtype=np.uint8)
    words = [int.from_bytes(data[i : i + k], "little") for i in range(0, n, k)]
    assert bytes(bit_shuffle(buf, k)) == naive_bit_transpose(words, k)
    assert bytes(bit_unshuffle(bit_shuffle(buf, k), k)) == bytes(buf)


def test_bit_shuffle_single_word():
    out = bit_shuffle(np.array([1, 0, 0, 0], dtype=np.uint8), 4)
    assert list(out) == [1, 0, 0, 0]
    out = bit_shuffle(np.array([1, 0, 0, 0, 1, 0, 0, 0], dtype=np.uint8), 4)
    # bit 0 of both words lands in the first plane
    assert list(out) == [0b11, 0, 0, 0, 0, 0, 0, 0]


def test_zero_elim_example():
    words = np.array([5, 0, 0, 7], dtype=np.uint32).view(np.uint8)
    enc = ZeroElim(4).encode(words)
    n, depth, bitmap = struct.unpack_from("<IBB", enc.tobytes())
    assert (n, depth, bitmap) == (16, 0, 0b1001)
    assert list(enc[6:].view(np.uint32)) == [5, 7]
    assert np.array_equal(ZeroElim(4).decode(enc), words)


def test_rre_alternating_does_not_recurse():
    bitmap = np.tile(np.array([0x00, 0xFF], dtype=np.uint8), 32)
    enc = rre_encode(bitmap, 1)
    assert enc[0] == 0
    dec, used = rre_decode(enc, len(bitmap), 1)
    assert used == len(enc) and np.array_equal(dec, bitmap)


def test_rre_identical_words_shrink():
    bitmap = np.full(4096, 0xFF, dtype=np.uint8)
    enc = rre_encode(bitmap, 1)
    assert enc[0] >= 1
    assert len(enc) < 32
    dec, used = rre_decode(enc, len(bitmap), 1)
    assert used == len(enc) and np.array_equal(dec, bitmap)


@pytest.mark.parametrize("k", [1, 4, 8])
@given(st.lists(st.sampled_from([0, 0, 0, 1, 255]), max_size=600))
def test_rre_roundtrip(k, vals):
    bitmap = np.array(vals, dtype=np.uint8)
    enc = rre_encode(bitmap, k)
    dec, used = rre_decode(enc + b"tail", len(bitmap), k)
    assert used == len(enc)
    assert np.array_equal(dec, bitmap)


def _samples(rng, n):
    return {
        "random": rng.integers(0, 256, n, dtype=np.uint8),
        "zero": np.zeros(n, dtype=np.uint8),
        "sparse": (rng.random(n) < 0.02).astype(np.uint8) * rng.integers(1, 256, n, dtype=np.uint8),
        "ramp": np.arange(n // 4 + 1, dtype=np.uint32).view(np.uint8)[:n].copy(),
    }


@pytest.mark.parametrize("pipeline", sorted(PIPELINES))
@pytest.mark.parametrize("n", [0, 1, 3, 7, 8, 16383, 16384, 16385, 40000])
def test_pipeline_roundtrip_sizes(pipeline, n):
    rng = np.random.default_rng(n)
    for name, data in _samples(rng, n).items():
        blob = compress_stream(data, pipeline)
        assert decompress_stream(blob, pipeline) == data.tobytes(), name


@pytest.mark.parametrize("pipeline", sorted(PIPELINES))
def test_raw_fallback_bounds_size(pipeline):
    data = np.random.default_rng(0).integers(0, 256, 100000, dtype=np.uint8)
    blob = compress_stream(data, pipeline)
    chunks = -(-len(data) // CHUNK_SIZE)
    assert len(blob) <= len(data) + 4 + 9 * chunks


def test_zeros_compress_well():
    blob = compress_stream(np.zeros(1 << 20, dtype=np.uint8), "subbins32")
    assert len(blob) < 2000


def test_empty_stream():
    blob = compress_stream(b"", "bins64")
    assert blob == struct.pack("<I", 0)
    assert decompress_stream(blob, "bins64") == b""


def test_unknown_pipeline():
    with pytest.raises(ValueError):
        compress_stream(b"abc", "nope")


def test_corruption_raises():
    data = np.random.default_rng(3).integers(0, 4, 50000, dtype=np.uint8)
    blob = compress_stream(data, "bins32")
    with pytest.raises(CorruptStream):
        decompress_stream(blob[:-1], "bins32")
    with pytest.raises(CorruptStream):
        decompress_stream(blob + b"\0", "bins32")
    with pytest.raises(CorruptStream):
        decompress_stream(blob[:2], "bins32")
    bad = bytearray(blob)
    bad[4:8] = struct.pack("<I", CHUNK_SIZE + 1)
    with pytest.raises(CorruptStream):
        decompress_stream(bytes(bad), "bins32")


@given(st.binary(max_size=300))
@settings(max_examples=300)
def test_garbage_never_crashes(buf):
    for pipeline in PIPELINES:
        try:
            decompress_stream(buf, pipeline)
        except CorruptStream:
            pass


def test_chunk_parallel_identical():
    data = np.random.default_rng(5).integers(0, 3, 200000, dtype=np.uint8)
    for pipeline in PIPELINES:
        one = compress_stream(data, pipeline, threads=1)
        assert compress_stream(data, pipeline, threads=4) == one
        assert decompress_stream(one, pipeline, threads=4) == data.tobytes()


def test_stage_repr_and_width():
    assert "4" in repr(BitShuffle(4))
    assert max(s.k for s in PIPELINES["bins64"]) == 8
