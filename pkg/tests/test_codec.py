import struct

import numpy as np
import pytest

from lopc import synthetic
from lopc.codec import (
    MAGIC,
    ArchiveHeader,
    CompressedArchive,
    compress,
    compression_ratio,
    decompress,
    stream_split_stats,
)
from lopc.errors import (
    BadMagic,
    BinOverflow,
    CorruptStream,
    InvalidShape,
    LengthMismatch,
    NonFinite,
    VersionUnsupported,
    ZeroRange,
)
from lopc.fixpoint import check_local_order
from lopc.quantize import ErrorBound
from lopc.topology import diff_critical, verify_fields


def roundtrip(values, eb, threads=None):
    archive = compress(values, eb, threads=threads)
    out = decompress(archive.to_bytes(), threads=threads)
    return archive, out


def test_constant_field_abs():
    v = np.full((4, 5, 6), 3.25, dtype=np.float32)
    archive, out = roundtrip(v, ErrorBound("abs", 1.0))
    assert out.dtype == np.float32 and out.shape == v.shape
    assert np.all(np.abs(out.astype(np.float64) - 3.25) < 1.0)
    assert archive.header.data_range == 0.0


def test_constant_field_noa_rejected():
    with pytest.raises(ZeroRange):
        compress(np.ones((3, 3)), ErrorBound("noa", 1e-2))


def test_smooth_volume_preserves_topology():
    v = synthetic.smooth((64, 64, 64), seed=3)
    archive, out = roundtrip(v, ErrorBound("noa", 1e-2))
    assert compression_ratio(v, archive) > 1
    report = verify_fields(v, out, archive.header.eps_abs)
    assert report["bound_ok"]
    assert report["local_order_violations"] == 0
    assert report["false_positives"] == report["false_negatives"] == report["false_types"] == 0


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
@pytest.mark.parametrize("shape", [(1, 9), (7, 1), (2, 3), (5, 1, 4), (3, 4, 5)])
def test_small_shapes(dtype, shape):
    v = synthetic.noise(shape, seed=sum(shape), dtype=dtype)
    archive, out = roundtrip(v, ErrorBound("noa", 0.1))
    assert out.dtype == dtype
    assert np.all(np.abs(out.astype(np.float64) - v) < archive.header.eps_abs)
    assert check_local_order(v, out) == 0
    assert diff_critical(v, out).total == 0


def test_plateaus_keep_ties():
    v = synthetic.plateaus((20, 24, 28), seed=2)
    _, out = roundtrip(v, ErrorBound("noa", 1e-1))
    assert check_local_order(v, out) == 0
    assert diff_critical(v, out).total == 0


@pytest.mark.parametrize("bad", [np.zeros((0, 4)), np.zeros(5), np.zeros((2, 2, 2, 2))])
def test_bad_shapes(bad):
    with pytest.raises(InvalidShape):
        compress(bad, ErrorBound("abs", 1.0))


def test_non_finite():
    v = np.ones((3, 3))
    v[1, 1] = np.nan
    with pytest.raises(NonFinite):
        compress(v, ErrorBound("abs", 1.0))


def test_bound_too_small_for_magnitude():
    v = np.array([[1e30, -1e30]], dtype=np.float32)
    with pytest.raises(BinOverflow):
        compress(v, ErrorBound("abs", 1e-10))


def test_header_roundtrip():
    h = ArchiveHeader(np.dtype(np.float64), (3, 4, 5), "noa", 1e-3, 0.02, 20.0)
    buf = h.pack()
    assert buf[:4] == MAGIC
    back, pos = ArchiveHeader.unpack(buf)
    assert back == h and pos == len(buf)


def test_archive_is_self_describing():
    v = synthetic.smooth((6, 7, 8), seed=1, dtype=np.float64)
    archive = compress(v, ErrorBound("noa", 1e-3))
    blob = archive.to_bytes()
    assert len(blob) == len(archive)
    back = CompressedArchive.from_bytes(blob)
    assert back.header.dims == (8, 7, 6)
    assert back.header.eb_mode == "noa"
    assert np.array_equal(decompress(back), decompress(blob))


def test_decoder_uses_stored_bound():
    v = synthetic.smooth((10, 10), seed=4, dtype=np.float64)
    blob = bytearray(compress(v, ErrorBound("noa", 1e-2)).to_bytes())
    ref = decompress(bytes(blob))
    # scribbling over eb_user and data_range must not change the output
    off = 8 + 8 * 2 + 1
    blob[off : off + 8] = struct.pack("<d", 123.0)
    blob[off + 16 : off + 24] = struct.pack("<d", 456.0)
    assert np.array_equal(decompress(bytes(blob)), ref)


def test_corrupt_archives():
    v = synthetic.smooth((16, 16, 16), seed=5)
    blob = compress(v, ErrorBound("noa", 1e-3)).to_bytes()
    with pytest.raises(BadMagic):
        decompress(b"XXXX" + blob[4:])
    with pytest.raises(VersionUnsupported):
        decompress(blob[:4] + struct.pack("<H", 9) + blob[6:])
    with pytest.raises(CorruptStream):
        decompress(blob[:-3])
    with pytest.raises(CorruptStream):
        decompress(blob[:20])
    with pytest.raises(LengthMismatch):
        decompress(blob + b"\0")
    with pytest.raises(CorruptStream):
        decompress(b"")


def test_dims_mismatch_detected():
    v = synthetic.smooth((8, 8, 8), seed=6)
    blob = bytearray(compress(v, ErrorBound("noa", 1e-3)).to_bytes())
    blob[8:16] = struct.pack("<Q", 9)
    with pytest.raises(CorruptStream):
        decompress(bytes(blob))


def test_split_fractions():
    v = synthetic.smooth_plus_noise((40, 40, 40))
    loose = compress(v, ErrorBound("noa", 1.0))
    tight = compress(v, ErrorBound("noa", 1e-6))
    for a in (loose, tight):
        b, s = stream_split_stats(a)
        assert b + s == pytest.approx(1.0)
        assert stream_split_stats(a.to_bytes()) == (b, s)
    assert stream_split_stats(loose)[1] > 0.5
    assert stream_split_stats(tight)[0] > 0.5


def test_thread_count_does_not_change_bytes():
    v = synthetic.smooth_plus_noise((30, 33, 36))
    ref = compress(v, ErrorBound("noa", 1e-2), threads=1).to_bytes()
    for t in (2, 4, 0):
        assert compress(v, ErrorBound("noa", 1e-2), threads=t).to_bytes() == ref
    assert np.array_equal(decompress(ref, threads=4), decompress(ref, threads=1))


def test_stats_reported():
    v = synthetic.noise((10, 10, 10), seed=8)
    archive = compress(v, ErrorBound("noa", 0.5))
    assert archive.stats.iterations >= 1
    assert archive.stats.raises > 0
    assert archive.stats.seconds > 0
