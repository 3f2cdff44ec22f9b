"""End-to-end compression and the self-describing archive format.

Archive layout (little-endian, IEEE-754)::

    "LOPC"  u16 version  u8 dtype  u8 rank  u64 dims[rank]
    u8 eb_mode  f64 eb_user  f64 eps_abs  f64 data_range  8 reserved bytes
    u64 bin_stream_length    bin stream      (chunked, see lossless)
    u64 subbin_stream_length subbin stream

``dims`` are listed x first.  The decoder uses ``eps_abs`` from the header as
is; it never recomputes it from ``eb_user``.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field

import numpy as np

from . import lossless
from .errors import BadMagic, CorruptStream, InvalidShape, LengthMismatch, VersionUnsupported
from .fixpoint import compute_flags, fixpoint_worklist, resolve_threads
from .grid import GridShape
from .quantize import (
    ABS,
    NOA,
    ErrorBound,
    QuantizedField,
    bin_dtype,
    check_field,
    decode,
    quantize,
    resolve,
    subbin_dtype,
    verify_encode,
)

MAGIC = b"LOPC"
VERSION = 1

_DTYPES = {0: np.dtype(np.float32), 1: np.dtype(np.float64)}
_DTYPE_CODES = {v: k for k, v in _DTYPES.items()}
_MODES = {0: ABS, 1: NOA}
_MODE_CODES = {v: k for k, v in _MODES.items()}


@dataclass(frozen=True)
class ArchiveHeader:
    dtype: np.dtype
    dims: tuple[int, ...]
    eb_mode: str
    eb_user: float
    eps_abs: float
    data_range: float

    @property
    def shape(self) -> GridShape:
        return GridShape(self.dims)

    def pack(self) -> bytes:
        rank = len(self.dims)
        return (
            MAGIC
            + struct.pack("<HBB", VERSION, _DTYPE_CODES[np.dtype(self.dtype)], rank)
            + struct.pack(f"<{rank}Q", *self.dims)
            + struct.pack("<Bddd", _MODE_CODES[self.eb_mode], self.eb_user, self.eps_abs, self.data_range)
            + bytes(8)
        )

    @classmethod
    def unpack(cls, buf: bytes) -> tuple[ArchiveHeader, int]:
        if len(buf) < 8:
            raise CorruptStream("archive shorter than its header")
        if buf[:4] != MAGIC:
            raise BadMagic(f"expected {MAGIC!r}, found {bytes(buf[:4])!r}")
        version, dcode, rank = struct.unpack_from("<HBB", buf, 4)
        if version != VERSION:
            raise VersionUnsupported(f"archive version {version}, this build reads {VERSION}")
        if dcode not in _DTYPES or rank not in (2, 3):
            raise CorruptStream(f"bad dtype code {dcode} or rank {rank}")
        pos = 8
        need = pos + 8 * rank + 25 + 8
        if len(buf) < need:
            raise CorruptStream("truncated header")
        dims = struct.unpack_from(f"<{rank}Q", buf, pos)
        pos += 8 * rank
        mcode, eb_user, eps_abs, data_range = struct.unpack_from("<Bddd", buf, pos)
        pos += 25 + 8
        if mcode not in _MODES:
            raise CorruptStream(f"bad error-bound mode {mcode}")
        if not (np.isfinite(eps_abs) and eps_abs > 0):
            raise CorruptStream(f"bad eps_abs {eps_abs!r}")
        try:
            GridShape(dims)
        except InvalidShape as exc:
            raise CorruptStream(str(exc)) from exc
        hdr = cls(_DTYPES[dcode], tuple(dims), _MODES[mcode], eb_user, eps_abs, data_range)
        return hdr, pos


@dataclass
class CompressionStats:
    iterations: int = 0
    raises: int = 0
    processed: int = 0
    seconds: float = 0.0


@dataclass
class CompressedArchive:
    header: ArchiveHeader
    bin_stream: bytes
    subbin_stream: bytes
    stats: CompressionStats = field(default_factory=CompressionStats, compare=False)

    def to_bytes(self) -> bytes:
        return (
            self.header.pack()
            + struct.pack("<Q", len(self.bin_stream))
            + self.bin_stream
            + struct.pack("<Q", len(self.subbin_stream))
            + self.subbin_stream
        )

    @classmethod
    def from_bytes(cls, buf: bytes) -> CompressedArchive:
        buf = bytes(buf)
        header, pos = ArchiveHeader.unpack(buf)
        streams = []
        for name in ("bin", "subbin"):
            if len(buf) < pos + 8:
                raise CorruptStream(f"truncated {name} stream length")
            (n,) = struct.unpack_from("<Q", buf, pos)
            pos += 8
            if len(buf) < pos + n:
                raise CorruptStream(f"truncated {name} stream")
            streams.append(buf[pos : pos + n])
            pos += n
        if pos != len(buf):
            raise LengthMismatch(f"{len(buf) - pos} trailing bytes after the archive")
        return cls(header, streams[0], streams[1])

    def __len__(self) -> int:
        return len(self.header.pack()) + 16 + len(self.bin_stream) + len(self.subbin_stream)


def _pipelines(dtype) -> tuple[str, str]:
    return ("bins32", "subbins32") if np.dtype(dtype) == np.float32 else ("bins64", "subbins64")


def encode_field(values: np.ndarray, eb: ErrorBound, threads: int | None = None):
    """Quantize and run the fixpoint; returns ``(QuantizedField, eps_abs, data_range, FixpointStats)``."""
    values = check_field(values)
    shape = GridShape.from_array(values)
    bound = resolve(eb, values)
    bins = quantize(values, bound.eps_abs).ravel()
    flags = compute_flags(values, bins, shape)
    subbins, fstats = fixpoint_worklist(flags, shape, threads=threads, return_stats=True)
    q = QuantizedField(bins=bins, subbins=subbins.astype(subbin_dtype(values.dtype)))
    verify_encode(values.ravel(), q, bound.eps_abs)
    return q, bound, fstats


def compress(values: np.ndarray, eb: ErrorBound, threads: int | None = None) -> CompressedArchive:
    """Compress a float32/float64 field laid out as ``(Z, Y, X)`` or ``(Y, X)``.

    The archive bytes depend only on ``values`` and ``eb``, never on ``threads``.
    Raises :class:`~lopc.errors.BoundViolation` rather than emit an archive that
    breaks the bound.
    """
    t0 = time.perf_counter()
    threads = resolve_threads(threads)
    values = check_field(values)
    q, bound, fstats = encode_field(values, eb, threads)
    bpipe, spipe = _pipelines(values.dtype)
    bin_bytes = q.bins.astype(bin_dtype(values.dtype).newbyteorder("<")).tobytes()
    sub_bytes = q.subbins.astype(subbin_dtype(values.dtype).newbyteorder("<")).tobytes()
    header = ArchiveHeader(
        dtype=values.dtype,
        dims=GridShape.from_array(values).dims,
        eb_mode=eb.mode,
        eb_user=float(eb.value),
        eps_abs=bound.eps_abs,
        data_range=bound.data_range,
    )
    archive = CompressedArchive(
        header,
        lossless.compress_stream(bin_bytes, bpipe, threads),
        lossless.compress_stream(sub_bytes, spipe, threads),
    )
    archive.stats = CompressionStats(
        iterations=fstats.iterations,
        raises=fstats.raises,
        processed=fstats.processed,
        seconds=time.perf_counter() - t0,
    )
    return archive


def decompress(archive: CompressedArchive | bytes, threads: int | None = None) -> np.ndarray:
    """Reconstruct the field; the result has shape ``(Z, Y, X)`` or ``(Y, X)``."""
    if not isinstance(archive, CompressedArchive):
        archive = CompressedArchive.from_bytes(archive)
    threads = resolve_threads(threads)
    hdr = archive.header
    shape = hdr.shape
    bpipe, spipe = _pipelines(hdr.dtype)
    bdt = bin_dtype(hdr.dtype).newbyteorder("<")
    sdt = subbin_dtype(hdr.dtype).newbyteorder("<")
    bin_raw = lossless.decompress_stream(archive.bin_stream, bpipe, threads)
    sub_raw = lossless.decompress_stream(archive.subbin_stream, spipe, threads)
    if len(bin_raw) != shape.size * bdt.itemsize or len(sub_raw) != shape.size * sdt.itemsize:
        raise LengthMismatch(f"streams do not hold {shape.size} vertices")
    bins = np.frombuffer(bin_raw, dtype=bdt)
    subbins = np.frombuffer(sub_raw, dtype=sdt)
    return decode(bins, subbins, hdr.eps_abs, hdr.dtype).reshape(shape.array_shape)


def stream_split_stats(archive: CompressedArchive | bytes) -> tuple[float, float]:
    """Fractions of the stream bytes (header excluded) spent on bins and on subbins."""
    if not isinstance(archive, CompressedArchive):
        archive = CompressedArchive.from_bytes(archive)
    nb, ns = len(archive.bin_stream), len(archive.subbin_stream)
    total = nb + ns
    return nb / total, ns / total


def compression_ratio(values: np.ndarray, archive: CompressedArchive) -> float:
    return np.asarray(values).nbytes / len(archive)
