"""Error-bounded lossy compression that preserves local order and critical points."""

from .codec import (
    ArchiveHeader,
    CompressedArchive,
    compress,
    compression_ratio,
    decompress,
    stream_split_stats,
)
from .errors import (
    BadMagic,
    BinOverflow,
    BoundViolation,
    CorruptStream,
    InvalidShape,
    LengthMismatch,
    LopcError,
    NonFinite,
    ShapeMismatch,
    VersionUnsupported,
    ZeroRange,
)
from .fixpoint import check_local_order, compute_flags, fixpoint_reference, fixpoint_worklist
from .grid import GridShape
from .quantize import ABS, NOA, ErrorBound, QuantizedField, decode, quantize, resolve, verify_encode
from .topology import CriticalType, classify, classify_field, diff_critical, psnr, verify_fields

__version__ = "0.1.0"
