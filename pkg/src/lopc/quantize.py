"""Half-width error-bound quantization and (bin, subbin) decoding.

A value ``x`` falls in bin ``b`` when ``(b - 0.5) * eps <= x < (b + 0.5) * eps``
holds in exact arithmetic.  Bin edges are compared exactly with error-free
float transformations, so boundary values are never misbinned by rounding.

Decoding maps subbin 0 of bin ``b`` to the smallest value of the field's type
that is ``>= (b - 0.5) * eps`` and every further subbin to the next
representable value above.  Because the fixpoint never assigns a subbin larger
than the number of distinct smaller values in its same-bin component, the
decoded value never exceeds the original and the error stays below ``eps``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BinOverflow, BoundViolation, InvalidShape, NonFinite, ZeroRange

ABS = "abs"
NOA = "noa"

# Above these magnitudes Dekker splitting can overflow or the product error
# term can underflow, and the exact edge test would no longer be exact.
_EPS_MIN = 2.0**-900
_VALUE_MAX = 2.0**900

_SPLITTER = 134217729.0  # 2**27 + 1


@dataclass(frozen=True)
class ErrorBound:
    mode: str
    value: float

    def __post_init__(self):
        mode = str(self.mode).lower()
        object.__setattr__(self, "mode", mode)
        if mode not in (ABS, NOA):
            raise ValueError(f"unknown error-bound mode {self.mode!r}")
        if not (np.isfinite(self.value) and self.value > 0):
            raise ValueError(f"error bound must be positive and finite, got {self.value!r}")


@dataclass(frozen=True)
class ResolvedBound:
    eps_abs: float
    data_range: float


@dataclass
class QuantizedField:
    bins: np.ndarray
    subbins: np.ndarray


def bin_dtype(dtype) -> np.dtype:
    return np.dtype(np.int32) if np.dtype(dtype) == np.float32 else np.dtype(np.int64)


def subbin_dtype(dtype) -> np.dtype:
    return np.dtype(np.uint32) if np.dtype(dtype) == np.float32 else np.dtype(np.uint64)


def _bin_limit(dtype) -> int:
    # f64 bins stay below 2**52 so that b - 0.5 is an exact double.
    return 2**31 - 1 if np.dtype(dtype) == np.float32 else 2**52 - 1


def check_field(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    if values.dtype not in (np.float32, np.float64):
        raise TypeError(f"only float32/float64 fields are supported, got {values.dtype}")
    if values.ndim not in (2, 3):
        raise InvalidShape(f"field must be 2D or 3D, got {values.ndim} axes")
    if values.size == 0:
        raise InvalidShape("field has no vertices")
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values.ravel()))[0])
        raise NonFinite(f"non-finite value at vertex {bad}")
    return values


def resolve(eb: ErrorBound, values: np.ndarray) -> ResolvedBound:
    """Turn a user bound into the absolute bound used by encoder and decoder."""
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        raise NonFinite("field contains NaN or infinity")
    lo = float(values.min())
    hi = float(values.max())
    data_range = hi - lo
    if eb.mode == ABS:
        eps = float(eb.value)
    else:
        if data_range == 0.0:
            raise ZeroRange("NOA bound needs a non-constant field")
        eps = float(eb.value) * data_range
    if not (eps >= _EPS_MIN and np.isfinite(eps)):
        raise BinOverflow(f"absolute error bound {eps!r} is outside the supported range")
    return ResolvedBound(eps_abs=eps, data_range=data_range)


# -- error-free transformations ---------------------------------------------

def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _at_or_above_edge(v, b, eps):
    """Exact test of ``v >= (b - 0.5) * eps`` for doubles ``v`` and integer bins ``b``."""
    p, e = _two_prod(np.asarray(b, dtype=np.float64) - 0.5, eps)
    v = np.asarray(v, dtype=np.float64)
    # p + e is the exact product with |e| at most half the gap next to p.
    return (v > p) | ((v == p) & (e <= 0.0))


def diff_within(a, b, eps) -> np.ndarray:
    """Exact test of ``|a - b| <= eps`` for doubles."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    s, t = _two_sum(a, -b)
    up = (s < eps) | ((s == eps) & (t <= 0.0))
    s, t = _two_sum(b, -a)
    down = (s < eps) | ((s == eps) & (t <= 0.0))
    return up & down


# -- quantization -------------------------------------------------------------

def quantize(values, eps: float, dtype=None) -> np.ndarray:
    """Bin index ``floor(x / eps + 0.5)`` of every value, with exact edges.

    ``dtype`` is the data type whose bin width applies; it defaults to the
    dtype of ``values``.
    """
    arr = np.asarray(values)
    dtype = np.dtype(dtype or (arr.dtype if arr.dtype in (np.float32, np.float64) else np.float64))
    x = arr.astype(np.float64)
    if np.any(np.abs(x) > _VALUE_MAX):
        raise BinOverflow("values too large for exact binning")
    t = np.floor(x / eps + 0.5)
    limit = _bin_limit(dtype)
    if np.any(np.abs(t) > limit - 1):
        raise BinOverflow(
            f"error bound {eps!r} is too small for this data "
            f"(bins exceed +-{limit}); store the field losslessly instead"
        )
    b = t.astype(np.int64)
    while True:
        low = ~_at_or_above_edge(x, b, eps)
        if not low.any():
            break
        b[low] -= 1
    while True:
        high = _at_or_above_edge(x, b + 1, eps)
        if not high.any():
            break
        b[high] += 1
    if np.any(np.abs(b) > limit):
        raise BinOverflow(f"bins exceed +-{limit}; store the field losslessly instead")
    out = b.astype(bin_dtype(dtype))
    return out.reshape(arr.shape) if arr.ndim else out[()]


def bin_base(bins, eps: float, dtype) -> np.ndarray:
    """Smallest value of ``dtype`` at or above the lower edge of each bin."""
    dtype = np.dtype(dtype)
    b = np.asarray(bins, dtype=np.int64)
    with np.errstate(over="ignore"):
        c = ((b.astype(np.float64) - 0.5) * eps).astype(dtype)
    up = np.array(np.inf, dtype=dtype)
    down = np.array(-np.inf, dtype=dtype)
    while True:
        low = ~_at_or_above_edge(c, b, eps)
        if not low.any():
            break
        c[low] = np.nextafter(c[low], up)
    while True:
        prev = np.nextafter(c, down)
        fits = _at_or_above_edge(prev, b, eps) & (prev != c)
        if not fits.any():
            break
        c[fits] = prev[fits]
    return c


def _ordered_key(values: np.ndarray) -> np.ndarray:
    """Integer key that increases by one per representable step (+0 and -0 share 0)."""
    if values.dtype == np.float32:
        bits = values.view(np.int32).astype(np.int64)
        return np.where(bits >= 0, bits, -(bits & 0x7FFFFFFF))
    bits = values.view(np.int64)
    return np.where(bits >= 0, bits, -(bits & 0x7FFFFFFFFFFFFFFF))


def _from_key(keys: np.ndarray, dtype) -> np.ndarray:
    mag = np.abs(keys)
    if np.dtype(dtype) == np.float32:
        bits = np.where(keys >= 0, mag, mag | (1 << 31)).astype(np.uint32)
        return bits.view(np.float32)
    bits = np.where(keys >= 0, mag, mag | np.iinfo(np.int64).min)
    return bits.astype(np.int64).view(np.float64)


def decode(bins, subbins, eps: float, dtype) -> np.ndarray:
    """Reconstruct values: the bin's lowest value advanced ``subbin`` steps."""
    bins = np.asarray(bins)
    shape = bins.shape
    base = bin_base(bins.ravel(), eps, dtype)
    steps = np.asarray(subbins).ravel().astype(np.int64)
    out = _from_key(_ordered_key(base) + steps, dtype)
    return out.reshape(shape)


def verify_encode(original: np.ndarray, q: QuantizedField, eps: float) -> None:
    """Raise :class:`BoundViolation` unless every decoded value is within ``eps``."""
    original = np.asarray(original)
    decoded = decode(q.bins, q.subbins, eps, original.dtype)
    ok = diff_within(original.ravel(), decoded.ravel(), eps)
    if not ok.all():
        i = int(np.flatnonzero(~ok)[0])
        raise BoundViolation(i, float(original.ravel()[i]), float(decoded.ravel()[i]), eps)


def midbin_reconstruct(values: np.ndarray, eps: float) -> np.ndarray:
    """Bin-center reconstruction without subbins; a non-order-preserving baseline."""
    values = np.asarray(values)
    bins = quantize(values, eps)
    return (bins.astype(np.float64) * eps).astype(values.dtype)
