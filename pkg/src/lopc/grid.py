"""Regular grids and their Freudenthal (Kuhn) simplicial subdivision.

Vertices are addressed by a row-major linear index with x varying fastest,
``idx = x + X * (y + Y * z)``, which is also the C-order flattening of a numpy
array of shape ``(Z, Y, X)``.  Every cell is split into ``rank!`` simplices,
one per axis permutation; the resulting vertex star has the neighbor offsets
``{e, -e : e in {0,1}^rank, e != 0}``.

Neighbor slots are numbered in a fixed order.  Slot ``i < K`` (``K = 2^rank - 1``)
holds the offset whose bit ``a`` of ``i + 1`` gives the component along axis
``a`` (x is axis 0); slot ``i + K`` holds the negated offset.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidShape


@dataclass(frozen=True)
class GridShape:
    """Extent of a 2D or 3D vertex grid, listed x first."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) not in (2, 3):
            raise InvalidShape(f"rank must be 2 or 3, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise InvalidShape(f"every extent must be >= 1, got {dims}")
        if math.prod(dims) >= 2**62:
            raise InvalidShape(f"{dims} exceeds the addressable index range")

    @classmethod
    def from_array(cls, values: np.ndarray) -> GridShape:
        """Shape of an array laid out as ``(Z, Y, X)`` or ``(Y, X)``."""
        return cls(tuple(reversed(values.shape)))

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    @property
    def array_shape(self) -> tuple[int, ...]:
        return tuple(reversed(self.dims))

    @property
    def strides(self) -> tuple[int, ...]:
        out, acc = [], 1
        for d in self.dims:
            out.append(acc)
            acc *= d
        return tuple(out)

    def coords(self, idx: int) -> tuple[int, ...]:
        out = []
        for d in self.dims:
            idx, r = divmod(idx, d)
            out.append(r)
        return tuple(out)

    def index(self, coords) -> int:
        return sum(c * s for c, s in zip(coords, self.strides))

    def contains(self, coords) -> bool:
        return all(0 <= c < d for c, d in zip(coords, self.dims))

    @property
    def has_cells(self) -> bool:
        """True when the grid has at least one full cell (every extent >= 2)."""
        return all(d >= 2 for d in self.dims)


@lru_cache(maxsize=None)
def _offsets(rank: int) -> np.ndarray:
    pos = [[(m >> a) & 1 for a in range(rank)] for m in range(1, 2**rank)]
    arr = np.array(pos + [[-c for c in o] for o in pos], dtype=np.int64)
    arr.setflags(write=False)
    return arr


def offsets(rank: int) -> np.ndarray:
    """Neighbor offsets in slot order, shape ``(2K, rank)``, x component first."""
    if rank not in (2, 3):
        raise InvalidShape(f"rank must be 2 or 3, got {rank}")
    return _offsets(rank)


def n_slots(rank: int) -> int:
    return 2 * (2**rank - 1)


def opposite_slot(slot: int, rank: int) -> int:
    k = 2**rank - 1
    return slot + k if slot < k else slot - k


def linear_offsets(shape: GridShape) -> np.ndarray:
    """Linear index delta of each neighbor slot (valid only where in bounds)."""
    return offsets(shape.rank) @ np.array(shape.strides, dtype=np.int64)


def neighbors(v: int, shape: GridShape) -> list[int]:
    """In-bounds neighbors of ``v`` in slot order."""
    c = shape.coords(v)
    out = []
    for d in offsets(shape.rank):
        n = tuple(ci + int(di) for ci, di in zip(c, d))
        if shape.contains(n):
            out.append(shape.index(n))
    return out


def neighbor_slots(v: int, shape: GridShape) -> list[tuple[int, int]]:
    """``(slot, neighbor index)`` pairs for the in-bounds neighbors of ``v``."""
    c = shape.coords(v)
    out = []
    for i, d in enumerate(offsets(shape.rank)):
        n = tuple(ci + int(di) for ci, di in zip(c, d))
        if shape.contains(n):
            out.append((i, shape.index(n)))
    return out


def kuhn_simplices_incident(v: int, shape: GridShape) -> list[tuple[int, ...]]:
    """All top-dimensional Kuhn simplices containing ``v``, as sorted index tuples."""
    rank = shape.rank
    c = shape.coords(v)
    found = set()
    for shift in itertools.product((0, 1), repeat=rank):
        corner = tuple(ci - s for ci, s in zip(c, shift))
        far = tuple(ci + 1 for ci in corner)
        if not (shape.contains(corner) and shape.contains(far)):
            continue
        for perm in itertools.permutations(range(rank)):
            pt = list(corner)
            verts = [tuple(pt)]
            for axis in perm:
                pt[axis] += 1
                verts.append(tuple(pt))
            if c in verts:
                found.add(tuple(sorted(shape.index(p) for p in verts)))
    return sorted(found)


@lru_cache(maxsize=None)
def _link_table(rank: int) -> np.ndarray:
    # Freudenthal is a flag complex: three vertices span a simplex iff they
    # are pairwise joined, i.e. every difference lies in +-{0,1}^rank.
    offs = offsets(rank)
    m = len(offs)
    table = np.zeros((m, m), dtype=bool)
    for i in range(m):
        for j in range(m):
            d = offs[i] - offs[j]
            if i != j and (np.all((d == 0) | (d == 1)) or np.all((d == 0) | (d == -1))):
                table[i, j] = True
    table.setflags(write=False)
    return table


def link_table(rank: int) -> np.ndarray:
    """Slot-by-slot link adjacency of an interior vertex, ``(2K, 2K)`` bool."""
    return _link_table(rank)


def link_adjacent(v: int, a: int, b: int, shape: GridShape) -> bool:
    """Whether neighbors ``a`` and ``b`` of ``v`` share a Kuhn simplex with ``v``."""
    if a == b:
        return True
    if not shape.has_cells:
        return False
    cv, ca, cb = shape.coords(v), shape.coords(a), shape.coords(b)
    da = tuple(x - y for x, y in zip(ca, cv))
    db = tuple(x - y for x, y in zip(cb, cv))
    offs = [tuple(int(x) for x in o) for o in offsets(shape.rank)]
    return bool(link_table(shape.rank)[offs.index(da), offs.index(db)])


@lru_cache(maxsize=None)
def _component_counts(rank: int) -> np.ndarray:
    table = link_table(rank)
    m = table.shape[0]
    adj = [sum(1 << j for j in range(m) if table[i, j]) for i in range(m)]
    counts = np.zeros(1 << m, dtype=np.uint8)
    for mask in range(1, 1 << m):
        remaining, comps = mask, 0
        while remaining:
            frontier = remaining & -remaining
            seen = 0
            while frontier:
                seen |= frontier
                nxt = 0
                f = frontier
                while f:
                    low = f & -f
                    nxt |= adj[low.bit_length() - 1]
                    f ^= low
                frontier = nxt & mask & ~seen
            remaining &= ~seen
            comps += 1
        counts[mask] = comps
    counts.setflags(write=False)
    return counts


def component_counts(rank: int) -> np.ndarray:
    """Lookup: number of connected components of a slot subset (bitmask) in the link."""
    return _component_counts(rank)


def slot_slices(shape: GridShape, slot: int) -> tuple[tuple[slice, ...], tuple[slice, ...]]:
    """Array slices ``(here, there)`` pairing each vertex with its neighbor in ``slot``.

    ``values[here]`` and ``values[there]`` are aligned views over every vertex
    whose ``slot`` neighbor is in bounds.
    """
    d = offsets(shape.rank)[slot]
    here, there = [], []
    for axis in reversed(range(shape.rank)):
        n, o = shape.dims[axis], int(d[axis])
        if o > 0:
            here.append(slice(0, n - o))
            there.append(slice(o, n))
        elif o < 0:
            here.append(slice(-o, n))
            there.append(slice(0, n + o))
        else:
            here.append(slice(0, n))
            there.append(slice(0, n))
    return tuple(here), tuple(there)


def valid_slot_mask(shape: GridShape, vertices: np.ndarray) -> np.ndarray:
    """``(len(vertices), 2K)`` bool: whether each slot neighbor is in bounds."""
    vertices = np.asarray(vertices, dtype=np.int64)
    offs = offsets(shape.rank)
    rem = vertices
    ok = np.ones((len(vertices), len(offs)), dtype=bool)
    for axis, n in enumerate(shape.dims):
        c = rem % n
        rem = rem // n
        t = c[:, None] + offs[None, :, axis]
        ok &= (t >= 0) & (t < n)
    return ok
