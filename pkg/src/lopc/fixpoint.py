"""Subbin assignment that restores the original local order inside every bin.

Vertices are totally ordered by value with ties broken by linear index
(simulation of simplicity).  For every pair of mesh neighbors ``n`` and ``p``
that share a bin with ``n`` before ``p``, the subbins must satisfy
``subbin(p) >= subbin(n) + w`` where ``w = 1`` exactly when ``idx(n) > idx(p)``.
Decoding is strictly increasing in ``(bin, subbin)`` order, so meeting these
constraints reproduces the original order on every mesh edge.

The constraint graph is a DAG and the updates only ever raise subbins, so the
least solution is unique.  :func:`fixpoint_worklist` reaches it with a
double-buffered worklist; :func:`fixpoint_reference` computes it directly in
topological order and serves as the oracle.
"""

from __future__ import annotations

import os
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ShapeMismatch
from .grid import GridShape, linear_offsets, n_slots, slot_slices


def flag_dtype(rank: int) -> np.dtype:
    return np.dtype(np.uint16) if rank == 2 else np.dtype(np.uint32)


def less_bit_shift(rank: int) -> int:
    """Bit position of the first ``neighbor_less`` flag; ``same_bin`` flags start at 0."""
    return 8 if rank == 2 else 16


def compute_flags(values: np.ndarray, bins: np.ndarray, shape: GridShape | None = None) -> np.ndarray:
    """Per-vertex neighbor flags, flattened in linear-index order.

    Bit ``i`` says the slot-``i`` neighbor shares the vertex's bin; bit
    ``i + less_bit_shift(rank)`` says that neighbor precedes the vertex in the
    tie-broken order of the original values.  Out-of-bounds slots are zero.
    """
    values = np.asarray(values)
    shape = shape or GridShape.from_array(values)
    values = values.reshape(shape.array_shape)
    bins = np.asarray(bins).reshape(shape.array_shape)
    rank = shape.rank
    h = less_bit_shift(rank)
    k = n_slots(rank) // 2
    fdt = flag_dtype(rank)
    flags = np.zeros(shape.array_shape, dtype=fdt)
    for slot in range(n_slots(rank)):
        here, there = slot_slices(shape, slot)
        vp, vn = values[here], values[there]
        # positive slots point at larger indices, so ties favor p
        less = vn < vp if slot < k else vn <= vp
        same = bins[there] == bins[here]
        flags[here] |= same.astype(fdt) << fdt.type(slot)
        flags[here] |= less.astype(fdt) << fdt.type(slot + h)
    return flags.ravel()


@dataclass
class FixpointStats:
    iterations: int = 0
    raises: int = 0
    processed: int = 0


class Worklist:
    """Read/write vertex queues with per-vertex enqueue stamps.

    ``stamp[v]`` is the last iteration whose write queue received ``v``; a
    worker skips any vertex already stamped for the upcoming iteration.
    """

    def __init__(self, n: int):
        self.read = np.arange(n, dtype=np.int64)
        self.stamp = np.zeros(n, dtype=np.int64)
        self.iteration = 0
        self._write: list[np.ndarray] = []
        self._lock = threading.Lock()

    def push(self, vertices: np.ndarray) -> None:
        with self._lock:
            self._write.append(vertices)

    def swap(self) -> None:
        if len(self._write) == 1:
            self.read = self._write[0]
        elif self._write:
            # concurrent workers may both have claimed a vertex
            self.read = np.unique(np.concatenate(self._write))
        else:
            self.read = np.empty(0, dtype=np.int64)
        self._write = []
        self.iteration += 1

    def __len__(self) -> int:
        return len(self.read)


@njit(nogil=True, cache=True)
def _sweep(block, flags, subbins, lin, h, k, stamp, next_it, out, backward):
    """Process one worklist block in place; returns (queued count, raise count)."""
    queued = 0
    raises = 0
    m = block.shape[0]
    for j in range(m):
        p = block[m - 1 - j] if backward else block[j]
        f = np.int64(flags[p])
        need = np.int64(0)
        for slot in range(2 * k):
            if (f >> slot) & 1 and (f >> (slot + h)) & 1:
                # positive slots hold higher-indexed neighbors: those need one extra step
                v = subbins[p + lin[slot]] + (1 if slot < k else 0)
                if v > need:
                    need = v
        if need > subbins[p]:
            subbins[p] = need
            raises += 1
            for slot in range(2 * k):
                if (f >> slot) & 1 and not (f >> (slot + h)) & 1:
                    q = p + lin[slot]
                    if stamp[q] < next_it:
                        stamp[q] = next_it
                        out[queued] = q
                        queued += 1
    return queued, raises


def _run_block(block, flags, subbins, lin, h, k, wl, raises_out):
    out = np.empty(min(len(subbins), 2 * k * len(block)), dtype=np.int64)
    # alternating sweep direction lets chains running either way advance per pass
    backward = wl.iteration % 2 == 1
    queued, raises = _sweep(block, flags, subbins, lin, h, k, wl.stamp, wl.iteration + 1, out, backward)
    raises_out.append(raises)
    if queued:
        wl.push(np.sort(out[:queued]))


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("LOPC_THREADS")
        threads = int(env) if env else 1
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def fixpoint_worklist(
    flags: np.ndarray,
    shape: GridShape,
    threads: int | None = 1,
    return_stats: bool = False,
):
    """Least subbins via iterated worklist sweeps.

    Each iteration splits the read worklist into contiguous blocks, one per
    worker.  A worker raises each of its vertices to the largest requirement
    among its lower same-bin neighbors and, on a raise, queues the vertex's
    higher same-bin neighbors for the next iteration.  A vertex is owned by a
    single block per iteration, so the raise is a plain monotone store;
    other workers may observe it within the same iteration, which only speeds
    convergence.  The result does not depend on ``threads``.
    """
    flags = np.asarray(flags).ravel()
    if flags.size != shape.size:
        raise ShapeMismatch(f"{flags.size} flags for {shape.size} vertices")
    threads = resolve_threads(threads)
    rank = shape.rank
    h = less_bit_shift(rank)
    k = n_slots(rank) // 2
    lin = linear_offsets(shape)
    subbins = np.zeros(shape.size, dtype=np.int64)
    wl = Worklist(shape.size)
    stats = FixpointStats()

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while len(wl):
            stats.iterations += 1
            stats.processed += len(wl)
            raises: list[int] = []
            if pool is None or len(wl) < 2 * threads:
                _run_block(wl.read, flags, subbins, lin, h, k, wl, raises)
            else:
                futures = [
                    pool.submit(_run_block, b, flags, subbins, lin, h, k, wl, raises)
                    for b in np.array_split(wl.read, threads)
                ]
                for fut in futures:
                    fut.result()
            stats.raises += sum(raises)
            wl.swap()
    finally:
        if pool is not None:
            pool.shutdown()

    return (subbins, stats) if return_stats else subbins


def fixpoint_reference(flags: np.ndarray, shape: GridShape) -> np.ndarray:
    """Least subbins by a single pass over the constraint DAG in topological order."""
    flags = [int(f) for f in np.asarray(flags).ravel()]
    if len(flags) != shape.size:
        raise ShapeMismatch(f"{len(flags)} flags for {shape.size} vertices")
    rank = shape.rank
    h = less_bit_shift(rank)
    m = n_slots(rank)
    lin = [int(x) for x in linear_offsets(shape)]

    preds: list[list[tuple[int, int]]] = [[] for _ in range(shape.size)]
    succs: list[list[int]] = [[] for _ in range(shape.size)]
    for p in range(shape.size):
        f = flags[p]
        for slot in range(m):
            if (f >> slot) & 1 and (f >> (slot + h)) & 1:
                n = p + lin[slot]
                preds[p].append((n, 1 if n > p else 0))
                succs[n].append(p)

    indeg = [len(ps) for ps in preds]
    ready = deque(p for p in range(shape.size) if indeg[p] == 0)
    out = [0] * shape.size
    done = 0
    while ready:
        p = ready.popleft()
        done += 1
        out[p] = max((out[n] + w for n, w in preds[p]), default=0)
        for q in succs[p]:
            indeg[q] -= 1
            if indeg[q] == 0:
                ready.append(q)
    if done != shape.size:
        raise ValueError("neighbor flags are not acyclic")
    return np.array(out, dtype=np.int64)


def sos_less(a_val, a_idx, b_val, b_idx):
    """Tie-broken order: ``a`` precedes ``b``."""
    return (a_val < b_val) | ((a_val == b_val) & (a_idx < b_idx))


def check_local_order(original: np.ndarray, decoded: np.ndarray, shape: GridShape | None = None) -> int:
    """Number of mesh edges whose tie-broken order differs between the two fields."""
    original = np.asarray(original)
    decoded = np.asarray(decoded)
    if original.shape != decoded.shape:
        raise ShapeMismatch(f"{original.shape} vs {decoded.shape}")
    shape = shape or GridShape.from_array(original)
    if shape.size != original.size:
        raise ShapeMismatch(f"grid {shape.dims} does not match {original.size} values")
    a = original.reshape(shape.array_shape)
    b = decoded.reshape(shape.array_shape)
    total = 0
    for slot in range(n_slots(shape.rank) // 2):
        here, there = slot_slices(shape, slot)
        # the neighbor has the larger index, so it precedes only when strictly smaller
        total += int(np.count_nonzero((a[there] < a[here]) != (b[there] < b[here])))
    return total
