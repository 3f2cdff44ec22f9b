"""Slow, independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools

import numpy as np


def all_simplices(dims):
    """Every Kuhn simplex of the grid, built from cells and axis permutations."""
    rank = len(dims)
    strides = [int(np.prod(dims[:a])) for a in range(rank)]
    out = []
    for corner in itertools.product(*[range(d - 1) for d in dims]):
        for perm in itertools.permutations(range(rank)):
            pt = list(corner)
            verts = [sum(c * s for c, s in zip(pt, strides))]
            for axis in perm:
                pt[axis] += 1
                verts.append(sum(c * s for c, s in zip(pt, strides)))
            out.append(tuple(verts))
    return out


class UnionFind:
    def __init__(self, items=()):
        self.parent = {i: i for i in items}

    def find(self, a):
        self.parent.setdefault(a, a)
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def groups(self):
        out = {}
        for a in list(self.parent):
            out.setdefault(self.find(a), []).append(a)
        return list(out.values())


def link_graphs(dims):
    """Per vertex: (set of link vertices, set of link edges)."""
    n = int(np.prod(dims))
    verts = [set() for _ in range(n)]
    edges = [set() for _ in range(n)]
    for a, b in mesh_edges(dims):
        verts[a].add(b)
        verts[b].add(a)
    for simplex in all_simplices(dims):
        for v in simplex:
            others = [u for u in simplex if u != v]
            for a, b in itertools.combinations(others, 2):
                edges[v].add((min(a, b), max(a, b)))
    return verts, edges


def classify_bruteforce(values, dims):
    """0 regular, 1 minimum, 2 maximum, 3 saddle for every vertex."""
    flat = np.asarray(values).ravel()
    verts, edges = link_graphs(dims)
    out = np.zeros(len(flat), dtype=np.int8)
    for v in range(len(flat)):
        before = lambda u: (flat[u], u) < (flat[v], v)  # noqa: E731
        lower = {u for u in verts[v] if before(u)}
        upper = verts[v] - lower

        def ncomp(members):
            uf = UnionFind(members)
            for a, b in edges[v]:
                if a in members and b in members:
                    uf.union(a, b)
            return len(uf.groups())

        if not lower:
            out[v] = 1
        elif not upper:
            out[v] = 2
        elif ncomp(lower) == 1 and ncomp(upper) == 1:
            out[v] = 0
        else:
            out[v] = 3
    return out


def mesh_edges(dims):
    """Edges of the triangulation; axes of extent 1 are dropped first.

    A grid with a flat axis has no full-rank simplices, but its vertices are
    still joined by the triangulation of the remaining axes.
    """
    dims = tuple(dims)
    keep = [a for a, d in enumerate(dims) if d > 1]
    strides = [int(np.prod(dims[:a])) for a in range(len(dims))]
    edges = set()
    if not keep:
        return edges
    sub = tuple(dims[a] for a in keep)
    sub_strides = [int(np.prod(sub[:a])) for a in range(len(sub))]

    def lift(i):
        return sum(((i // s) % d) * strides[a] for s, d, a in zip(sub_strides, sub, keep))

    if len(sub) == 1:
        simplices = [(i, i + 1) for i in range(sub[0] - 1)]
    else:
        simplices = all_simplices(sub)
    for simplex in simplices:
        for a, b in itertools.combinations(simplex, 2):
            a, b = lift(a), lift(b)
            edges.add((min(a, b), max(a, b)))
    return edges


def same_bin_components(bins, dims):
    flat = np.asarray(bins).ravel()
    uf = UnionFind(range(len(flat)))
    for a, b in mesh_edges(dims):
        if flat[a] == flat[b]:
            uf.union(a, b)
    return uf.groups()


def naive_bit_transpose(words, k):
    """Bit j of word i goes to global bit position j * w + i."""
    w = len(words)
    bits = [0] * (8 * k * w)
    for i, word in enumerate(words):
        for j in range(8 * k):
            bits[j * w + i] = (int(word) >> j) & 1
    out = bytearray(k * w)
    for pos, bit in enumerate(bits):
        out[pos // 8] |= bit << (pos % 8)
    return bytes(out)
