"""Named small graphs and the exhaustive multigraph corpus."""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from .multigraph import Multigraph


def paw() -> Multigraph:
    """Triangle b-c-d with pendant edge a-b (edge 0)."""
    return Multigraph.from_edges([("a", "b"), ("b", "c"), ("b", "d"), ("c", "d")])


def diamond() -> Multigraph:
    """4-cycle a-b-c-d with diagonal a-c (edge 4)."""
    return Multigraph.from_edges([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "c")])


def house() -> Multigraph:
    """Roof triangle b-c-d (edges 0-2) on the square c-d-f-e; S = edges 3-5."""
    return Multigraph.from_edges([("b", "c"), ("b", "d"), ("c", "d"),
                                  ("c", "e"), ("d", "f"), ("e", "f")])


def triangle() -> Multigraph:
    return Multigraph.from_edges([("a", "b"), ("b", "c"), ("c", "a")])


def single_edge() -> Multigraph:
    return Multigraph.from_edges([("a", "b")])


def parallel_edges(k: int = 2) -> Multigraph:
    return Multigraph.from_edges([("a", "b")] * k)


NAMED = {
    "paw": paw,
    "diamond": diamond,
    "house": house,
    "triangle": triangle,
    "edge": single_edge,
    "double-edge": parallel_edges,
}

HOUSE_ROOF = frozenset({0, 1, 2})
HOUSE_S = frozenset({3, 4, 5})


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of length ``parts`` summing to at most ``total``."""
    if parts == 0:
        yield ()
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def _connected(n, pairs, counts) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (a, b), c in zip(pairs, counts):
        if c:
            parent[find(a)] = find(b)
    return len({find(v) for v in range(n)}) == 1


@lru_cache(maxsize=None)
def _corpus_counts(n: int, max_edges: int) -> tuple:
    pairs = list(combinations(range(n), 2))
    perm_maps = []
    for p in permutations(range(n)):
        index = {frozenset(q): i for i, q in enumerate(pairs)}
        perm_maps.append([index[frozenset((p[a], p[b]))] for a, b in pairs])
    perm_maps = np.array(perm_maps)
    vecs = np.array([c for c in _compositions(max_edges, len(pairs))
                     if sum(c) >= n - 1], dtype=np.int64).reshape(-1, len(pairs))
    keep = np.array([_connected(n, pairs, c) for c in vecs], dtype=bool) if len(vecs) else np.zeros(0, bool)
    vecs = vecs[keep]
    base = max_edges + 1
    weights = base ** np.arange(len(pairs) - 1, -1, -1, dtype=np.int64)
    # canonical code: smallest encoding over all relabelings
    codes = np.stack([vecs[:, pm] @ weights for pm in perm_maps], axis=1).min(axis=1)
    _, first = np.unique(codes, return_index=True)
    chosen = vecs[np.sort(first)]
    return tuple(pairs), tuple(tuple(int(x) for x in row) for row in chosen)


def corpus(max_vertices: int = 5, max_edges: int = 8):
    """Every connected loopless multigraph with 2..max_vertices vertices and at
    most max_edges edges, one per isomorphism class."""
    out = []
    for n in range(2, max_vertices + 1):
        pairs, rows = _corpus_counts(n, max_edges)
        for counts in rows:
            edges = [pair for pair, c in zip(pairs, counts) for _ in range(c)]
            out.append(Multigraph.from_edges(edges, vertices=list(range(n))))
    out.sort(key=lambda g: (g.n_vertices, g.n_edges, g.edges))
    return out
