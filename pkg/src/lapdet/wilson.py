"""Wilson's algorithm for weighted uniform spanning trees.

Sample ``i`` of a run with seed ``s`` draws from its own Philox stream
(key = s, high counter word = i), so any sample can be regenerated alone and
results do not depend on how a batch is split.
"""
from __future__ import annotations

from bisect import bisect_right
from itertools import accumulate

import numpy as np

from .multigraph import Multigraph, require_connected
from .trees import as_weights

_BLOCK = 64


def substream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, int(index)]))


class _Walker:
    def __init__(self, g: Multigraph, sigma):
        s = as_weights(g, sigma)
        inc = g.incidence
        idx = g.vertex_index
        self.n = g.n_vertices
        self.nbr_edge = []
        self.nbr_vertex = []
        self.cum = []
        for v in g.vertices:
            lst = inc[v]
            self.nbr_edge.append([e for e, _ in lst])
            self.nbr_vertex.append([idx[w] for _, w in lst])
            c = list(accumulate(s[e] for e, _ in lst))
            self.cum.append([x / c[-1] for x in c])

    def sample(self, rng: np.random.Generator) -> frozenset:
        n = self.n
        in_tree = [False] * n
        in_tree[0] = True
        nxt_edge = [-1] * n
        nxt_vertex = [-1] * n
        draws = rng.random(_BLOCK)
        k = 0
        for start in range(1, n):
            u = start
            while not in_tree[u]:
                if k == _BLOCK:
                    draws = rng.random(_BLOCK)
                    k = 0
                cum = self.cum[u]
                j = min(bisect_right(cum, draws[k]), len(cum) - 1)
                k += 1
                nxt_edge[u] = self.nbr_edge[u][j]
                nxt_vertex[u] = self.nbr_vertex[u][j]
                u = nxt_vertex[u]
            # retrace: overwritten successor pointers are the loop erasure
            u = start
            while not in_tree[u]:
                in_tree[u] = True
                u = nxt_vertex[u]
        return frozenset(nxt_edge[v] for v in range(1, n))


def wilson_sample(g: Multigraph, sigma=None, seed: int = 0, n: int = 1, start: int = 0) -> list[frozenset]:
    """``n`` i.i.d. spanning trees with P(tree) proportional to sigma[tree]."""
    require_connected(g)
    if n < 1:
        raise ValueError("n must be at least 1")
    walker = _Walker(g, sigma)
    return [walker.sample(substream(seed, i)) for i in range(start, start + n)]


def edge_frequencies(g: Multigraph, samples) -> np.ndarray:
    counts = np.zeros(g.n_edges)
    for t in samples:
        counts[list(t)] += 1
    return counts / len(samples)
