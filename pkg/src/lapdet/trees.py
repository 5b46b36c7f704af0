"""Spanning trees, tree weights, Laplacian determinants and edge usage.

Weights ``sigma`` are multiplicative conductances, one per edge id.  Tree
pmfs carry their edge usage probability vector ``eta`` alongside.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .multigraph import (EnumerationLimitError, GraphError, Multigraph,
                         is_biconnected, require_connected)

DEFAULT_MAX_TREES = 10**6


def as_weights(g: Multigraph, sigma) -> np.ndarray:
    """Validate a weight vector (scalar broadcasts); entries must be finite and > 0."""
    if sigma is None:
        return np.ones(g.n_edges)
    s = np.broadcast_to(np.asarray(sigma, dtype=float), (g.n_edges,)).copy()
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise ValueError("edge weights must be finite and strictly positive")
    return s


@dataclass(frozen=True)
class TreeFamily:
    graph: Multigraph
    trees: tuple  # tuple of frozensets of edge ids
    usage: np.ndarray = field(repr=False, compare=False)

    def __len__(self):
        return len(self.trees)

    @property
    def rank(self) -> int:
        return self.graph.n_vertices - 1

    def index_of(self, tree) -> int:
        return self.trees.index(frozenset(tree))


@dataclass(frozen=True)
class TreePmf:
    mu: np.ndarray
    eta: np.ndarray

    @property
    def support(self) -> frozenset:
        return frozenset(int(i) for i in np.flatnonzero(self.mu > 0))


def laplacian(g: Multigraph, sigma=None) -> np.ndarray:
    s = as_weights(g, sigma)
    n = g.n_vertices
    L = np.zeros((n, n))
    for w, (a, b) in zip(s, g.edge_index_pairs):
        L[a, a] += w
        L[b, b] += w
        L[a, b] -= w
        L[b, a] -= w
    return L


def _augmented(g: Multigraph, sigma) -> np.ndarray:
    n = g.n_vertices
    return laplacian(g, sigma) + np.full((n, n), 1.0 / n)


def log_det_laplacian(g: Multigraph, sigma=None) -> float:
    """log det'(L_sigma), from an LU factorization of L + 11^T/|V|."""
    require_connected(g)
    sign, logdet = np.linalg.slogdet(_augmented(g, sigma))
    if sign <= 0 or not np.isfinite(logdet):
        raise GraphError("augmented Laplacian is numerically singular (disconnected graph?)")
    return float(logdet)


def det_laplacian(g: Multigraph, sigma=None) -> float:
    return float(np.exp(log_det_laplacian(g, sigma)))


def log_tree_mass(g: Multigraph, sigma=None) -> float:
    """log of sum over spanning trees of sigma[tree], via the matrix-tree theorem."""
    return log_det_laplacian(g, sigma) - np.log(g.n_vertices)


def count_spanning_trees(g: Multigraph) -> int:
    return int(round(np.exp(log_tree_mass(g))))


def enumerate_spanning_trees(g: Multigraph, max_trees: int = DEFAULT_MAX_TREES) -> TreeFamily:
    """All spanning trees by contraction-deletion over the edge list.

    Parallel edges are distinct edge ids and therefore give distinct trees.
    """
    require_connected(g)
    if g.n_vertices > 1 and count_spanning_trees(g) > max_trees:
        raise EnumerationLimitError(f"more than {max_trees} spanning trees")
    pairs = g.edge_index_pairs
    n, m = g.n_vertices, g.n_edges
    out = []

    def connectable(labels, start):
        # can the current components plus edges[start:] still be joined?
        parent = {c: c for c in set(labels)}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        k = len(parent)
        for j in range(start, m):
            a, b = find(labels[pairs[j][0]]), find(labels[pairs[j][1]])
            if a != b:
                parent[a] = b
                k -= 1
                if k == 1:
                    return True
        return k == 1

    def rec(i, labels, chosen, ncomp):
        if ncomp == 1:
            out.append(frozenset(chosen))
            return
        if i == m:
            return
        a, b = pairs[i]
        la, lb = labels[a], labels[b]
        if la != lb:
            # contract edge i
            merged = [la if x == lb else x for x in labels]
            chosen.append(i)
            rec(i + 1, merged, chosen, ncomp - 1)
            chosen.pop()
        # delete edge i
        if connectable(labels, i + 1):
            rec(i + 1, labels, chosen, ncomp)

    rec(0, list(range(n)), [], n)
    usage = np.zeros((len(out), m))
    for k, t in enumerate(out):
        usage[k, list(t)] = 1.0
    return TreeFamily(g, tuple(out), usage)


def is_spanning_tree(g: Multigraph, edges) -> bool:
    edges = list(edges)
    if len(edges) != g.n_vertices - 1 or len(set(edges)) != len(edges):
        return False
    if g.n_vertices == 1:
        return True
    return g.is_connected(edges) and len({x for i in edges for x in g.edges[i]}) == g.n_vertices


def tree_weight(sigma, gamma) -> float:
    s = np.asarray(sigma, dtype=float)
    return float(np.prod(s[list(gamma)])) if gamma else 1.0


def tree_log_weights(family: TreeFamily, sigma) -> np.ndarray:
    return family.usage @ np.log(as_weights(family.graph, sigma))


def tree_mass(family: TreeFamily, sigma) -> float:
    """Sum over the family of sigma[tree] by direct summation."""
    return float(np.exp(logsumexp(tree_log_weights(family, sigma))))


def eta_from_pmf(family: TreeFamily, mu) -> np.ndarray:
    return family.usage.T @ np.asarray(mu, dtype=float)


def make_pmf(family: TreeFamily, mu) -> TreePmf:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (len(family),) or np.any(mu < 0):
        raise ValueError("tree pmf must be a nonnegative vector over the family")
    total = mu.sum()
    if not np.isclose(total, 1.0, rtol=0, atol=1e-12):
        raise ValueError(f"tree pmf sums to {total}, not 1")
    return TreePmf(mu, eta_from_pmf(family, mu))


def uniform_pmf(family: TreeFamily) -> TreePmf:
    return make_pmf(family, np.full(len(family), 1.0 / len(family)))


def dirac_pmf(family: TreeFamily, index: int) -> TreePmf:
    mu = np.zeros(len(family))
    mu[index] = 1.0
    return make_pmf(family, mu)


def ust_pmf(family: TreeFamily, sigma) -> TreePmf:
    """Weighted uniform spanning tree law: mu(tree) proportional to sigma[tree]."""
    lw = tree_log_weights(family, sigma)
    mu = np.exp(lw - logsumexp(lw))
    mu /= mu.sum()
    return TreePmf(mu, eta_from_pmf(family, mu))


def resistance_matrix(g: Multigraph, sigma=None) -> np.ndarray:
    """R[e, f] = b_e^T L^+ b_f, with conductances sigma; effR is its diagonal.

    (L + 11^T/n)^{-1} = L^+ + 11^T/n and b_e is orthogonal to 1, so one
    solve against the augmented matrix gives the pseudoinverse quadratic form.
    """
    require_connected(g)
    A = _augmented(g, sigma)
    n = g.n_vertices
    B = np.zeros((n, g.n_edges))
    for j, (a, b) in enumerate(g.edge_index_pairs):
        B[a, j] = 1.0
        B[b, j] = -1.0
    X = np.linalg.solve(A, B)
    if not np.isfinite(X).all():
        raise GraphError("Laplacian system too ill-conditioned for effective resistance")
    # backward-stable solves leave a residual of order eps |A| |X|
    resid = np.abs(A @ X - B).max() if B.size else 0.0
    if resid > 1e-10 * n * np.abs(A).max() * max(1.0, np.abs(X).max()):
        raise GraphError("Laplacian system too ill-conditioned for effective resistance")
    return B.T @ X


def effective_resistance(g: Multigraph, sigma=None) -> np.ndarray:
    """effR(e) = b_e^T L^+ b_e for every edge."""
    return np.diag(resistance_matrix(g, sigma)).copy()


def eta_from_sigma(g: Multigraph, sigma=None) -> np.ndarray:
    """UST edge usage probabilities via Kirchhoff: sigma(e) * effR(e)."""
    s = as_weights(g, sigma)
    return s * effective_resistance(g, s)


def expected_overlap(family: TreeFamily, mu) -> float:
    """E|T1 & T2| for independent trees with law mu, i.e. sum of eta^2."""
    m = mu.mu if isinstance(mu, TreePmf) else np.asarray(mu, dtype=float)
    eta = eta_from_pmf(family, m)
    return float(eta @ eta)


def _tree_path_edges(g: Multigraph, tree, source, target) -> list[int]:
    inc = {v: [] for v in g.vertices}
    for i in tree:
        u, v = g.edges[i]
        inc[u].append((i, v))
        inc[v].append((i, u))
    prev = {source: None}
    queue = [source]
    for x in queue:
        if x == target:
            break
        for i, y in inc[x]:
            if y not in prev:
                prev[y] = (i, x)
                queue.append(y)
    path = []
    x = target
    while prev[x] is not None:
        i, x = prev[x]
        path.append(i)
    return path


@dataclass(frozen=True)
class SwapWitness:
    e_plus: int
    e_minus: int
    gamma: frozenset
    gamma_tilde: frozenset


def tree_swap_witness(g: Multigraph, e0, family: TreeFamily | None = None) -> SwapWitness:
    """Trees gamma, gamma~ = gamma - e_minus + e_plus with e_minus in e0, e_plus outside.

    Scans spanning trees for a non-tree edge outside e0 whose fundamental
    cycle passes through an edge of e0.
    """
    e0 = frozenset(e0)
    if not is_biconnected(g) or g.n_vertices < 3:
        raise GraphError("swap witness needs a biconnected graph with at least 3 vertices")
    if not e0 or e0 >= frozenset(range(g.n_edges)) or any(not 0 <= e < g.n_edges for e in e0):
        raise GraphError("e0 must be a nonempty proper subset of the edges")
    fam = family if family is not None else enumerate_spanning_trees(g)
    for gamma in fam.trees:
        if not gamma & e0:
            continue
        for e_plus in range(g.n_edges):
            if e_plus in gamma or e_plus in e0:
                continue
            u, v = g.edges[e_plus]
            for e_minus in _tree_path_edges(g, gamma, u, v):
                if e_minus in e0:
                    return SwapWitness(e_plus, e_minus, gamma, (gamma - {e_minus}) | {e_plus})
    raise GraphError("no swap witness found")  # excluded for biconnected inputs
