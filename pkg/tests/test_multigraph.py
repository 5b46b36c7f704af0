from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings

from lapdet import graphs
from lapdet.multigraph import (EnumerationLimitError, GraphError, Multigraph, SubgraphRef,
                               articulation_vertices, biconnected_components, contract,
                               edge_induced_subgraph, enumerate_connected_subgraphs,
                               is_biconnected, validate)

from conftest import connected_multigraphs


def test_self_loop_rejected():
    with pytest.raises(GraphError, match="self-loop"):
        Multigraph.from_edges([("a", "a")])


def test_validate_reports_components_and_multiplicity():
    g = Multigraph.from_edges([("a", "b"), ("a", "b"), ("c", "d")])
    rep = validate(g)
    assert not rep.connected and not rep.ok
    assert rep.components == 2
    assert max(rep.multiplicities.values()) == 2


def test_named_graph_sizes(paw, diamond, house):
    assert (paw.n_vertices, paw.n_edges) == (4, 4)
    assert (diamond.n_vertices, diamond.n_edges) == (4, 5)
    assert (house.n_vertices, house.n_edges) == (5, 6)


def test_paw_blocks(paw):
    blocks = [b.sorted_edges() for b in biconnected_components(paw)]
    assert blocks == [(0,), (1, 2, 3)]
    assert articulation_vertices(paw) == {"b"}


def test_house_is_one_block(house):
    assert is_biconnected(house)


def test_parallel_edges_share_a_block():
    g = Multigraph.from_edges([("a", "b"), ("a", "b"), ("b", "c")])
    assert [b.sorted_edges() for b in biconnected_components(g)] == [(0, 1), (2,)]


def _block_oracle(g):
    """e ~ f iff for every vertex v, e and f land in the same component of G - v
    (an edge at v counts with its other endpoint)."""
    m = g.n_edges
    same = np.ones((m, m), dtype=bool)
    for v in g.vertices:
        rest = [x for x in g.vertices if x != v]
        parent = {x: x for x in rest}

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        for a, b in g.edges:
            if v not in (a, b):
                parent[find(a)] = find(b)

        def label(e):
            a, b = g.edges[e]
            return find(b if a == v else a)

        labs = [label(e) for e in range(m)]
        for e in range(m):
            for f in range(m):
                if labs[e] != labs[f]:
                    same[e, f] = False
    return {frozenset(np.flatnonzero(same[e])) for e in range(m)}


@settings(max_examples=60, deadline=None)
@given(connected_multigraphs(max_vertices=7, max_edges=11))
def test_blocks_match_vertex_removal_oracle(g):
    got = {b.edge_subset for b in biconnected_components(g)}
    assert got == _block_oracle(g)


@settings(max_examples=40, deadline=None)
@given(connected_multigraphs(max_vertices=6, max_edges=9))
def test_connected_subgraphs_match_powerset(g):
    got = [s.edge_subset for s in enumerate_connected_subgraphs(g)]
    assert len(got) == len(set(got))
    oracle = {frozenset(c) for k in range(1, g.n_edges + 1)
              for c in combinations(range(g.n_edges), k) if g.is_connected(c)}
    assert set(got) == oracle


def test_subgraph_limit():
    g = graphs.parallel_edges(5)
    with pytest.raises(EnumerationLimitError):
        list(enumerate_connected_subgraphs(g, limit=4))


def test_edge_induced_subgraph(house):
    h = edge_induced_subgraph(house, graphs.HOUSE_ROOF)
    assert h.vertices == {"b", "c", "d"} and h.connected
    assert h.as_graph().n_edges == 3
    with pytest.raises(GraphError):
        edge_induced_subgraph(house, [])


def test_contract_house_roof(house):
    shrunk, cmap = contract(house, SubgraphRef(house, graphs.HOUSE_ROOF))
    assert shrunk.n_vertices == 3 and shrunk.n_edges == 3
    assert cmap.surviving_edge_map == {3: 0, 4: 1, 5: 2}
    assert is_biconnected(shrunk)


def test_contract_keeps_parallel_edges():
    # contracting a-b in a triangle leaves a double edge to c
    g = graphs.triangle()
    shrunk, _ = contract(g, SubgraphRef(g, frozenset({0})))
    assert shrunk.n_vertices == 2 and shrunk.n_edges == 2


def test_contract_rejects_disconnected(house):
    with pytest.raises(GraphError):
        contract(house, SubgraphRef(house, frozenset({0, 5})))


def test_corpus_classes_are_distinct_and_complete():
    nx = pytest.importorskip("networkx")
    from networkx.algorithms.isomorphism import MultiGraphMatcher

    def to_nx(g):
        m = nx.MultiGraph()
        m.add_nodes_from(g.vertices)
        m.add_edges_from(g.edges)
        return m

    corpus = graphs.corpus(4, 6)
    by_size = {}
    for g in corpus:
        by_size.setdefault((g.n_vertices, g.n_edges), []).append(to_nx(g))
    for group in by_size.values():
        for a, b in combinations(group, 2):
            assert not MultiGraphMatcher(a, b).is_isomorphic()
    # every random connected multigraph in range is isomorphic to a listed class
    rng = np.random.default_rng(3)
    from conftest import random_connected_multigraph
    for _ in range(60):
        g = random_connected_multigraph(rng, 4, 6)
        cands = by_size[(g.n_vertices, g.n_edges)]
        assert any(MultiGraphMatcher(to_nx(g), c).is_isomorphic() for c in cands)


def test_corpus_small_counts():
    # hand counts: 3 trees on 5 vertices; on 4 vertices with 4 edges the
    # 4-cycle, the paw, two doubled paths and the doubled star
    counts = {}
    for g in graphs.corpus():
        counts[(g.n_vertices, g.n_edges)] = counts.get((g.n_vertices, g.n_edges), 0) + 1
    assert counts[(5, 4)] == 3
    assert counts[(4, 4)] == 5
    assert counts[(3, 3)] == 2
    assert counts[(2, 8)] == 1
