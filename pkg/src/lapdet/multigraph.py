"""Undirected multigraphs, edge-induced subgraphs and contraction.

Edges are identified by their position in ``Multigraph.edges``; every
per-edge vector elsewhere in the package (weights, edge pmfs, usage
probabilities) is indexed the same way.  Optional ``edge_names`` keep the
labels read from a graph file.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Sequence

Vertex = Hashable


class GraphError(ValueError):
    """Structurally invalid graph or subgraph."""


class EnumerationLimitError(RuntimeError):
    """An exhaustive enumeration would exceed its configured limit."""


@dataclass(frozen=True)
class Multigraph:
    vertices: tuple
    edges: tuple  # tuple of (u, v) pairs; edge id = index
    edge_names: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple((u, v) for u, v in self.edges))
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex ids")
        known = set(self.vertices)
        for i, (u, v) in enumerate(self.edges):
            if u == v:
                raise GraphError(f"edge {self.edge_label(i)} is a self-loop at {u!r}")
            if u not in known or v not in known:
                raise GraphError(f"edge {self.edge_label(i)} has an unknown endpoint")
        if self.edge_names is not None:
            names = tuple(str(n) for n in self.edge_names)
            if len(names) != len(self.edges):
                raise GraphError("edge_names length does not match edges")
            if len(set(names)) != len(names):
                raise GraphError("duplicate edge ids")
            object.__setattr__(self, "edge_names", names)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], vertices: Sequence | None = None,
                   names: Sequence | None = None) -> "Multigraph":
        edges = [tuple(e) for e in edges]
        if vertices is None:
            seen = {}
            for u, v in edges:
                seen.setdefault(u, None)
                seen.setdefault(v, None)
            vertices = list(seen)
        return cls(tuple(vertices), tuple(edges), None if names is None else tuple(names))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_label(self, i: int) -> str:
        return self.edge_names[i] if self.edge_names is not None else str(i)

    @cached_property
    def vertex_index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index_pairs(self) -> tuple:
        """Endpoints of every edge as vertex positions."""
        idx = self.vertex_index
        return tuple((idx[u], idx[v]) for u, v in self.edges)

    @cached_property
    def incidence(self) -> dict:
        """vertex -> list of (edge id, other endpoint)."""
        inc = {v: [] for v in self.vertices}
        for i, (u, v) in enumerate(self.edges):
            inc[u].append((i, v))
            inc[v].append((i, u))
        return inc

    def is_connected(self, edge_subset: Iterable[int] | None = None) -> bool:
        """Connectivity of the whole graph, or of the subgraph induced by ``edge_subset``."""
        if edge_subset is None:
            verts, edges = self.vertices, range(self.n_edges)
        else:
            edges = list(edge_subset)
            verts = {x for i in edges for x in self.edges[i]}
        if not verts:
            return False
        return len(_components(verts, (self.edges[i] for i in edges))) == 1

    def edges_between(self, vertex_set) -> list[int]:
        vs = set(vertex_set)
        return [i for i, (u, v) in enumerate(self.edges) if u in vs and v in vs]


def _components(vertices, edges) -> list[set]:
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups = defaultdict(set)
    for v in vertices:
        groups[find(v)].add(v)
    return list(groups.values())


@dataclass(frozen=True)
class ValidationReport:
    connected: bool
    n_vertices: int
    n_edges: int
    self_loops: tuple = ()
    multiplicities: dict = field(default_factory=dict)
    components: int = 1

    @property
    def ok(self) -> bool:
        return self.connected and not self.self_loops and self.n_edges > 0


def validate(g: Multigraph) -> ValidationReport:
    loops = tuple(i for i, (u, v) in enumerate(g.edges) if u == v)
    mult = Counter(frozenset(e) for e in g.edges)
    comps = _components(g.vertices, g.edges) if g.vertices else []
    return ValidationReport(
        connected=len(comps) == 1,
        n_vertices=g.n_vertices,
        n_edges=g.n_edges,
        self_loops=loops,
        multiplicities={tuple(sorted(map(str, k))): c for k, c in mult.items() if c > 1},
        components=len(comps),
    )


def require_connected(g: Multigraph) -> None:
    if g.n_edges == 0 or not g.is_connected():
        raise GraphError("graph must be connected with at least one edge")


@dataclass(frozen=True)
class SubgraphRef:
    """Edge-induced subgraph: the given edges plus their endpoints."""

    parent: Multigraph
    edge_subset: frozenset

    @cached_property
    def vertices(self) -> frozenset:
        return frozenset(x for i in self.edge_subset for x in self.parent.edges[i])

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edge_subset)

    @property
    def nontrivial(self) -> bool:
        return bool(self.edge_subset)

    @cached_property
    def connected(self) -> bool:
        return self.parent.is_connected(self.edge_subset)

    def sorted_edges(self) -> tuple:
        return tuple(sorted(self.edge_subset))

    def as_graph(self) -> Multigraph:
        """Standalone copy; edge ids follow the sorted parent ids."""
        ids = self.sorted_edges()
        order = [v for v in self.parent.vertices if v in self.vertices]
        names = None
        if self.parent.edge_names is not None:
            names = tuple(self.parent.edge_names[i] for i in ids)
        return Multigraph(tuple(order), tuple(self.parent.edges[i] for i in ids), names)

    def __repr__(self):
        return f"SubgraphRef(edges={list(self.sorted_edges())})"


def edge_induced_subgraph(g: Multigraph, edges: Iterable[int]) -> SubgraphRef:
    subset = frozenset(edges)
    if not subset:
        raise GraphError("edge-induced subgraph needs at least one edge")
    bad = [i for i in subset if not 0 <= i < g.n_edges]
    if bad:
        raise GraphError(f"unknown edge ids {sorted(bad)}")
    return SubgraphRef(g, subset)


def biconnected_components(g: Multigraph) -> list[SubgraphRef]:
    """Edge partition into biconnected blocks (parallel edges share a block).

    Iterative Hopcroft-Tarjan on an edge stack; the DFS skips the tree edge by
    id rather than by parent vertex so that parallel edges close a cycle.
    """
    require_connected(g)
    inc = g.incidence
    disc, low = {}, {}
    blocks = []
    stack_edges = []
    counter = 0
    root = g.vertices[0]
    disc[root] = low[root] = counter
    # frame: (vertex, edge id used to enter, iterator over incidence)
    frames = [(root, None, iter(inc[root]))]
    while frames:
        v, via, it = frames[-1]
        advanced = False
        for eid, w in it:
            if eid == via:
                continue
            if w not in disc:
                counter += 1
                disc[w] = low[w] = counter
                stack_edges.append(eid)
                frames.append((w, eid, iter(inc[w])))
                advanced = True
                break
            if disc[w] < disc[v]:
                stack_edges.append(eid)
                low[v] = min(low[v], disc[w])
        if advanced:
            continue
        frames.pop()
        if frames:
            parent = frames[-1][0]
            low[parent] = min(low[parent], low[v])
            if low[v] >= disc[parent]:
                block = set()
                while True:
                    e = stack_edges.pop()
                    block.add(e)
                    if e == via:
                        break
                blocks.append(SubgraphRef(g, frozenset(block)))
    blocks.sort(key=lambda b: min(b.edge_subset))
    return blocks


def articulation_vertices(g: Multigraph) -> set:
    seen = Counter()
    for b in biconnected_components(g):
        for v in b.vertices:
            seen[v] += 1
    return {v for v, c in seen.items() if c > 1}


def is_biconnected(g: Multigraph) -> bool:
    """One block covering every edge (a single edge counts as biconnected)."""
    if g.n_edges == 0 or not g.is_connected():
        return False
    return len(biconnected_components(g)) == 1


@dataclass(frozen=True)
class ContractionMap:
    source: Multigraph
    contracted_edge_set: frozenset
    vertex_map: dict
    surviving_edge_map: dict  # source edge id -> shrunk edge id
    core_vertex: Vertex


def contract(g: Multigraph, h: SubgraphRef, name: Vertex | None = None) -> tuple[Multigraph, ContractionMap]:
    """Shrink G/H: identify the vertices of H, drop loops, keep parallel edges."""
    if h.parent is not g:
        if h.parent != g:
            raise GraphError("subgraph belongs to a different graph")
    if not h.nontrivial or not h.connected:
        raise GraphError("can only contract a connected nontrivial subgraph")
    members = h.vertices
    if name is None:
        name = "[" + "+".join(sorted(str(v) for v in members)) + "]"
        while name in g.vertex_index:
            name = name + "'"
    elif name in g.vertex_index and name not in members:
        raise GraphError(f"vertex name {name!r} already used")
    vmap = {v: (name if v in members else v) for v in g.vertices}
    new_vertices = []
    for v in g.vertices:
        w = vmap[v]
        if w not in new_vertices:
            new_vertices.append(w)
    new_edges, new_names, emap = [], [], {}
    for i, (u, v) in enumerate(g.edges):
        a, b = vmap[u], vmap[v]
        if a == b:
            continue
        emap[i] = len(new_edges)
        new_edges.append((a, b))
        new_names.append(g.edge_label(i))
    shrunk = Multigraph(tuple(new_vertices), tuple(new_edges),
                        tuple(new_names) if g.edge_names is not None else None)
    return shrunk, ContractionMap(g, frozenset(h.edge_subset), vmap, emap, name)


def enumerate_connected_subgraphs(g: Multigraph, limit: int = 20) -> Iterator[SubgraphRef]:
    """Every connected nonempty edge subset exactly once.

    Each subset is grown from its smallest edge id; candidates are taken from
    a frontier of adjacent higher edges, and a candidate skipped at one level
    stays banned below it, so no subset is produced twice.
    """
    if g.n_edges > limit:
        raise EnumerationLimitError(
            f"|E|={g.n_edges} exceeds the exhaustive subgraph limit {limit}")
    adj = [set() for _ in range(g.n_edges)]
    for v, lst in g.incidence.items():
        ids = [e for e, _ in lst]
        for a in ids:
            adj[a].update(ids)
    for a in range(g.n_edges):
        adj[a].discard(a)

    def grow(current, frontier, banned):
        yield current
        for k, e in enumerate(frontier):
            blocked = banned | set(frontier[: k + 1])
            nxt = list(frontier[k + 1:])
            taken = set(nxt)
            for f in sorted(adj[e]):
                if f > root and f not in current and f not in blocked and f not in taken:
                    nxt.append(f)
                    taken.add(f)
            yield from grow(current | {e}, nxt, blocked)

    for root in range(g.n_edges):
        start = frozenset({root})
        frontier = sorted(f for f in adj[root] if f > root)
        for s in grow(start, frontier, {root}):
            yield SubgraphRef(g, frozenset(s))
