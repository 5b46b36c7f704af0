"""beta-density, homogeneity certificates, KL projection, minimal cores, deflation.

theta_beta(H) = beta(E_H) / (|V_H| - 1) over connected edge-induced subgraphs.
A graph is beta-dense when no subgraph beats its own density and strictly
dense when every proper subgraph falls strictly below it.  Densities are
compared as Fractions whenever beta carries an exact form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import gcd

import numpy as np

from .beta import BetaPmf
from .dual import ZERO_MASS, fair_face, max_entropy_solve
from .multigraph import (ContractionMap, GraphError, Multigraph, SubgraphRef,
                         biconnected_components, contract,
                         enumerate_connected_subgraphs, is_biconnected, require_connected)
from .trees import (DEFAULT_MAX_TREES, TreeFamily, TreePmf, enumerate_spanning_trees,
                    make_pmf)

FLOAT_TOL = 1e-12
V_LENGTH_TOL = 1e-8
DEFAULT_SUBGRAPH_LIMIT = 20


class DensityVerdict(str, Enum):
    STRICT = "StrictlyDense"
    DENSE = "DenseNotStrict"
    NOT = "NotDense"


class Homogeneity(str, Enum):
    STRICT = "StrictlyHomogeneous"
    NOT_STRICT = "HomogeneousNotStrict"
    NOT = "NotHomogeneous"


def theta(h, beta: BetaPmf):
    """beta-density of a connected subgraph (Fraction when beta is exact)."""
    if isinstance(h, Multigraph):
        h = SubgraphRef(h, frozenset(range(h.n_edges)))
    if not h.nontrivial:
        raise GraphError("density is undefined for the empty subgraph")
    if not h.connected:
        raise GraphError("density is defined for connected subgraphs only")
    return beta.mass(h.edge_subset) / (h.n_vertices - 1)


def _cmp(a, b) -> int:
    """Sign of a - b; exact for Fractions, FLOAT_TOL otherwise."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return (a > b) - (a < b)
    d = float(a) - float(b)
    return 0 if abs(d) <= FLOAT_TOL else (1 if d > 0 else -1)


@dataclass
class DensityReport:
    theta_G: object
    verdict: DensityVerdict
    violating_subgraphs: list = field(default_factory=list)
    tight_subgraphs: list = field(default_factory=list)
    n_subgraphs: int = 0

    @property
    def dense(self) -> bool:
        return self.verdict != DensityVerdict.NOT

    @property
    def densest(self):
        """The violator of largest density (first in edge order on ties)."""
        if not self.violating_subgraphs:
            return None
        best = self.violating_subgraphs[0]
        for h, t in self.violating_subgraphs[1:]:
            if _cmp(t, best[1]) > 0:
                best = (h, t)
        return best


def density_check(g: Multigraph, beta: BetaPmf, limit: int = DEFAULT_SUBGRAPH_LIMIT) -> DensityReport:
    require_connected(g)
    if len(beta) != g.n_edges:
        raise ValueError("beta length does not match the number of edges")
    whole = frozenset(range(g.n_edges))
    tg = theta(g, beta)
    violating, tight = [], []
    count = 0
    for h in enumerate_connected_subgraphs(g, limit):
        count += 1
        if h.edge_subset == whole:
            continue
        c = _cmp(theta(h, beta), tg)
        if c > 0:
            violating.append((h, theta(h, beta)))
        elif c == 0:
            tight.append((h, theta(h, beta)))
    verdict = DensityVerdict.NOT if violating else (DensityVerdict.DENSE if tight else DensityVerdict.STRICT)
    return DensityReport(tg, verdict, violating, tight, count)


@dataclass
class HomogeneityReport:
    verdict: Homogeneity
    density: DensityReport
    blocks: list  # (SubgraphRef, DensityReport) per biconnected block
    certificate: TreePmf | None = None  # cone element when homogeneous
    violator: tuple | None = None  # (SubgraphRef, theta) when not

    @property
    def homogeneous(self) -> bool:
        return self.verdict != Homogeneity.NOT


def homogeneity_check(g: Multigraph, beta: BetaPmf, limit: int = DEFAULT_SUBGRAPH_LIMIT,
                      certificate: bool = True, family: TreeFamily | None = None,
                      max_trees: int = DEFAULT_MAX_TREES) -> HomogeneityReport:
    """Homogeneity verdict from densities: G dense, then every block strictly dense."""
    dens = density_check(g, beta, limit)
    blocks = []
    if dens.dense:
        for b in biconnected_components(g):
            ids = b.sorted_edges()
            blocks.append((b, density_check(b.as_graph(), beta.restrict(ids), limit)))
    if not dens.dense:
        verdict = Homogeneity.NOT
    elif all(r.verdict == DensityVerdict.STRICT for _, r in blocks):
        verdict = Homogeneity.STRICT
    else:
        verdict = Homogeneity.NOT_STRICT
    rep = HomogeneityReport(verdict, dens, blocks)
    if verdict == Homogeneity.NOT:
        rep.violator = dens.densest
    elif certificate:
        fam = family if family is not None else enumerate_spanning_trees(g, max_trees)
        me = max_entropy_solve(fam, beta)
        if not me.homogeneous:
            raise RuntimeError("dense graph with a trivial cone; density and cone disagree")
        rep.certificate = me.mu_star
    return rep


@dataclass
class KLProjection:
    beta_hat: BetaPmf
    mu_hat: TreePmf
    v: np.ndarray
    objective: float
    v_lengths: np.ndarray
    iterations: int = 0
    homogeneous: bool = False
    kkt_residual: float = 0.0  # worst violation of ell_v <= |V|-1, equality on the support


def _kl_objective(beta, eta, rank):
    return float(-(beta * np.log(eta / rank)).sum())


def kl_projection(g: Multigraph, beta: BetaPmf, family: TreeFamily | None = None,
                  max_iters: int = 200000, tol: float = 1e-11) -> KLProjection:
    """Closest achievable edge pmf: minimize -sum beta log beta_hat over the tree polytope.

    Multiplicative updates mu <- mu * (ell_v / (|V|-1))^s, where
    ell_v(tree) = sum_{e in tree} beta(e) / beta_hat(e); s = 1 is the EM step
    (monotone, keeps mu a pmf), larger s is tried first and kept only when it
    improves the objective.
    """
    require_connected(g)
    fam = family if family is not None else enumerate_spanning_trees(g)
    rank = g.n_vertices - 1
    b = beta.values
    face = fair_face(fam, beta)
    if not face.trivial:
        me = max_entropy_solve(fam, beta, face=face)
        lengths = fam.usage @ np.ones(g.n_edges)
        return KLProjection(beta, me.mu_star, np.ones(g.n_edges), _kl_objective(b, rank * b, rank),
                            lengths, 0, True, 0.0)
    N = fam.usage
    mu, it, kkt = _em(N, b, rank, np.full(len(fam), 1.0 / len(fam)), 5000, tol)
    # EM crawls when trees must lose all their mass; guess the support, rerun EM there
    # (each restricted run keeps zeros at zero) and accept once full KKT holds
    used, full = it, mu
    for cut in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8):
        if kkt <= tol or used >= max_iters:
            break
        trial = np.where(full > cut * full.max(), full, 0.0)
        if (N.T @ trial).min() <= 0:
            continue
        trial, n, _ = _em(N, b, rank, trial / trial.sum(), min(20000, max_iters - used), tol)
        used += n
        tkkt = _kkt_gap(N @ (b / (N.T @ trial)), trial)
        if tkkt < kkt:
            mu, kkt = trial, tkkt
    if kkt > tol and used < max_iters:
        mu, n, kkt = _em(N, b, rank, full, max_iters - used, tol)
        used += n
    it = used
    mu[mu < ZERO_MASS * 1e-3] = 0.0
    mu /= mu.sum()
    pmf = make_pmf(fam, mu)
    beta_hat = BetaPmf(pmf.eta / rank / (pmf.eta / rank).sum())
    v = b / beta_hat.values
    lengths = N @ v
    rep = KLProjection(beta_hat, pmf, v, _kl_objective(b, pmf.eta, rank), lengths, it, False)
    rep.kkt_residual = _kkt_gap(lengths / rank, mu)
    return rep


def _em(N, b, rank, mu, max_iters, tol):
    """Overrelaxed EM; returns (mu, iterations, kkt gap restricted to the current support)."""
    eta = N.T @ mu
    obj = _kl_objective(b, eta, rank)
    live = mu > 0
    s = 1.0
    kkt = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        w = N @ (b / eta)  # ell_v / (|V|-1)
        kkt = _kkt_gap(w[live], mu[live])
        if kkt <= tol:
            break
        while True:
            trial = mu * w ** s
            trial /= trial.sum()
            teta = N.T @ trial
            tobj = _kl_objective(b, teta, rank)
            if tobj <= obj or s == 1.0:
                break
            s = 1.0
        mu, eta, obj = trial, teta, tobj
        s = min(s * 1.2, 8.0)
    return mu, it, kkt


def _kkt_gap(w, mu) -> float:
    # optimality: w <= 1 everywhere and w = 1 on the support
    over = float(max(0.0, (w - 1).max()))
    supp = mu > ZERO_MASS
    on = float(np.abs(w[supp] - 1).max()) if supp.any() else 0.0
    return max(over, on)


def kl_conditions_hold(proj: KLProjection, tol: float = V_LENGTH_TOL) -> bool:
    rank = proj.mu_hat.eta.sum()
    lengths = proj.v_lengths
    supp = proj.mu_hat.mu > ZERO_MASS
    return bool(lengths.max() <= rank + tol and np.all(np.abs(lengths[supp] - rank) <= tol))


def has_restriction_property(h: SubgraphRef, trees, family: TreeFamily) -> bool:
    """Every listed tree meets H in exactly |V_H| - 1 edges."""
    need = h.n_vertices - 1
    ids = list(h.edge_subset)
    return all(family.usage[t, ids].sum() == need for t in trees)


def max_v_subgraph(g: Multigraph, proj: KLProjection, family: TreeFamily | None = None,
                   tol: float = V_LENGTH_TOL) -> list[SubgraphRef]:
    """Components of the subgraph where v is maximal; each has the restriction property."""
    v = proj.v
    if v.max() - v.min() <= tol:
        raise ValueError("v is constant: the graph is homogeneous for this beta")
    top = [e for e in range(g.n_edges) if v[e] >= v.max() - tol]
    fam = family if family is not None else enumerate_spanning_trees(g)
    supp = np.flatnonzero(proj.mu_hat.mu > ZERO_MASS)
    out = []
    for comp in _edge_components(g, top):
        h = SubgraphRef(g, frozenset(comp))
        if not has_restriction_property(h, supp, fam):
            raise RuntimeError(f"{h} lacks the restriction property on supp mu_hat")
        out.append(h)
    return sorted(out, key=lambda h: min(h.edge_subset))


def _edge_components(g: Multigraph, edges) -> list[set]:
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        a, b = g.edges[e]
        parent[find(a)] = find(b)
    groups = {}
    for e in edges:
        groups.setdefault(find(g.edges[e][0]), set()).add(e)
    return list(groups.values())


@dataclass
class DeflationStep:
    graph: Multigraph
    core: SubgraphRef
    shrunk: Multigraph
    contraction: ContractionMap
    projection_ok: bool | None


@dataclass
class CoreReport:
    graph: Multigraph
    strictly_dense: bool
    core: SubgraphRef | None = None
    shrunk: Multigraph | None = None
    contraction: ContractionMap | None = None
    theta_max: object = None
    shortcut: bool = False
    restriction_ok: bool | None = None
    deflation_sequence: list = field(default_factory=list)
    terminal_graphs: list = field(default_factory=list)


def _constant_beta(g: Multigraph) -> BetaPmf:
    return BetaPmf.uniform(g)


def _fair_indices(g: Multigraph, family: TreeFamily) -> frozenset:
    return fair_face(family, _constant_beta(g)).fair


def minimal_core(g: Multigraph, limit: int = DEFAULT_SUBGRAPH_LIMIT,
                 family: TreeFamily | None = None, shortcut: bool = True) -> CoreReport:
    """One step of the strict denseness problem for constant beta."""
    if not is_biconnected(g):
        raise GraphError("minimal cores are defined for biconnected graphs")
    beta = _constant_beta(g)
    rank = g.n_vertices - 1
    fam = family
    if shortcut and gcd(g.n_edges, rank) == 1:
        fam = fam or enumerate_spanning_trees(g)
        if not fair_face(fam, beta).trivial:
            return CoreReport(g, True, theta_max=theta(g, beta), shortcut=True)
    subs = [(h, theta(h, beta)) for h in enumerate_connected_subgraphs(g, limit)]
    tmax = max(t for _, t in subs)
    tg = theta(g, beta)
    whole = frozenset(range(g.n_edges))
    proper_tied = [h for h, t in subs if h.edge_subset != whole and t >= tg]
    if tmax == tg and not proper_tied:
        return CoreReport(g, True, theta_max=tg)
    best = min((h for h, t in subs if t == tmax),
               key=lambda h: (h.n_edges, h.sorted_edges()))
    for h, t in subs:
        if h.edge_subset < best.edge_subset and not t < tmax:
            raise RuntimeError(f"chosen core {best} is not strictly dense")
    fam = fam or enumerate_spanning_trees(g)
    fair = _fair_indices(g, fam)
    shrunk, cmap = contract(g, best)
    return CoreReport(g, False, best, shrunk, cmap, tmax,
                      restriction_ok=has_restriction_property(best, fair, fam))


def _projection_consistent(g: Multigraph, fam: TreeFamily, cmap: ContractionMap,
                           shrunk: Multigraph) -> bool | None:
    """Fair trees of G minus the core project onto fair trees of G/H0.

    None when G has no fair trees (nothing to check).
    """
    fair = _fair_indices(g, fam)
    if not fair:
        return None
    sfam = enumerate_spanning_trees(shrunk)
    sfair = {sfam.trees[i] for i in _fair_indices(shrunk, sfam)}
    for i in fair:
        image = frozenset(cmap.surviving_edge_map[e] for e in fam.trees[i]
                          if e in cmap.surviving_edge_map)
        if image not in sfair:
            return False
    return True


def deflate(g: Multigraph, limit: int = DEFAULT_SUBGRAPH_LIMIT) -> CoreReport:
    """Repeatedly shrink minimal cores, block by block, until every piece is strictly dense."""
    require_connected(g)
    steps, terminal = [], []
    queue = [b.as_graph() for b in biconnected_components(g)]
    while queue:
        cur = queue.pop(0)
        fam = enumerate_spanning_trees(cur)
        rep = minimal_core(cur, limit, fam)
        if rep.strictly_dense:
            terminal.append(cur)
            continue
        ok = _projection_consistent(cur, fam, rep.contraction, rep.shrunk)
        if ok is False:
            raise RuntimeError("a fair tree does not project to a fair tree of the shrunk graph")
        steps.append(DeflationStep(cur, rep.core, rep.shrunk, rep.contraction, ok))
        queue[:0] = [b.as_graph() for b in biconnected_components(rep.shrunk)]
    first = steps[0] if steps else None
    return CoreReport(g, not steps, first.core if first else None, first.shrunk if first else None,
                      first.contraction if first else None,
                      deflation_sequence=steps, terminal_graphs=terminal)
