"""The entropy dual of the minimum determinant problem.

The cone U_beta holds nonnegative tree vectors u whose edge marginals equal
(|V|-1) u(Gamma) beta.  Its normalized elements are the tree laws inducing
beta; the maximum-entropy one is mu*, and its support is the set of fair trees.

Fair trees are the vertices of the tree polytope lying on the smallest face
that contains (|V|-1) beta.  ``fair_face`` finds that face with one LP, and
``certify_face`` proves the split exactly in rational arithmetic: a cone
element positive on the face, and a direction d with
(N(tree) - x) . d = 0 on fair trees and < 0 on every other tree.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from . import exact as ex
from .beta import BetaPmf
from .multigraph import Multigraph
from .trees import (TreeFamily, TreePmf, effective_resistance, eta_from_pmf,
                    make_pmf)

log = logging.getLogger(__name__)

CONE_TOL = 1e-10
ZERO_MASS = 1e-9
EXACT_MAX_TREES = 200


class ConeTrivialError(ValueError):
    """U_beta = {0}: the graph is not beta-homogeneous."""


class CertificateError(RuntimeError):
    """The exact rational check of a numerically found face failed."""


@dataclass(frozen=True)
class Face:
    fair: frozenset
    point: np.ndarray | None  # cone element positive exactly on ``fair``
    direction: np.ndarray | None  # exposes the face (None when fair is everything)
    exact: bool  # whether the split was proved in rational arithmetic

    @property
    def trivial(self) -> bool:
        return not self.fair


def _cone_matrix(family: TreeFamily, beta: BetaPmf) -> np.ndarray:
    x = beta.target(family.rank)
    return family.usage - x[None, :]  # row gamma: N(gamma) - x


def _solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res


def _relint_point(family: TreeFamily, beta: BetaPmf):
    """max sum s  s.t.  u in cone, 0 <= s <= min(u, 1).  Optimal s is the fair indicator."""
    T, m = family.usage.shape
    D = _cone_matrix(family, beta)
    A_eq = np.hstack([D.T, np.zeros((m, T))])
    b_eq = np.zeros(m)
    A_ub = np.hstack([-np.eye(T), np.eye(T)])
    b_ub = np.zeros(T)
    c = np.concatenate([np.zeros(T), -np.ones(T)])
    bounds = [(0, None)] * T + [(0, 1)] * T
    res = _solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds)
    if res.status != 0:
        raise RuntimeError(f"fair-face LP failed: {res.message}")
    s = res.x[T:]
    fair = frozenset(int(i) for i in np.flatnonzero(s > 0.5))
    return fair, res.x[:T]


def _exposing_direction(family: TreeFamily, beta: BetaPmf, fair: frozenset) -> np.ndarray:
    """d with D d = 0 on fair rows and D d <= -1 elsewhere; smallest l1 norm."""
    T, m = family.usage.shape
    D = _cone_matrix(family, beta)
    fair_idx = sorted(fair)
    other = [i for i in range(T) if i not in fair]
    # variables [d (free), t >= |d|]
    c = np.concatenate([np.zeros(m), np.ones(m)])
    A_ub = [np.hstack([D[other], np.zeros((len(other), m))]),
            np.hstack([np.eye(m), -np.eye(m)]),
            np.hstack([-np.eye(m), -np.eye(m)])]
    b_ub = np.concatenate([-np.ones(len(other)), np.zeros(2 * m)])
    A_eq = np.hstack([D[fair_idx], np.zeros((len(fair_idx), m))]) if fair_idx else None
    b_eq = np.zeros(len(fair_idx)) if fair_idx else None
    bounds = [(None, None)] * m + [(0, None)] * m
    res = _solve_lp(c, np.vstack(A_ub), b_ub, A_eq, b_eq, bounds)
    if res.status != 0:
        raise RuntimeError(f"exposing-direction LP failed: {res.message}")
    return res.x[:m]


def _rational(v: float) -> Fraction:
    return Fraction(float(v)).limit_denominator(10**6)


def certify_face(family: TreeFamily, beta: BetaPmf, fair: frozenset,
                 point: np.ndarray | None, direction: np.ndarray | None) -> tuple[list | None, list | None]:
    """Exact rational witnesses for the fair/unfair split, or CertificateError."""
    xq = beta.exact_target(family.rank)
    if xq is None:
        raise CertificateError("beta has no exact rational form")
    T, m = family.usage.shape
    N = [[int(v) for v in row] for row in family.usage]
    rows = [[Fraction(N[g][e]) - xq[e] for e in range(m)] for g in range(T)]
    fair_idx = sorted(fair)
    u_exact = d_exact = None
    if fair_idx:
        # u over the fair trees: sum_g u_g (N(g) - x) = 0, u > 0
        M = [[rows[g][e] for g in fair_idx] for e in range(m)]
        R, piv = ex.rref(M, len(fair_idx))
        free = [c for c in range(len(fair_idx)) if c not in piv]
        vals = [Fraction(0)] * len(fair_idx)
        for c in free:
            vals[c] = _rational(point[fair_idx[c]])
        for i, c in enumerate(piv):
            vals[c] = -sum((R[i][f] * vals[f] for f in free), Fraction(0))
        if any(v <= 0 for v in vals):
            raise CertificateError("rounded cone element is not positive on the fair trees")
        u_exact = [Fraction(0)] * T
        for g, v in zip(fair_idx, vals):
            u_exact[g] = v
    if len(fair_idx) < T:
        A = [rows[g] for g in fair_idx]
        if A:
            R, piv = ex.rref(A, m)
            free = [c for c in range(m) if c not in piv]
        else:
            R, piv, free = [], [], list(range(m))
        d = [Fraction(0)] * m
        for c in free:
            d[c] = _rational(direction[c])
        for i, c in enumerate(piv):
            d[c] = -sum((R[i][f] * d[f] for f in free), Fraction(0))
        for g in range(T):
            if g not in fair and ex.dot(rows[g], d) >= 0:
                raise CertificateError(f"tree {g} is not separated from the fair face")
        d_exact = d
    return u_exact, d_exact


def fair_face(family: TreeFamily, beta: BetaPmf, exact: bool | None = None) -> Face:
    """Smallest face of the tree polytope containing (|V|-1) beta.

    ``exact=None`` certifies in rationals whenever beta is rational and the
    family has at most EXACT_MAX_TREES trees.
    """
    if exact is None:
        exact = beta.exact is not None and len(family) <= EXACT_MAX_TREES
    fair, point = _relint_point(family, beta)
    direction = None
    if len(fair) < len(family):
        direction = _exposing_direction(family, beta, fair)
    if exact:
        u_q, d_q = certify_face(family, beta, fair, point, direction)
        if u_q is not None:
            point = np.array([float(v) for v in u_q])
        if d_q is not None:
            direction = np.array([float(v) for v in d_q])
    else:
        D = _cone_matrix(family, beta)
        if fair:
            scale = max(1.0, point.sum())
            if np.abs(D.T @ point).max() > 1e-8 * scale:
                raise CertificateError("fair-face point violates the cone constraints")
        if direction is not None:
            other = [i for i in range(len(family)) if i not in fair]
            if (D[other] @ direction).max() > -0.5:
                raise CertificateError("exposing direction does not separate the unfair trees")
    return Face(fair, point, direction, bool(exact))


@dataclass(frozen=True)
class ConeCheck:
    member: bool
    residuals: np.ndarray


def cone_membership(family: TreeFamily, beta: BetaPmf, u, tol: float = CONE_TOL) -> ConeCheck:
    """Is u in U_beta?  Exact when u and beta are both rational."""
    if all(isinstance(v, (int, Fraction)) for v in u) and beta.exact is not None:
        uq = [ex.to_fraction(v) for v in u]
        if any(v < 0 for v in uq):
            return ConeCheck(False, np.full(len(beta), np.inf))
        total = sum(uq, Fraction(0))
        res = []
        for e in range(family.usage.shape[1]):
            lhs = sum((uq[g] for g in range(len(family)) if family.usage[g, e]), Fraction(0))
            res.append(lhs - family.rank * total * beta.exact[e])
        return ConeCheck(all(r == 0 for r in res), np.array([float(abs(r)) for r in res]))
    uf = np.asarray(u, dtype=float)
    if np.any(uf < 0):
        return ConeCheck(False, np.full(len(beta), np.inf))
    res = np.abs(family.usage.T @ uf - family.rank * uf.sum() * beta.values)
    return ConeCheck(bool(res.max() <= tol), res)


def entropy(mu) -> float:
    m = np.asarray(mu.mu if isinstance(mu, TreePmf) else mu, dtype=float)
    p = m[m > 0]
    return float(-(p * np.log(p)).sum())


def phi_tilde(u) -> float:
    """Dual objective sum(u) - sum(u log u), with 0 log 0 = 0."""
    u = np.asarray(u, dtype=float)
    p = u[u > 0]
    return float(u.sum() - (p * np.log(p)).sum())


@dataclass(frozen=True)
class MaxEntReport:
    homogeneous: bool
    mu_star: TreePmf | None
    entropy: float
    dual_value: float
    fair_trees: frozenset
    face: Face
    residual: float
    iterations: int
    gap_vs_primal: float | None = None

    @property
    def strict(self) -> bool:
        return self.homogeneous and len(self.fair_trees) == len(self.mu_star.mu)


def _newton_dual(A: np.ndarray, x: np.ndarray, lam0=None, tol: float = 1e-13, max_iter: int = 200):
    """min_lam logsumexp(A lam) - x.lam; rows of A are fair-tree usage vectors."""
    lam = np.zeros(A.shape[1]) if lam0 is None else np.asarray(lam0, dtype=float).copy()

    def f(l):
        return logsumexp(A @ l) - x @ l

    fval = f(lam)
    it = 0
    for it in range(1, max_iter + 1):
        z = A @ lam
        mu = np.exp(z - logsumexp(z))
        eta = A.T @ mu
        grad = eta - x
        if np.abs(grad).max() <= tol:
            break
        H = (A.T * mu) @ A - np.outer(eta, eta)
        step = -np.linalg.lstsq(H, grad, rcond=1e-12)[0]
        slope = grad @ step
        if slope >= 0:
            step, slope = -grad, -(grad @ grad)
        t = 1.0
        while True:
            cand = lam + t * step
            fc = f(cand)
            if fc <= fval + 1e-4 * t * slope + 4e-16 * max(1.0, abs(fval)):
                break
            t *= 0.5
            if t < 1e-12:
                break
        if t < 1e-12:
            break
        lam, fval = cand, fc
    z = A @ lam
    mu = np.exp(z - logsumexp(z))
    mu /= mu.sum()
    return mu, lam, it


def max_entropy_solve(family: TreeFamily, beta: BetaPmf, exact: bool | None = None,
                      init=None, face: Face | None = None) -> MaxEntReport:
    """Maximum-entropy tree law inducing beta, found on the fair face.

    On the face mu* has full support, so it is log-linear in the edge
    indicators there; Newton on the smooth dual recovers it.
    """
    face = face if face is not None else fair_face(family, beta, exact)
    if face.trivial:
        return MaxEntReport(False, None, float("-inf"), 0.0, frozenset(), face, float("inf"), 0)
    idx = sorted(face.fair)
    A = family.usage[idx]
    x = beta.target(family.rank)
    mu_f, _, iters = _newton_dual(A, x, lam0=init)
    mu = np.zeros(len(family))
    mu[idx] = mu_f
    pmf = TreePmf(mu, eta_from_pmf(family, mu))
    resid = float(np.abs(pmf.eta - x).max())
    if resid > CONE_TOL:
        log.warning("max-entropy constraint residual %.3g exceeds %.0e", resid, CONE_TOL)
    H = entropy(mu)
    return MaxEntReport(True, pmf, H, float(np.exp(H)), frozenset(idx), face, resid, iters)


def fair_trees(family: TreeFamily, beta: BetaPmf, exact: bool | None = None) -> frozenset:
    """Per-tree feasibility oracle: tree g is fair iff max u(g) over U_beta n P(Gamma) > 0."""
    T = len(family)
    D = _cone_matrix(family, beta)
    A_eq = np.vstack([D.T, np.ones((1, T))])
    b_eq = np.concatenate([np.zeros(D.shape[1]), [1.0]])
    fair = set()
    witness = np.zeros(T)
    for g in range(T):
        if g in fair:
            continue
        c = np.zeros(T)
        c[g] = -1.0
        res = _solve_lp(c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * T)
        if res.status == 2:
            raise ConeTrivialError("U_beta is trivial: the graph is not beta-homogeneous")
        if res.status != 0:
            raise RuntimeError(f"fairness LP failed for tree {g}: {res.message}")
        if -res.fun > ZERO_MASS:
            support = np.flatnonzero(res.x > ZERO_MASS)
            fair.update(int(i) for i in support)
            witness += res.x
    fair = frozenset(fair)
    if exact is None:
        exact = beta.exact is not None and T <= EXACT_MAX_TREES
    if exact:
        # scale so every fair tree carries at least unit mass before rounding
        point = witness / witness[list(fair)].min()
        direction = _exposing_direction(family, beta, fair) if len(fair) < T else None
        certify_face(family, beta, fair, point, direction)
    return fair


def duality_gap(p_star: float, maxent: MaxEntReport) -> float:
    """Relative gap between the primal infimum and exp(H(mu*))."""
    if hasattr(p_star, "p_star"):
        p_star = p_star.p_star
    return abs(p_star - maxent.dual_value) / max(1.0, maxent.dual_value)


def good_beta(g: Multigraph, mu="uniform", family: TreeFamily | None = None, exact: bool = True) -> BetaPmf:
    """Edge pmf induced by a tree law: beta = eta_mu / (|V|-1).

    For the uniform law this is beta proportional to effective resistance,
    computed exactly in rationals when ``exact``.
    """
    rank = g.n_vertices - 1
    if isinstance(mu, str):
        if mu != "uniform":
            raise ValueError(f"unknown tree law {mu!r}")
        if exact:
            eff = ex.exact_effective_resistance(g)
            return BetaPmf(np.array([float(r) / rank for r in eff]), tuple(r / rank for r in eff))
        eff = effective_resistance(g)
        return BetaPmf(eff / eff.sum())
    if family is None:
        raise ValueError("a TreeFamily is required for an explicit tree law")
    m = mu.mu if isinstance(mu, TreePmf) else mu
    if all(isinstance(v, (int, Fraction)) for v in m):
        mq = [ex.to_fraction(v) for v in m]
        eta = [sum((mq[k] for k in range(len(family)) if family.usage[k, e]), Fraction(0))
               for e in range(g.n_edges)]
        if any(v <= 0 for v in eta):
            raise ValueError("some edge is never used by the tree law")
        return BetaPmf(np.array([float(v) / rank for v in eta]), tuple(v / rank for v in eta))
    eta = eta_from_pmf(family, np.asarray(m, dtype=float))
    if np.any(eta <= 0):
        raise ValueError("some edge is never used by the tree law")
    return BetaPmf(eta / eta.sum())
