"""The parameterized minimum determinant problem.

    minimize  sum_trees sigma[tree]   subject to  prod_e sigma(e)^beta(e) = 1

is solved through the degree-zero objective

    g(sigma) = log sum_trees sigma[tree] - (|V|-1) sum_e beta(e) log sigma(e)

in log-weights r = log sigma.  The multiplicative update
sigma <- sigma * ((|V|-1) beta / eta_sigma)^alpha has exactly the stationary
points of g as fixed points; every iterate is renormalized onto the
constraint surface, which does not change g.

Outcome classes:
  StrictMinimizer         the update converges (eta_sigma = (|V|-1) beta)
  HomogeneousNoMinimizer  the infimum is positive but only approached as some
                          weights diverge; reported with an explicit diverging
                          witness
  NotHomogeneous          g is unbounded below; reported with a certified
                          descent of at least ``divergence_margin`` nats
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .beta import BetaPmf
from .dual import Face, fair_face
from .multigraph import EnumerationLimitError, GraphError, Multigraph, require_connected
from .trees import (DEFAULT_MAX_TREES, TreeFamily, TreePmf, as_weights,
                    enumerate_spanning_trees, eta_from_pmf, eta_from_sigma,
                    log_tree_mass, resistance_matrix, tree_log_weights, ust_pmf)

log = logging.getLogger(__name__)


class Status(str, Enum):
    STRICT = "StrictMinimizer"
    NO_MINIMIZER = "HomogeneousNoMinimizer"
    NOT_HOMOGENEOUS = "NotHomogeneous"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SolveConfig:
    step_size: float = 0.5
    max_step: float = 1.0
    max_iters: int = 20000
    grad_tol: float = 1e-9
    divergence_margin: float = 30.0
    spread_threshold: float = 40.0
    enumerate: bool = True
    max_trees: int = DEFAULT_MAX_TREES
    exact: bool | None = None
    cross_validate: bool = True
    max_subgraph_edges: int = 20
    armijo: float = 1e-4
    growth: float = 1.5

    def __post_init__(self):
        for name in ("step_size", "max_step", "grad_tol", "divergence_margin", "spread_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.step_size > self.max_step:
            raise ValueError("step_size may not exceed max_step")


@dataclass
class SolveReport:
    status: Status
    p_star: float
    log_p_star: float
    sigma_star: np.ndarray | None = None
    mu_limit: TreePmf | None = None
    iterations: int = 0
    residual: float = float("nan")
    spread: float = 0.0
    g_history: list = field(default_factory=list)
    witness_log_sigma: np.ndarray | None = None  # log-weights; may exceed float range once exponentiated
    witness_g: float | None = None
    descent: tuple | None = None  # (g(1), certified upper bound on g at witness)
    fair_trees: frozenset | None = None
    certificate_agrees: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def witness_sigma(self) -> np.ndarray | None:
        """Witness weights rescaled so the largest is 1 (g is scale invariant)."""
        if self.witness_log_sigma is None:
            return None
        r = self.witness_log_sigma
        return np.exp(r - r.max())


def _target(g: Multigraph, beta: BetaPmf) -> np.ndarray:
    if len(beta) != g.n_edges:
        raise ValueError("beta length does not match the number of edges")
    return beta.target(g.n_vertices - 1)


def eval_g(g: Multigraph, sigma, beta: BetaPmf, family: TreeFamily | None = None) -> float:
    """Degree-zero objective; tree sums by enumeration when ``family`` is given."""
    s = as_weights(g, sigma)
    x = _target(g, beta)
    mass = logsumexp(tree_log_weights(family, s)) if family is not None else log_tree_mass(g, s)
    return float(mass - x @ np.log(s))


def grad_g(g: Multigraph, sigma, beta: BetaPmf, family: TreeFamily | None = None) -> np.ndarray:
    """Gradient of g in log-weights: eta_sigma - (|V|-1) beta."""
    s = as_weights(g, sigma)
    eta = ust_pmf(family, s).eta if family is not None else eta_from_sigma(g, s)
    return eta - _target(g, beta)


class _TreeObjective:
    """g restricted to a set of trees, with accurate increments."""

    def __init__(self, usage: np.ndarray, x: np.ndarray):
        self.N = usage
        self.x = x

    def value(self, r):
        return float(logsumexp(self.N @ r) - self.x @ r)

    def state(self, r):
        z = self.N @ r
        mu = np.exp(z - logsumexp(z))
        return mu, self.N.T @ mu

    def increment(self, r, mu, delta):
        # g(r + delta) - g(r) without cancellation
        w = np.expm1(self.N @ delta)
        return float(np.log1p(mu @ w) - self.x @ delta)


class _LaplacianObjective:
    """g through det' L, for graphs too large to enumerate.

    Increments use det(M + B W B^T) = det(M) det(I + W R) with R = B^T M^-1 B,
    and log det(I + W R) = sum log1p(eigenvalues), which stays accurate when
    the step is tiny.
    """

    def __init__(self, g: Multigraph, x: np.ndarray):
        self.g = g
        self.x = x

    def value(self, r):
        return float(log_tree_mass(self.g, np.exp(r)) - self.x @ r)

    def state(self, r):
        sigma = np.exp(r)
        R = resistance_matrix(self.g, sigma)
        return (sigma, R), sigma * np.diag(R)

    def increment(self, r, st, delta):
        sigma, R = st
        w = sigma * np.expm1(delta)
        lam = np.linalg.eigvals(w[:, None] * R)
        return float(np.log1p(lam).sum().real - self.x @ delta)


def _normalize(r, beta_values):
    return r - beta_values @ r


def _iterate(obj, r, beta: BetaPmf, cfg: SolveConfig, floor: float | None = None):
    """Multiplicative fixed-point iteration with backtracking.

    Returns (r, history, residual, iterations, reason) with reason one of
    'converged', 'floor' (g dropped below ``floor``), 'budget', 'stalled'.
    """
    x = obj.x
    bv = beta.values
    r = _normalize(np.asarray(r, dtype=float), bv)
    gval = obj.value(r)
    history = [gval]
    alpha = cfg.step_size
    resid = float("inf")
    for it in range(cfg.max_iters):
        try:
            mu, eta = obj.state(r)
        except (GraphError, np.linalg.LinAlgError):
            return r, history, resid, it, "ill-conditioned"
        resid = float(np.abs(eta - x).max())
        if resid <= cfg.grad_tol:
            return r, history, resid, it, "converged"
        if floor is not None and gval < floor:
            return r, history, resid, it, "floor"
        direction = np.log(x) - np.log(np.maximum(eta, 1e-300))
        direction = direction - bv @ direction
        slope = float((eta - x) @ direction)
        while True:
            step = alpha * direction
            dg = obj.increment(r, mu, step)
            if dg <= cfg.armijo * alpha * slope:
                break
            alpha *= 0.5
            if alpha < 1e-14:
                return r, history, resid, it, "stalled"
        r = _normalize(r + step, bv)
        gval = gval + dg
        history.append(gval)
        alpha = min(alpha * cfg.growth, cfg.max_step)
        if not np.all(np.isfinite(r)):
            return r, history, resid, it, "stalled"
    try:
        mu, eta = obj.state(r)
    except (GraphError, np.linalg.LinAlgError):
        return r, history, resid, cfg.max_iters, "ill-conditioned"
    resid = float(np.abs(eta - x).max())
    reason = "converged" if resid <= cfg.grad_tol else "budget"
    if floor is not None and gval < floor:
        reason = "floor"
    return r, history, resid, cfg.max_iters, reason


def _spread(r) -> float:
    return float(r.max() - r.min()) if r.size else 0.0


def _closed_form_two_vertices(g: Multigraph, beta: BetaPmf) -> SolveReport:
    # |V| = 2: sigma = c * beta with c = prod beta^-beta
    b = beta.values
    log_c = float(-(b * np.log(b)).sum())
    sigma = np.exp(log_c) * b
    return SolveReport(Status.STRICT, float(np.exp(log_c)), log_c, sigma_star=sigma,
                       residual=0.0, spread=_spread(np.log(sigma)), g_history=[log_c])


def solve_min_det(g: Multigraph, beta: BetaPmf, cfg: SolveConfig | None = None,
                  family: TreeFamily | None = None, sigma0=None) -> SolveReport:
    cfg = cfg or SolveConfig()
    require_connected(g)
    x = _target(g, beta)
    if g.n_edges == 1:
        rep = _closed_form_two_vertices(g, beta)
        rep.notes.append("single edge: closed form")
        _cross_validate(g, beta, cfg, rep)
        return rep
    if family is None and cfg.enumerate:
        try:
            family = enumerate_spanning_trees(g, cfg.max_trees)
        except EnumerationLimitError:
            family = None
    r0 = np.zeros(g.n_edges) if sigma0 is None else np.log(as_weights(g, sigma0))
    if family is None:
        rep = _solve_heuristic(g, beta, cfg, r0)
    else:
        rep = _solve_with_face(g, beta, cfg, family, r0)
    _cross_validate(g, beta, cfg, rep)
    return rep


def _solve_with_face(g, beta, cfg, family, r0) -> SolveReport:
    x = _target(g, beta)
    face = fair_face(family, beta, cfg.exact)
    full = _TreeObjective(family.usage, x)
    g_one = full.value(np.zeros(g.n_edges))

    if face.trivial:
        floor = g_one - cfg.divergence_margin
        r, hist, resid, its, reason = _iterate(full, r0, beta, cfg, floor=floor)
        rep = SolveReport(Status.NOT_HOMOGENEOUS, 0.0, float("-inf"), iterations=its,
                          residual=resid, g_history=hist, fair_trees=face.fair)
        if reason != "floor":
            # along d every tree loses at least one nat per unit step relative to
            # the constraint term, so g(r + t d) <= g(r) - t
            t = hist[-1] - floor + 1.0
            r = _normalize(r + t * face.direction, beta.values)
            rep.notes.append(f"descent certified along the separating direction (t={t:.3g})")
        gw = full.value(r)
        rep.witness_log_sigma = r
        rep.witness_g = gw
        rep.spread = _spread(r)
        rep.descent = (g_one, gw)
        if not gw < floor:
            rep.status = Status.INCONCLUSIVE
            rep.notes.append("descent certificate failed")
        return rep

    idx = sorted(face.fair)
    restricted = _TreeObjective(family.usage[idx], x)
    r, hist, resid, its, reason = _iterate(restricted, r0, beta, cfg)
    sigma = np.exp(r)
    log_p = hist[-1]
    if reason != "converged":
        rep = SolveReport(Status.INCONCLUSIVE, float(np.exp(log_p)), log_p, iterations=its,
                          residual=resid, g_history=hist, fair_trees=face.fair, spread=_spread(r))
        rep.notes.append(f"iteration ended without convergence ({reason})")
        return rep
    if len(idx) == len(family):
        return SolveReport(Status.STRICT, float(np.exp(log_p)), log_p, sigma_star=sigma,
                           mu_limit=ust_pmf(family, sigma), iterations=its, residual=resid,
                           spread=_spread(r), g_history=hist, fair_trees=face.fair)

    # Minimizing sequence r + t d: fair trees keep their g-contribution, the
    # rest decay like exp(-t); push until the weights visibly diverge.
    mu_face = np.zeros(len(family))
    mu_face[idx] = restricted.state(r)[0]
    limit = TreePmf(mu_face, eta_from_pmf(family, mu_face))
    d = face.direction
    width = float(d.max() - d.min())
    t = max(1.0, (cfg.spread_threshold + _spread(r)) / width) if width > 0 else 1.0
    for _ in range(60):
        rt = _normalize(r + t * d, beta.values)
        gw = full.value(rt)
        if _spread(rt) >= cfg.spread_threshold and gw - log_p <= 1e-12:
            break
        t *= 1.5
    rep = SolveReport(Status.NO_MINIMIZER, float(np.exp(log_p)), log_p, mu_limit=limit,
                      iterations=its, residual=float(np.abs(eta_from_pmf(family, ust_pmf(family, np.exp(rt)).mu) - x).max()),
                      spread=_spread(rt), g_history=hist, witness_log_sigma=rt, witness_g=gw,
                      fair_trees=face.fair)
    rep.notes.append(f"{len(family) - len(idx)} unfair trees; diverging witness at t={t:.3g}")
    return rep


def _solve_heuristic(g, beta, cfg, r0) -> SolveReport:
    """Laplacian-only path for graphs too large to enumerate."""
    x = _target(g, beta)
    obj = _LaplacianObjective(g, x)
    g_one = obj.value(np.zeros(g.n_edges))
    floor = g_one - cfg.divergence_margin
    r, hist, resid, its, reason = _iterate(obj, r0, beta, cfg, floor=floor)
    log_p = hist[-1]
    spread = _spread(r)
    rep = SolveReport(Status.INCONCLUSIVE, float(np.exp(log_p)), log_p, iterations=its,
                      residual=resid, spread=spread, g_history=hist)
    if reason == "converged" and spread <= cfg.spread_threshold:
        rep.status = Status.STRICT
        rep.sigma_star = np.exp(r)
    elif reason == "floor":
        rep.status = Status.NOT_HOMOGENEOUS
        rep.p_star, rep.log_p_star = 0.0, float("-inf")
        rep.witness_log_sigma, rep.witness_g = r, log_p
        rep.descent = (g_one, log_p)
    elif spread > cfg.spread_threshold and len(hist) > 10 and abs(hist[-1] - hist[-11]) < 1e-10:
        rep.status = Status.NO_MINIMIZER
        rep.witness_log_sigma, rep.witness_g = r, log_p
    else:
        rep.notes.append(f"iteration ended without classification ({reason})")
    return rep


def _cross_validate(g, beta, cfg, rep: SolveReport) -> None:
    if not cfg.cross_validate or g.n_edges > cfg.max_subgraph_edges:
        return
    from .density import Homogeneity, homogeneity_check

    verdict = homogeneity_check(g, beta, limit=cfg.max_subgraph_edges, certificate=False).verdict
    expected = {Homogeneity.STRICT: Status.STRICT,
                Homogeneity.NOT_STRICT: Status.NO_MINIMIZER,
                Homogeneity.NOT: Status.NOT_HOMOGENEOUS}[verdict]
    rep.certificate_agrees = rep.status == expected
    if not rep.certificate_agrees:
        log.warning("solver status %s disagrees with density certificate %s", rep.status.value, verdict.value)


@dataclass(frozen=True)
class BoundReport:
    holds: bool
    reason: str
    c_star: float | None = None
    attained: bool | None = None
    beta: BetaPmf | None = None


def determinant_bound(g: Multigraph, b, family: TreeFamily | None = None,
                      exact: bool | None = None) -> BoundReport:
    """Largest c with det' L_sigma >= c prod sigma^b for all sigma, if any."""
    from fractions import Fraction

    from .dual import max_entropy_solve

    require_connected(g)
    rank = g.n_vertices - 1
    vals = list(b) if np.ndim(b) else [b] * g.n_edges
    if len(vals) != g.n_edges:
        raise ValueError("b must have one entry per edge")
    is_exact = all(isinstance(v, (int, Fraction, str)) for v in vals)
    if is_exact:
        from .exact import to_fraction

        bq = [to_fraction(v) for v in vals]
        if any(v <= 0 for v in bq):
            raise ValueError("b must be strictly positive")
        if sum(bq) != rank:
            return BoundReport(False, f"b(E) = {sum(bq)} differs from |V|-1 = {rank}")
        beta = BetaPmf(np.array([float(v) / rank for v in bq]), tuple(v / rank for v in bq))
    else:
        bf = np.asarray(vals, dtype=float)
        if np.any(bf <= 0):
            raise ValueError("b must be strictly positive")
        if abs(bf.sum() - rank) > 1e-12 * max(1, rank):
            return BoundReport(False, f"b(E) = {bf.sum()!r} differs from |V|-1 = {rank}")
        beta = BetaPmf(bf / bf.sum())
    fam = family if family is not None else enumerate_spanning_trees(g)
    me = max_entropy_solve(fam, beta, exact)
    if not me.homogeneous:
        return BoundReport(False, "graph is not beta-homogeneous for beta = b/(|V|-1)", beta=beta)
    return BoundReport(True, "beta-homogeneous", g.n_vertices * me.dual_value, me.strict, beta)


def bound_ratio(g: Multigraph, sigma, b) -> float:
    """F(sigma) = det' L_sigma * prod sigma^-b."""
    from .trees import log_det_laplacian

    s = as_weights(g, sigma)
    return float(np.exp(log_det_laplacian(g, s) - np.asarray(b, dtype=float) @ np.log(s)))


@dataclass(frozen=True)
class CrossEntropy:
    cross_entropy: float
    kl: float
    cross_entropy_direct: float
    kl_direct: float


def cross_entropy_diag(mu, g: Multigraph, sigma, family: TreeFamily) -> CrossEntropy:
    """H(mu, mu_sigma) from the edge-usage closed form, and D_KL(mu || mu_sigma).

    Direct summation over trees is returned alongside as a check.
    """
    from .dual import entropy

    m = mu.mu if isinstance(mu, TreePmf) else np.asarray(mu, dtype=float)
    s = as_weights(g, sigma)
    lw = tree_log_weights(family, s)
    lmass = logsumexp(lw)
    eta = eta_from_pmf(family, m)
    ce = float(lmass - eta @ np.log(s))
    log_ust = lw - lmass
    if np.any(np.isneginf(log_ust[m > 0])):
        raise FloatingPointError("UST probabilities underflow on the support of mu")
    ce_direct = float(-(m[m > 0] * log_ust[m > 0]).sum())
    H = entropy(m)
    return CrossEntropy(ce, ce - H, ce_direct, ce_direct - H)
