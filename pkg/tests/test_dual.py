from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lapdet import graphs
from lapdet.beta import BetaPmf
from lapdet.dual import (ConeTrivialError, cone_membership, duality_gap, entropy, fair_face,
                         fair_trees, good_beta, max_entropy_solve, phi_tilde)
from lapdet.graphs import HOUSE_S
from lapdet.trees import enumerate_spanning_trees, ust_pmf

from conftest import connected_multigraphs

DIAMOND_P = 10 * (2 / 3) ** 0.6


def _family(g):
    return enumerate_spanning_trees(g)


def _conic_max_entropy(fam, beta):
    """Independent route: exponential-cone program via cvxpy."""
    cp = pytest.importorskip("cvxpy")
    mu = cp.Variable(len(fam))
    prob = cp.Problem(cp.Maximize(cp.sum(cp.entr(mu))),
                      [fam.usage.T @ mu == beta.target(fam.rank), cp.sum(mu) == 1, mu >= 0])
    prob.solve(solver="CLARABEL")
    assert prob.status == "optimal"
    return mu.value


def test_diamond_max_entropy(diamond):
    fam = _family(diamond)
    me = max_entropy_solve(fam, BetaPmf.uniform(diamond))
    diag = [0.15 if 4 in t else 0.1 for t in fam.trees]
    assert np.allclose(me.mu_star.mu, diag, atol=1e-12)
    assert me.entropy == pytest.approx(np.log(DIAMOND_P), rel=1e-12)
    assert me.strict and me.face.exact


def test_house_max_entropy(house):
    fam = _family(house)
    me = max_entropy_solve(fam, BetaPmf.uniform(house))
    unfair = {i for i, t in enumerate(fam.trees) if HOUSE_S <= t}
    assert len(unfair) == 2
    assert me.fair_trees == frozenset(range(11)) - unfair
    assert np.allclose(me.mu_star.mu[sorted(me.fair_trees)], 1 / 9, atol=1e-12)
    assert me.dual_value == pytest.approx(9, rel=1e-12)
    assert not me.strict


def test_single_edge_dirac():
    g = graphs.single_edge()
    me = max_entropy_solve(_family(g), BetaPmf.uniform(g))
    assert me.dual_value == 1 and me.fair_trees == {0}


def test_paw_uniform_cone_is_trivial(paw):
    fam = _family(paw)
    me = max_entropy_solve(fam, BetaPmf.uniform(paw))
    assert not me.homogeneous and me.dual_value == 0
    with pytest.raises(ConeTrivialError):
        fair_trees(fam, BetaPmf.uniform(paw))
    assert not cone_membership(fam, BetaPmf.uniform(paw), [1, 1, 1]).member
    assert not cone_membership(fam, BetaPmf.uniform(paw), [5, 0, 2]).member


def test_cone_contains_origin(paw):
    assert cone_membership(_family(paw), BetaPmf.uniform(paw), [0, 0, 0]).member


def test_house_uniform_on_nine_is_in_cone(house):
    fam = _family(house)
    u = [0 if HOUSE_S <= t else 1 for t in fam.trees]
    assert cone_membership(fam, BetaPmf.uniform(house), u).member
    assert not cone_membership(fam, BetaPmf.uniform(house), [1] * 11).member


@pytest.mark.parametrize("name", ["diamond", "house", "triangle"])
def test_per_tree_oracle_matches_support(name):
    g = graphs.NAMED[name]()
    fam = _family(g)
    beta = BetaPmf.uniform(g)
    me = max_entropy_solve(fam, beta)
    assert fair_trees(fam, beta) == me.fair_trees
    assert me.fair_trees == frozenset(np.flatnonzero(me.mu_star.mu > 1e-9))


@pytest.mark.parametrize("name,beta", [
    ("diamond", None), ("house", None), ("paw", ["1/3", "2/9", "2/9", "2/9"]),
])
def test_matches_conic_oracle(name, beta):
    g = graphs.NAMED[name]()
    fam = _family(g)
    b = BetaPmf.uniform(g) if beta is None else BetaPmf.from_weights(beta)
    me = max_entropy_solve(fam, b)
    oracle = _conic_max_entropy(fam, b)
    assert np.allclose(me.mu_star.mu, oracle, atol=1e-4)
    # the conic solution is feasible only to solver tolerance
    assert me.entropy == pytest.approx(entropy(np.clip(oracle, 0, None)), abs=1e-6)


def test_unique_from_different_starts(house):
    fam = _family(house)
    beta = BetaPmf.uniform(house)
    a = max_entropy_solve(fam, beta)
    b = max_entropy_solve(fam, beta, init=np.random.default_rng(0).normal(size=6) * 3)
    assert np.allclose(a.mu_star.mu, b.mu_star.mu, atol=1e-8)


def test_phi_tilde_scan_peaks_at_exp_entropy(diamond):
    mu = max_entropy_solve(_family(diamond), BetaPmf.uniform(diamond)).mu_star.mu
    H = entropy(mu)
    alphas = np.linspace(0.5, 3 * np.exp(H), 4001)
    vals = [phi_tilde(a * mu) for a in alphas]
    assert alphas[int(np.argmax(vals))] == pytest.approx(np.exp(H), abs=alphas[1] - alphas[0])
    # closed form alpha + alpha H - alpha log alpha
    a = 2.5
    assert phi_tilde(a * mu) == pytest.approx(a + a * H - a * np.log(a))


def test_gibbs_bound_on_corpus_sample():
    for g in graphs.corpus(4, 6):
        me = max_entropy_solve(_family(g), BetaPmf.uniform(g))
        if me.homogeneous:
            assert me.entropy <= np.log(len(me.fair_trees)) + 1e-12


def test_u_beta_identity_on_edge_subsets(house):
    # u(Gamma) beta(E') = sum_g |g & E'| u(g) / (|V|-1) for every E'
    fam = _family(house)
    beta = BetaPmf.uniform(house)
    u = 7.0 * max_entropy_solve(fam, beta).mu_star.mu
    rng = np.random.default_rng(1)
    for _ in range(20):
        sub = rng.random(6) < 0.5
        lhs = u.sum() * beta.values[sub].sum()
        rhs = (fam.usage[:, sub].sum(axis=1) @ u) / fam.rank
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_good_beta_paw_exact(paw):
    assert good_beta(paw).exact == (Fraction(1, 3), Fraction(2, 9), Fraction(2, 9), Fraction(2, 9))


def test_good_beta_triangle(triangle):
    assert good_beta(triangle).exact == (Fraction(1, 3),) * 3


def test_good_beta_from_explicit_law(paw):
    fam = _family(paw)
    b = good_beta(paw, [Fraction(1, 3)] * 3, family=fam)
    assert b.exact == good_beta(paw).exact
    with pytest.raises(ValueError):
        good_beta(paw, [1, 0, 0], family=fam)  # some triangle edge unused


@settings(max_examples=30, deadline=None)
@given(connected_multigraphs(max_vertices=5, max_edges=8), st.integers(0, 2**31))
def test_good_beta_makes_ust_law_a_cone_element(g, seed):
    fam = _family(g)
    sigma = np.random.default_rng(seed).uniform(0.2, 5, g.n_edges)
    pmf = ust_pmf(fam, sigma)
    beta = good_beta(g, pmf, family=fam)
    assert cone_membership(fam, beta, pmf.mu).member
    assert not fair_face(fam, beta).trivial


@settings(max_examples=30, deadline=None)
@given(connected_multigraphs(max_vertices=5, max_edges=8))
def test_effres_beta_is_strictly_homogeneous(g):
    fam = _family(g)
    me = max_entropy_solve(fam, good_beta(g))
    assert me.strict


def test_duality_gap_examples(diamond, house, paw):
    from lapdet.solver import solve_min_det
    for g, beta, value in [(diamond, BetaPmf.uniform(diamond), DIAMOND_P),
                           (house, BetaPmf.uniform(house), 9.0),
                           (paw, good_beta(paw), 3.0)]:
        me = max_entropy_solve(_family(g), beta)
        rep = solve_min_det(g, beta)
        assert duality_gap(rep, me) <= 1e-6
        assert me.dual_value == pytest.approx(value, rel=1e-10)


def test_exact_certificate_separates_house(house):
    face = fair_face(_family(house), BetaPmf.uniform(house))
    assert face.exact and len(face.fair) == 9
    assert face.direction is not None and face.point[list(face.fair)].min() > 0
