import numpy as np
import pytest
from scipy import stats

from lapdet import graphs
from lapdet.trees import enumerate_spanning_trees, is_spanning_tree, ust_pmf
from lapdet.wilson import edge_frequencies, wilson_sample


def test_samples_are_spanning_trees(house):
    for t in wilson_sample(house, seed=1, n=200):
        assert is_spanning_tree(house, t)


def test_same_seed_same_samples(diamond):
    assert wilson_sample(diamond, seed=5, n=50) == wilson_sample(diamond, seed=5, n=50)
    assert wilson_sample(diamond, seed=5, n=50) != wilson_sample(diamond, seed=6, n=50)


def test_batches_are_independent_of_split(diamond):
    whole = wilson_sample(diamond, seed=11, n=40)
    parts = wilson_sample(diamond, seed=11, n=15) + wilson_sample(diamond, seed=11, n=25, start=15)
    assert whole == parts


@pytest.mark.parametrize("name,sigma", [
    ("house", np.array([3.0, 3.0, 3.0, 0.5, 0.5, 0.5])),
    ("paw", np.array([2.0, 1.0, 1.0, 4.0])),
    ("double-edge", np.array([1.0, 3.0])),
])
def test_weighted_law_chi_square(name, sigma):
    g = graphs.NAMED[name]()
    fam = enumerate_spanning_trees(g)
    expected = ust_pmf(fam, sigma).mu
    n = 20000
    counts = np.zeros(len(fam))
    for t in wilson_sample(g, sigma, seed=2, n=n):
        counts[fam.index_of(t)] += 1
    assert stats.chisquare(counts, expected * n).pvalue > 1e-3


def test_edge_frequencies_track_usage(house):
    sigma = np.array([1.0, 2.0, 3.0, 1.0, 2.0, 3.0])
    fam = enumerate_spanning_trees(house)
    freq = edge_frequencies(house, wilson_sample(house, sigma, seed=4, n=20000))
    eta = ust_pmf(fam, sigma).eta
    se = np.sqrt(eta * (1 - eta) / 20000)
    assert np.all(np.abs(freq - eta) < 4.5 * se)


def test_n_must_be_positive(diamond):
    with pytest.raises(ValueError):
        wilson_sample(diamond, n=0)
