import math

import numpy as np
import pytest

from ctilm.exceptions import BetaOutOfRange, MissingLocations, ValidationError
from ctilm.io import read_edge_list, write_edge_list
from ctilm.networks import (
    ContactNetwork,
    NetworkKind,
    connection_probabilities,
    euclidean_distances,
    generate_network,
)
from ctilm.rng import make_rng


def test_euclidean_examples():
    assert euclidean_distances([[0, 0], [3, 4]])[0, 1] == 5.0
    assert euclidean_distances([[1, 1], [4, 5]])[1, 0] == 5.0
    assert euclidean_distances([[2, 2], [2, 2]])[0, 1] == 0.0


def test_powerlaw_probability_example():
    p = connection_probabilities("powerlaw", np.array([[0, 1.0], [1.0, 0]]), beta=1.5, nu=0.5)
    assert p[0, 1] == pytest.approx(1 - math.exp(-0.5), rel=1e-15)
    assert p[0, 1] == pytest.approx(0.393469340287366, rel=1e-12)


def test_probability_vanishes_far_away():
    d = np.array([[0, 1e12], [1e12, 0]])
    assert connection_probabilities("powerlaw", d, beta=1.5, nu=1.0)[0, 1] < 1e-15
    assert connection_probabilities("cauchy", d, beta=1.5)[0, 1] < 1e-20


def test_random_beta_range_and_locations():
    for beta in (0.0, 1.5, -0.1):
        with pytest.raises(BetaOutOfRange):
            generate_network("random", n=5, beta=beta, rng=1)
    with pytest.raises(MissingLocations):
        generate_network("cauchy", beta=1.0, rng=1)


def test_random_density():
    dens = [generate_network("random", n=50, beta=0.08, rng=make_rng(s)).matrix.sum() / (50 * 49) for s in range(200)]
    # pooled density over 200 * 1225 pairs
    se = math.sqrt(0.08 * 0.92 / (200 * 1225))
    assert abs(np.mean(dens) - 0.08) < 4 * se


def test_generated_structure_and_seed():
    loc = make_rng(3).uniform(0, 5, (30, 2))
    a = generate_network("cauchy", loc=loc, beta=1.0, rng=make_rng(9))
    b = generate_network("cauchy", loc=loc, beta=1.0, rng=make_rng(9))
    assert np.array_equal(a.matrix, b.matrix)
    assert np.array_equal(a.matrix, a.matrix.T)
    assert np.all(np.diag(a.matrix) == 0)
    assert set(np.unique(a.matrix)) <= {0.0, 1.0}
    assert a.kind is NetworkKind.BINARY_UNDIRECTED


def test_expected_degree():
    loc = make_rng(5).uniform(0, 6, (12, 2))
    d = euclidean_distances(loc)
    p = connection_probabilities("powerlaw", d, beta=1.2, nu=1.0)
    reps = 2000
    deg = np.zeros(12)
    for r in range(reps):
        deg += generate_network("powerlaw", loc=loc, beta=1.2, nu=1.0, rng=make_rng(r)).matrix.sum(axis=1)
    deg /= reps
    expected = p.sum(axis=1)
    se = np.sqrt((p * (1 - p)).sum(axis=1) / reps)
    assert np.all(np.abs(deg - expected) <= 3 * se + 1e-12)


def test_edge_list_examples(tmp_path):
    empty = ContactNetwork(np.zeros((3, 3)))
    assert write_edge_list(empty) == "from,to,weight\n"
    one = ContactNetwork.from_edges(2, [(0, 1, 1.0)])
    assert write_edge_list(one) == "from,to,weight\n1,2,1\n"
    cycle = ContactNetwork.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    assert len(write_edge_list(cycle).strip().splitlines()) == 4


def test_edge_list_round_trip(tmp_path):
    net = generate_network("random", n=20, beta=0.3, rng=make_rng(2))
    path = tmp_path / "edges.csv"
    text = write_edge_list(net, path)
    back = read_edge_list(path, 20)
    assert np.array_equal(back.matrix, net.matrix)
    assert write_edge_list(back) == text


def test_weighted_directed_round_trip(tmp_path):
    m = np.array([[0, 0.5, 0], [2.0, 0, 0], [0, 1.25, 0]])
    net = ContactNetwork(m, NetworkKind.WEIGHTED_DIRECTED)
    path = tmp_path / "w.csv"
    write_edge_list(net, path)
    back = read_edge_list(path, 3, directed=True)
    assert np.array_equal(back.matrix, m)
    assert back.kind is NetworkKind.WEIGHTED_DIRECTED


def test_invalid_networks():
    with pytest.raises(ValidationError):
        ContactNetwork(np.array([[0, 1], [0, 0]]), NetworkKind.BINARY_UNDIRECTED)
    with pytest.raises(ValidationError):
        ContactNetwork(np.array([[1, 1], [1, 0]]))
    with pytest.raises(ValidationError):
        ContactNetwork(np.array([[0, 2.0], [2.0, 0]]), NetworkKind.BINARY_UNDIRECTED)
