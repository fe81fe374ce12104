import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coupled_regulation.errors import ValidationError
from coupled_regulation.network import ObserverGraph, gamma, leader_reachable, observer_rhs
from coupled_regulation.scenario import ring_adjacency

RING_A = np.array([[0.0, -0.5], [0.0, 0.0]])


def reachable_oracle(alpha, pinning):
    g = nx.DiGraph()
    g.add_nodes_from(range(len(pinning) + 1))
    leader = len(pinning)
    for i, gi in enumerate(pinning):
        if gi > 0:
            g.add_edge(leader, i)
    for i, j in zip(*np.nonzero(alpha)):
        g.add_edge(int(j), int(i))  # j's state flows into i
    return len(nx.descendants(g, leader)) == len(pinning)


def test_ring_pinned_once():
    assert leader_reachable(ObserverGraph(ring_adjacency(), [1, 0, 0, 0, 0]))


def test_isolated_agent():
    assert not leader_reachable(ObserverGraph(np.zeros((2, 2)), [1, 0]))


def test_all_pinned():
    assert leader_reachable(ObserverGraph(np.zeros((3, 3)), [1, 1, 1]))


def test_direction_matters():
    # agent 1 listens to agent 0; agent 0 pinned -> reachable
    assert leader_reachable(ObserverGraph([[0, 0], [1, 0]], [1, 0]))
    # agent 0 listens to agent 1 only; agent 1 never hears anyone
    assert not leader_reachable(ObserverGraph([[0, 1], [0, 0]], [1, 0]))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_reachability_matches_bfs_oracle(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 9))
    alpha = rng.uniform(0.1, 1, (N, N)) * (rng.uniform(size=(N, N)) < 0.25)
    np.fill_diagonal(alpha, 0)
    pinning = (rng.uniform(size=N) < 0.3).astype(float)
    pinning[rng.integers(N)] = 1.0
    assert leader_reachable(ObserverGraph(alpha, pinning)) == reachable_oracle(alpha, pinning)


@pytest.mark.parametrize("alpha, pinning, mu", [
    ([[0, -1], [0, 0]], [1, 0], 1.0),
    ([[1, 0], [0, 0]], [1, 0], 1.0),
    ([[0, 0], [0, 0]], [0, 0], 1.0),
    ([[0, 0], [0, 0]], [1, -1], 1.0),
    ([[0, 0], [0, 0]], [1, 0], 0.0),
])
def test_graph_rejects(alpha, pinning, mu):
    with pytest.raises(ValidationError):
        ObserverGraph(alpha, pinning, mu)


def test_gamma_at_consensus():
    g = ObserverGraph(ring_adjacency(), [1, 0, 0, 0, 0], 10.0)
    x0 = np.array([0.3, -1.2])
    np.testing.assert_array_equal(gamma(g, np.tile(x0, (5, 1)), x0), 0.0)


def test_gamma_two_agents():
    g = ObserverGraph([[0, 1], [0, 0]], [1, 0], 1.0)
    x0 = np.array([0.5, 2.0])
    e = np.array([[1.0, -2.0], [3.0, 0.25]])
    out = gamma(g, x0 + e, x0)
    np.testing.assert_allclose(out[0], e[1] - 2 * e[0], atol=1e-15)
    np.testing.assert_array_equal(out[1], 0.0)


def test_gamma_observer_form():
    # direct evaluation of mu * (sum_j alpha_ij (xhat_j - xhat_i) + g_i (x0 - xhat_i))
    rng = np.random.default_rng(3)
    alpha = rng.uniform(size=(4, 4))
    np.fill_diagonal(alpha, 0)
    pin = np.array([0.5, 0, 2.0, 0])
    g = ObserverGraph(alpha, pin, 3.0)
    xhat = rng.normal(size=(4, 3))
    x0 = rng.normal(size=3)
    want = np.array([3.0 * (sum(alpha[i, j] * (xhat[j] - xhat[i]) for j in range(4))
                            + pin[i] * (x0 - xhat[i])) for i in range(4)])
    np.testing.assert_allclose(gamma(g, xhat, x0), want, atol=1e-13)


def test_gamma_mu_doubles():
    x0 = np.zeros(2)
    xhat = np.arange(10.0).reshape(5, 2)
    g1 = ObserverGraph(ring_adjacency(), [1, 0, 0, 0, 0], 1.5)
    g2 = ObserverGraph(ring_adjacency(), [1, 0, 0, 0, 0], 3.0)
    np.testing.assert_array_equal(gamma(g2, xhat, x0), 2 * gamma(g1, xhat, x0))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-10, 10))
def test_gamma_linear_and_shift_invariant(seed, c):
    rng = np.random.default_rng(seed)
    N, n = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    alpha = rng.uniform(size=(N, N))
    np.fill_diagonal(alpha, 0)
    pin = rng.uniform(size=N)
    g = ObserverGraph(alpha, pin, rng.uniform(0.1, 20))
    x0 = rng.normal(size=n)
    e = rng.normal(size=(N, n))
    base = gamma(g, x0 + e, x0)
    np.testing.assert_allclose(gamma(g, x0 + c * e, x0), c * base, atol=1e-10 * (1 + abs(c)) * (1 + np.abs(base).max()))
    shift = rng.normal(size=n)
    np.testing.assert_allclose(gamma(g, x0 + e + shift, x0 + shift), base, atol=1e-10 * (1 + np.abs(base).max() + np.abs(shift).max()))


def test_gamma_dimension_mismatch():
    g = ObserverGraph(ring_adjacency(), [1, 0, 0, 0, 0])
    with pytest.raises(ValidationError):
        gamma(g, np.zeros((4, 2)), np.zeros(2))


def test_observer_rhs_equilibrium():
    g = ObserverGraph(ring_adjacency(), [1, 0, 0, 0, 0])
    x0 = np.array([1.0, 0.0])  # A x0 = 0
    np.testing.assert_array_equal(observer_rhs(RING_A, g, np.tile(x0, (5, 1)), x0), 0.0)


def test_observer_rhs_ring_plant():
    g = ObserverGraph(np.zeros((1, 1)), [1.0])
    x0 = np.array([0.0, 1.0])
    np.testing.assert_allclose(observer_rhs(RING_A, g, [[0.0, 1.0]], x0), [[-0.5, 0.0]])


def test_observer_rhs_rejects_wrong_a():
    g = ObserverGraph(np.zeros((1, 1)), [1.0])
    with pytest.raises(ValidationError):
        observer_rhs(np.eye(3), g, [[0.0, 1.0]], [0.0, 1.0])
