import numpy as np
import pytest

from transferops import Graph, transition_matrix


@pytest.fixture
def triangle():
    return Graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], directed=False)


@pytest.fixture
def path3():
    return Graph(3, [(0, 1, 1.0), (1, 2, 1.0)], directed=False)


@pytest.fixture
def directed_cycle3():
    return Graph(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], directed=True)


@pytest.fixture
def barbell():
    """Two unit triangles joined by one weak bridge edge."""
    edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0),
             (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0),
             (2, 3, 0.01)]
    return Graph(6, edges, directed=False)


@pytest.fixture
def two_triangles():
    edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0),
             (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)]
    return Graph(6, edges, directed=False)


def random_undirected_graph(rng, n):
    """Connected undirected graph: random spanning tree plus extra edges."""
    edges = {}
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = int(order[i]), int(order[rng.integers(i)])
        edges[(min(a, b), max(a, b))] = rng.uniform(0.1, 2.0)
    for _ in range(n):
        a, b = rng.integers(n, size=2)
        if a != b:
            edges[(min(a, b), max(a, b))] = rng.uniform(0.1, 2.0)
    return Graph(n, [(a, b, w) for (a, b), w in edges.items()], directed=False)


def random_directed_graph(rng, n):
    """Directed graph with positive out- and in-degrees everywhere."""
    W = rng.uniform(0.1, 2.0, (n, n)) * (rng.random((n, n)) < 0.3)
    for i in range(n):
        W[i, (i + 1) % n] = rng.uniform(0.5, 1.5)
    np.fill_diagonal(W, np.where(np.diag(W) > 0, np.diag(W), 0.0))
    return Graph.from_matrix(W, directed=True)


def reversible_chain(rng, n):
    """(S, pi) of the random walk on a random connected undirected graph."""
    g = random_undirected_graph(rng, n)
    W = g.adjacency()
    d = W.sum(axis=1)
    return W / d[:, None], d / d.sum()
