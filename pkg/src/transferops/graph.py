"""Weighted directed graphs and their random-walk structure.

Graphs are immutable after construction and stored as adjacency lists with
a dense-matrix view for desk-scale sizes (n <= 4096); larger graphs error
rather than silently thrash.  Includes invariant densities, detailed
balance checks, invariant-preserving non-reversible perturbations, time
layers, and the supra-Laplacian of a layered graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import operators as ops
from .errors import (
    DanglingVertexError,
    DegenerateDensityError,
    InfeasibleCirculationError,
    NoUniqueInvariantError,
    NumericalError,
    PreconditionError,
)

DENSE_LIMIT = 4096


class Graph:
    """Weighted directed graph with strictly positive edge weights.

    For undirected graphs each edge may be listed once; the reverse edge
    is stored automatically and conflicting duplicate weights are
    rejected.
    """

    def __init__(self, n: int, edges, directed: bool = True):
        if n < 1:
            raise PreconditionError("graph needs at least one vertex")
        self.n = int(n)
        self.directed = bool(directed)
        w = {}
        for src, dst, weight in edges:
            src, dst, weight = int(src), int(dst), float(weight)
            if not (0 <= src < n and 0 <= dst < n):
                raise PreconditionError(f"edge ({src}, {dst}) outside vertex range")
            if not (weight > 0 and np.isfinite(weight)):
                raise PreconditionError(f"edge ({src}, {dst}) has non-positive weight")
            for key in ((src, dst),) if directed else ((src, dst), (dst, src)):
                if key in w and w[key] != weight:
                    raise PreconditionError(f"conflicting duplicate edge {key}")
                w[key] = weight
        self._weights = dict(sorted(w.items()))

    @classmethod
    def from_matrix(cls, W: np.ndarray, directed: bool = True) -> "Graph":
        W = np.asarray(W, float)
        if directed:
            edges = [(i, j, W[i, j]) for i, j in zip(*np.nonzero(W))]
        else:
            if not np.allclose(W, W.T):
                raise PreconditionError("undirected graph needs a symmetric matrix")
            edges = [(i, j, W[i, j]) for i, j in zip(*np.nonzero(np.triu(W)))]
        return cls(W.shape[0], edges, directed=directed)

    @property
    def edges(self):
        """Sorted list of (src, dst, weight); both directions for undirected."""
        return [(i, j, w) for (i, j), w in self._weights.items()]

    def adjacency(self) -> np.ndarray:
        if self.n > DENSE_LIMIT:
            raise PreconditionError(
                f"dense operations support up to {DENSE_LIMIT} vertices, got {self.n}")
        W = np.zeros((self.n, self.n))
        for (i, j), w in self._weights.items():
            W[i, j] = w
        return W

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, edges={len(self._weights)}, {kind})"


@dataclass(frozen=True)
class LayeredGraph:
    """Time-ordered layers over a common vertex set."""

    layers: tuple
    times: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        times = tuple(float(t) for t in self.times)
        if len(layers) < 1:
            raise PreconditionError("at least one layer required")
        if len(times) != len(layers):
            raise PreconditionError("one time label per layer required")
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise PreconditionError("times must be strictly increasing")
        n = layers[0].n
        if any(g.n != n for g in layers):
            raise PreconditionError("all layers must share the vertex set")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "times", times)

    @property
    def n(self) -> int:
        return self.layers[0].n


def out_degree(g: Graph, x: int) -> float:
    """Weighted out-degree sum_y w(x, y)."""
    if not 0 <= x < g.n:
        raise PreconditionError(f"vertex {x} outside range")
    return float(sum(w for (i, _j), w in g._weights.items() if i == x))


def transition_matrix(g: Graph) -> np.ndarray:
    """Row-stochastic matrix S with S[i, j] = w(i, j) / d(i)."""
    W = g.adjacency()
    d = W.sum(axis=1)
    if d.min() <= 0:
        raise DanglingVertexError(
            f"vertex {int(np.argmin(d))} has zero out-degree")
    return W / d[:, None]


def invariant_density(g: Graph, method: str = "degree-formula") -> np.ndarray:
    """Invariant density pi with S^T pi = pi.

    "degree-formula" uses pi = d / sum(d) and requires an undirected graph;
    "eigensolve" extracts the eigenvector of S^T at eigenvalue 1 and
    requires strong connectivity.
    """
    if method == "degree-formula":
        if g.directed:
            raise PreconditionError("the degree formula requires an undirected graph")
        W = g.adjacency()
        d = W.sum(axis=1)
        pi = d / d.sum()
    elif method == "eigensolve":
        S = transition_matrix(g)
        ncomp, _ = connected_components(csr_matrix(S > 0), directed=True,
                                        connection="strong")
        if ncomp != 1:
            raise NoUniqueInvariantError(
                f"graph has {ncomp} strongly connected components")
        vals, vecs = np.linalg.eig(S.T)
        pick = int(np.argmin(np.abs(vals - 1.0)))
        if abs(vals[pick] - 1.0) > 1e-8:
            raise NumericalError("no eigenvalue close to 1 found")
        pi = np.real(vecs[:, pick])
        pi = pi / pi.sum()
    else:
        raise PreconditionError(f"unknown method {method!r}")
    if pi.min() < 0:
        pi = np.maximum(pi, 0.0)
        pi = pi / pi.sum()
    S = transition_matrix(g)
    residual = np.abs(S.T @ pi - pi).max()
    if residual > 1e-10:
        raise NumericalError(f"invariant density residual {residual:.3e} exceeds 1e-10")
    return pi


def is_reversible(g: Graph, pi, tol: float = 1e-12):
    """Detailed balance check; returns (holds, max violation)."""
    pi = ops.density_values(pi, g.n)
    S = transition_matrix(g)
    flux = pi[:, None] * S
    violation = float(np.abs(flux - flux.T).max())
    return violation <= tol, violation


def nonreversible_perturbation(g: Graph, m: np.ndarray) -> Graph:
    """Add a circulation m with zero row/column sums to an undirected graph.

    Out-degrees and hence the invariant density pi = d / Z are unchanged,
    but detailed balance is broken for any nonzero circulation.
    """
    if g.directed:
        raise PreconditionError("perturbation starts from an undirected graph")
    m = np.asarray(m, float)
    if m.shape != (g.n, g.n):
        raise PreconditionError("circulation matrix must be n x n")
    if max(np.abs(m.sum(axis=0)).max(), np.abs(m.sum(axis=1)).max()) > 1e-12:
        raise PreconditionError("circulation must have zero row and column sums")
    W = g.adjacency() + m
    if W.min() < 0:
        i, j = np.unravel_index(np.argmin(W), W.shape)
        raise InfeasibleCirculationError(
            f"perturbed weight at ({i}, {j}) would be {W[i, j]:.3e} < 0")
    return Graph.from_matrix(W, directed=True)


def layered_forward_backward(lg: LayeredGraph, mu0) -> ops.OperatorBundle:
    """Forward-backward operator of a layered graph over the full interval.

    K_total is the time-ordered product of the per-layer transition
    matrices and T_total the reweighting of its transpose against mu0 and
    the propagated final density.
    """
    mu = ops.density_values(mu0, lg.n)
    K_total = None
    current = mu
    for layer in lg.layers:
        S = transition_matrix(layer)
        K_total = S if K_total is None else K_total @ S
        current = S.T @ current
        if current.min() <= 0:
            bad = int(np.argmin(current))
            raise DegenerateDensityError(
                f"propagated density vanishes at vertex {bad}")
    T_total = (K_total.T * mu[None, :]) / current[:, None]
    F = K_total @ T_total
    B = T_total @ K_total
    return ops.OperatorBundle(K=K_total, T=T_total, F=F, B=B, P=K_total.T.copy(),
                              mu=mu, nu=current, provenance="exact:layered")


def supra_laplacian(lg: LayeredGraph, omega: float, laplacian: str = "random-walk") -> np.ndarray:
    """Laplacian of the flattened layered graph, an (n L) x (n L) matrix.

    Consecutive layers are coupled both ways by identity blocks of weight
    omega, degrees are recomputed on the coupled graph, and the chosen
    Laplacian (random-walk or forward-backward with uniform weight) of the
    resulting chain is returned.  With omega = 0 the blocks decouple and
    the spectrum is the union of the per-layer spectra.
    """
    if omega < 0:
        raise PreconditionError("inter-layer coupling omega must be nonnegative")
    n, L = lg.n, len(lg.layers)
    A = np.zeros((n * L, n * L))
    for ell, layer in enumerate(lg.layers):
        A[ell * n:(ell + 1) * n, ell * n:(ell + 1) * n] = layer.adjacency()
    if omega > 0:
        eye = omega * np.eye(n)
        for ell in range(L - 1):
            A[ell * n:(ell + 1) * n, (ell + 1) * n:(ell + 2) * n] += eye
            A[(ell + 1) * n:(ell + 2) * n, ell * n:(ell + 1) * n] += eye
    d = A.sum(axis=1)
    if d.min() <= 0:
        raise DanglingVertexError(
            f"supra-vertex {int(np.argmin(d))} has zero out-degree")
    S = A / d[:, None]
    if laplacian == "random-walk":
        return np.eye(n * L) - S
    if laplacian == "forward-backward":
        bundle = ops.operator_bundle(S, ops.Density.uniform(n * L))
        return np.eye(n * L) - bundle.F
    raise PreconditionError(f"unknown laplacian kind {laplacian!r}")


# ---------------------------------------------------------------------------
# edge-list files


def write_edge_list(g: Graph, path, comment: str | None = None) -> None:
    """Write `src dst weight` lines; undirected graphs list each edge once."""
    lines = []
    if comment:
        for row in comment.splitlines():
            lines.append(f"# {row}")
    lines.append(f"# vertices: {g.n}")
    for (i, j), w in g._weights.items():
        if not g.directed and i > j:
            continue
        lines.append(f"{i} {j} {w!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_edge_list(path, directed: bool = True) -> Graph:
    """Read an edge-list file; undirected loading symmetrizes the edges."""
    edges = []
    n = 0
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            if line.startswith("# vertices:"):
                n = max(n, int(line.split(":")[1]))
            continue
        if not line.strip():
            continue
        src, dst, w = line.split()
        edges.append((int(src), int(dst), float(w)))
        n = max(n, int(src) + 1, int(dst) + 1)
    return Graph(n, edges, directed=directed)


def write_layered_edge_list(lg: LayeredGraph, path, comment: str | None = None) -> None:
    """Write `layer src dst weight` lines for every layer."""
    lines = []
    if comment:
        for row in comment.splitlines():
            lines.append(f"# {row}")
    lines.append(f"# vertices: {lg.n}")
    lines.append(f"# times: {' '.join(repr(t) for t in lg.times)}")
    for ell, g in enumerate(lg.layers):
        for (i, j), w in g._weights.items():
            if not g.directed and i > j:
                continue
            lines.append(f"{ell} {i} {j} {w!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_layered_edge_list(path, directed: bool = True) -> LayeredGraph:
    """Read a layered edge-list written by :func:`write_layered_edge_list`."""
    per_layer: dict[int, list] = {}
    n = 0
    times = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            if line.startswith("# vertices:"):
                n = max(n, int(line.split(":")[1]))
            elif line.startswith("# times:"):
                times = [float(v) for v in line.split(":")[1].split()]
            continue
        if not line.strip():
            continue
        ell, src, dst, w = line.split()
        per_layer.setdefault(int(ell), []).append((int(src), int(dst), float(w)))
        n = max(n, int(src) + 1, int(dst) + 1)
    labels = sorted(per_layer)
    if times is None:
        times = [float(ell) for ell in labels]
    layers = [Graph(n, per_layer[ell], directed=directed) for ell in labels]
    return LayeredGraph(tuple(layers), tuple(times))
