"""Data-driven Galerkin estimation of transfer operators.

Covariance matrices of basis evaluations yield the estimated operator
matrices K = C_xx^-1 C_xy and T = C_yy^-1 C_yx (plus F = K T, B = T K).
The indicator special case counts box transitions directly, stays exactly
row-stochastic over the retained cells, and exports its counts as the
weighted adjacency matrix of an induced graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import BoxPartition, evaluate_basis
from .dynamics import PairDataset
from .errors import EmptyDatasetError, IllConditionedBasisError, PreconditionError
from .graph import Graph
from .operators import OperatorBundle


@dataclass(frozen=True)
class CovarianceSet:
    """The four (1/m)-scaled covariance matrices of paired basis data."""

    C_xx: np.ndarray
    C_xy: np.ndarray
    C_yx: np.ndarray
    C_yy: np.ndarray
    m: int


def covariances(phi_x: np.ndarray, phi_y: np.ndarray) -> CovarianceSet:
    """Covariances of basis evaluations Phi_x, Phi_y of shape (n, m)."""
    phi_x = np.asarray(phi_x, float)
    phi_y = np.asarray(phi_y, float)
    if phi_x.shape != phi_y.shape or phi_x.ndim != 2:
        raise PreconditionError("Phi_x and Phi_y must be (n, m) matrices of equal shape")
    m = phi_x.shape[1]
    if m < 1:
        raise PreconditionError("at least one sample required")
    C_xy = phi_x @ phi_y.T / m
    return CovarianceSet(C_xx=phi_x @ phi_x.T / m, C_xy=C_xy,
                         C_yx=C_xy.T.copy(), C_yy=phi_y @ phi_y.T / m, m=m)


def edmd(cov: CovarianceSet, ridge: float = 1e-10, indicator: bool = False,
         provenance: str = "estimated:edmd") -> OperatorBundle:
    """Estimated operator bundle from covariance matrices.

    Solves (C_xx + ridge I) K = C_xy and (C_yy + ridge I) T = C_yx.  For
    indicator bases the empirical cell masses diag(C_xx), diag(C_yy) are
    stored as mu, nu; they are left unset for smooth dictionaries.
    """
    if ridge < 0:
        raise PreconditionError("ridge must be nonnegative")
    n = cov.C_xx.shape[0]
    reg = ridge * np.eye(n)
    try:
        K = np.linalg.solve(cov.C_xx + reg, cov.C_xy)
        T = np.linalg.solve(cov.C_yy + reg, cov.C_yx)
    except np.linalg.LinAlgError as exc:
        null = _null_directions(cov.C_xx + reg)
        raise IllConditionedBasisError(
            f"regularized Gram matrix is singular; near-null directions "
            f"(dominant dictionary indices): {null}") from exc
    mu = np.diag(cov.C_xx).copy() if indicator else None
    nu = np.diag(cov.C_yy).copy() if indicator else None
    return OperatorBundle(K=K, T=T, F=K @ T, B=T @ K, P=K.T.copy(),
                          mu=mu, nu=nu, provenance=provenance)


def _null_directions(G: np.ndarray, rel_tol: float = 1e-12):
    _, s, vt = np.linalg.svd(G)
    null = s <= rel_tol * s[0]
    return [int(np.argmax(np.abs(vt[i]))) for i in np.flatnonzero(null)]


@dataclass(frozen=True)
class UlamResult:
    """Ulam estimate: operator bundle over retained cells plus raw counts.

    counts is the full n x n transition-count matrix (the induced graph's
    weighted adjacency); retained maps bundle indices to original cell
    indices.  Cells never visited as a start are dropped together with
    their columns, and the handful of pairs ending in a dropped cell are
    discarded (dropped_pairs) so the bundle stays exactly row-stochastic.
    """

    bundle: OperatorBundle
    counts: np.ndarray
    retained: np.ndarray
    dropped_pairs: int

    def induced_graph(self) -> Graph:
        """Induced graph on the retained cells, weighted by raw counts."""
        W = self.counts[np.ix_(self.retained, self.retained)]
        directed = not np.array_equal(W, W.T)
        return Graph.from_matrix(W, directed=directed)


def ulam(data: PairDataset, part: BoxPartition, symmetrize: bool = False,
         min_count: int = 1) -> UlamResult:
    """Ulam's method: transition counts between the cells of a partition.

    Parameters
    ----------
    data : PairDataset
    part : BoxPartition
    symmetrize : bool
        Average the counts with their transpose before normalizing.  For a
        reversible process the counts are symmetric in expectation; this
        enforces the reversibility exactly at finite sample size, which
        makes the estimated chain self-adjoint under its empirical mass.
    min_count : int
        Cells with fewer start counts are dropped like empty ones.  The
        default keeps every visited cell; larger values trim barely
        sampled fringe cells whose rows are statistically meaningless.
    """
    if data.m == 0:
        raise EmptyDatasetError("dataset contains no pairs")
    ix = part.indices(data.xs)
    iy = part.indices(data.ys)
    n = part.n
    counts = np.bincount(ix * n + iy, minlength=n * n).reshape(n, n).astype(float)
    if symmetrize:
        counts = (counts + counts.T) / 2.0
    total = counts.sum()

    def rows_ok(C):
        sums = C.sum(axis=1)
        return sums >= min_count if min_count > 1 else sums > 0

    retained = np.flatnonzero(rows_ok(counts))
    # Cells never started (or below min_count) are dropped with their
    # columns; cells never re-entered must go too, else the image density
    # nu would vanish.
    while retained.size:
        C = counts[np.ix_(retained, retained)]
        alive = rows_ok(C) & (C.sum(axis=0) > 0)
        if alive.all():
            break
        retained = retained[alive]
    if retained.size == 0:
        raise EmptyDatasetError("no cells with both incoming and outgoing transitions")
    dropped = int(round(total - C.sum()))
    M = C.sum()
    row = C.sum(axis=1)
    col = C.sum(axis=0)
    mu = row / M
    nu = col / M
    K = C / row[:, None]
    T = C.T / col[:, None]
    bundle = OperatorBundle(K=K, T=T, F=K @ T, B=T @ K, P=K.T.copy(), mu=mu, nu=nu,
                            provenance=f"estimated:ulam seed={data.seed} m={data.m}")
    return UlamResult(bundle=bundle, counts=counts, retained=retained,
                      dropped_pairs=dropped)


def galerkin_eigenfunction(xi: np.ndarray, basis, x) -> float:
    """Evaluate the Galerkin eigenfunction xi^T phi at the point x."""
    xi = np.asarray(xi, float)
    phi = evaluate_basis(basis, np.atleast_2d(np.asarray(x, float)))
    if xi.shape[0] != phi.shape[0]:
        raise PreconditionError("coefficient length must match the dictionary size")
    return float(xi @ phi[:, 0])


# ---------------------------------------------------------------------------
# bundle export


_MATRICES = ("K", "T", "F", "B", "P")


def save_bundle(bundle: OperatorBundle, outdir) -> None:
    """Write a JSON manifest plus one dense CSV per operator matrix."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "n": bundle.n,
        "provenance": bundle.provenance,
        "matrices": {name: f"{name}.csv" for name in _MATRICES},
        "densities": "densities.csv" if bundle.mu is not None else None,
    }
    for name in _MATRICES:
        _write_matrix(outdir / f"{name}.csv", getattr(bundle, name))
    if bundle.mu is not None:
        _write_matrix(outdir / "densities.csv", np.column_stack([bundle.mu, bundle.nu]))
    (outdir / "bundle.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")


def load_bundle(outdir) -> OperatorBundle:
    outdir = Path(outdir)
    manifest = json.loads((outdir / "bundle.json").read_text(encoding="utf-8"))
    mats = {name: _read_matrix(outdir / manifest["matrices"][name]) for name in _MATRICES}
    mu = nu = None
    if manifest.get("densities"):
        dens = _read_matrix(outdir / manifest["densities"])
        mu, nu = dens[:, 0], dens[:, 1]
    return OperatorBundle(**mats, mu=mu, nu=nu, provenance=manifest["provenance"])


def _write_matrix(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, float))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in A:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def _read_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)
