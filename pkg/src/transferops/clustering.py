"""From dominant eigenvectors to partitions.

k-means turns spectral embeddings into hard partitions; the sparse
eigenbasis rotation extracts soft memberships that may leave transition
states unassigned; the metastability diagnostics score a hard partition
against a chain and bound the score through the dominant spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._streams import stream
from .errors import DegenerateInputError, EmptyBlockError, PreconditionError

UNASSIGNED = -1


@dataclass(frozen=True)
class Partition:
    """Cluster labels in {0..m-1}, or -1 for unassigned states."""

    labels: np.ndarray
    m: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise PreconditionError("labels must be a vector")
        if labels.max(initial=UNASSIGNED) >= self.m or labels.min(initial=0) < UNASSIGNED:
            raise PreconditionError("labels must lie in {-1, 0, ..., m-1}")
        object.__setattr__(self, "labels", labels)

    @property
    def is_hard(self) -> bool:
        return bool(np.all(self.labels != UNASSIGNED))

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels != UNASSIGNED], minlength=self.m)

    def blocks(self):
        return [np.flatnonzero(self.labels == i) for i in range(self.m)]


def save_partition(part: Partition, path) -> None:
    """Write `vertex,label` rows, -1 marking unassigned vertices."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("vertex,label\n")
        for v, lab in enumerate(part.labels):
            f.write(f"{v},{lab}\n")


def load_partition(path) -> Partition:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    labels = rows[:, 1]
    m = int(labels.max()) + 1
    return Partition(labels=labels, m=m)


# ---------------------------------------------------------------------------
# k-means


def _kmeanspp_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        probs = d2 / d2.sum()
        centers[j] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    """Lloyd iterations; returns (labels, centers, distortion, history)."""
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        distortion = float(d2[np.arange(points.shape[0]), labels].sum())
        history.append(distortion)
        new_centers = centers.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centers[j] = points[members].mean(axis=0)
            else:
                # deterministically reseed an empty cluster on the point
                # farthest from its current center
                far = int(np.argmax(d2[np.arange(points.shape[0]), labels]))
                new_centers[j] = points[far]
        shift = float(np.abs(new_centers - centers).max())
        centers = new_centers
        if shift <= tol:
            break
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    distortion = float(d2[np.arange(points.shape[0]), labels].sum())
    history.append(distortion)
    return labels, centers, distortion, history


def kmeans(points: np.ndarray, k: int, seed: int, restarts: int = 10,
           max_iter: int = 300, tol: float = 1e-9) -> Partition:
    """k-means with k-means++ seeding, best of `restarts` runs.

    Restart r draws its centers from the stream keyed (seed, r) and the
    winner is selected by (distortion, restart index), so the outcome does
    not depend on scheduling.  Deterministic given the seed.
    """
    points = np.atleast_2d(np.asarray(points, float))
    n = points.shape[0]
    if not 1 <= k <= n:
        raise PreconditionError(f"need 1 <= k <= {n}, got {k}")
    if np.unique(points, axis=0).shape[0] < k:
        raise DegenerateInputError("fewer distinct points than clusters")
    best = None
    for r in range(restarts):
        rng = stream(seed, r)
        centers = _kmeanspp_centers(points, k, rng)
        labels, _, distortion, _ = _lloyd(points, centers, max_iter, tol)
        key = (distortion, r)
        if best is None or key < best[0]:
            best = (key, labels)
    return Partition(labels=best[1], m=k)


# ---------------------------------------------------------------------------
# sparse eigenbasis rotation


def seba(V: np.ndarray, weight=None, tol: float = 1e-12, max_iter: int = 5000,
         margin: float = 1e-6, seed: int = 0):
    """Rotate orthonormal eigenvectors into sparse nonnegative memberships.

    Parameters
    ----------
    V : (n, r) array
        Columns orthonormal under `weight` within 1e-6; None means the
        counting measure, i.e. plain Euclidean orthonormality.
    tol, max_iter : float, int
        Stop when the rotation update drops below `tol` in Frobenius norm.
    margin : float
        A state is assigned to its argmax membership only if that
        membership reaches max(0.5, second-largest + margin); everything
        else stays unassigned.
    seed : int
        Stream used solely to perturb exactly-constant input columns,
        whose sparse rotation is otherwise sign-degenerate.

    Returns (memberships, Partition): an (n, r) matrix with entrywise
    nonnegative columns scaled to maximum 1, and the thresholded partition.
    """
    V = np.atleast_2d(np.asarray(V, float))
    n, r = V.shape
    w = np.ones(n) if weight is None else np.asarray(weight, float)
    if w.shape != (n,) or not np.all(w > 0):
        raise PreconditionError("weight must be a strictly positive length-n vector")
    gram = (V * w[:, None]).T @ V
    if np.abs(gram - np.eye(r)).max() > 1e-6:
        raise PreconditionError("columns must be orthonormal under the supplied weight")

    # the rotation itself works on a Euclidean-orthonormalized copy, which
    # keeps memberships flat across states of unequal weight
    W = V.copy()
    rng = stream(seed, 0)
    for j in range(r):
        if W[:, j].max() - W[:, j].min() < 1e-14:
            W[:, j] = W[:, j] + (rng.random(n) - 0.5) * 1e-12
    W, _ = np.linalg.qr(W)
    thresh = 0.99 / np.sqrt(n)
    R = np.eye(r)
    S = np.zeros_like(W)
    for _ in range(max_iter):
        Y = W @ R.T
        S = np.sign(Y) * np.maximum(np.abs(Y) - thresh, 0.0)
        norms = np.linalg.norm(S, axis=0)
        norms[norms == 0] = 1.0
        S = S / norms
        U, _, Vt = np.linalg.svd(S.T @ W)
        R_new = U @ Vt
        if np.linalg.norm(R_new - R) <= tol:
            R = R_new
            break
        R = R_new
    Y = W @ R.T
    S = np.sign(Y) * np.maximum(np.abs(Y) - thresh, 0.0)
    norms = np.linalg.norm(S, axis=0)
    norms[norms == 0] = 1.0
    S = S / norms

    # memberships are nonnegative, column max 1
    S = S * np.where(S.sum(axis=0) >= 0, 1.0, -1.0)[None, :]
    S = np.maximum(S, 0.0)
    peaks = S.max(axis=0)
    peaks[peaks == 0] = 1.0
    S = S / peaks[None, :]
    order = np.lexsort((np.arange(r), -S.min(axis=0)))
    S = S[:, order]

    top = np.argmax(S, axis=1)
    top_val = S[np.arange(n), top]
    if r > 1:
        masked = S.copy()
        masked[np.arange(n), top] = -np.inf
        second = masked.max(axis=1)
    else:
        second = np.full(n, -np.inf)
    assigned = top_val >= np.maximum(0.5, second + margin)
    labels = np.where(assigned, top, UNASSIGNED)
    return S, Partition(labels=labels, m=r)


# ---------------------------------------------------------------------------
# metastability diagnostics


def metastability_score(S: np.ndarray, mu, part: Partition) -> float:
    """Sum of residence probabilities of the partition blocks.

    D = sum_i P_mu[X_tau in B_i | X_0 in B_i], between 0 and the block
    count m, with D = m exactly for identity dynamics.
    """
    S = np.asarray(S, float)
    n = S.shape[0]
    mu_v = _positive_vector(mu, n)
    if not part.is_hard:
        raise PreconditionError("metastability score requires a hard partition")
    D = 0.0
    for i, block in enumerate(part.blocks()):
        if block.size == 0:
            raise EmptyBlockError(f"block {i} is empty")
        mass = mu_v[block].sum()
        stay = (mu_v[block, None] * S[np.ix_(block, block)]).sum()
        D += stay / mass
    return float(D)


def projection_mass(u: np.ndarray, part: Partition, mu) -> float:
    """Weighted mass of the blockwise average of u.

    u must satisfy <u, u>_mu = 1; the result is the squared mu-norm of the
    projection of u onto the span of the block indicators, in [0, 1].
    """
    u = np.asarray(u, float)
    n = u.shape[0]
    mu_v = _positive_vector(mu, n)
    norm = float(u @ (mu_v * u))
    if abs(norm - 1.0) > 1e-6:
        raise PreconditionError(f"u must be mu-normalized, got <u,u>_mu = {norm:.6f}")
    if not part.is_hard:
        raise PreconditionError("projection mass requires a hard partition")
    delta = 0.0
    for i, block in enumerate(part.blocks()):
        mass = mu_v[block].sum()
        if mass <= 0 or block.size == 0:
            raise EmptyBlockError(f"block {i} has zero mass")
        mean = (mu_v[block] * u[block]).sum() / mass
        delta += mass * mean**2
    return float(delta)


def metastability_bounds(eigenvalues, deltas, score: float):
    """Bounds on the metastability score from the dominant spectrum.

    eigenvalues are lambda_1 >= lambda_2 >= ... with lambda_1 = 1, at least
    m + 1 of them (ideally the full spectrum); deltas are the projection
    masses delta_2..delta_m of the dominant eigenvectors, which fixes m.
    Returns (lower, upper, holds) with

        lower = 1 + sum_j delta_j lambda_j + a * sum_j (1 - delta_j)
        upper = 1 + sum_{j=2..m} lambda_j

    where a = min of the supplied residual eigenvalues lambda_{m+1}...
    Both follow from the exact identity D = 1 + sum_{k>=2} lambda_k delta_k
    with sum_k delta_k = m: the residual mass sum_j (1 - delta_j) sits on
    eigenvalues between a and lambda_{m+1}.  The lower bound is therefore
    only guaranteed when the full spectrum is supplied; truncating at
    lambda_{m+1} treats it as the floor of the residual spectrum.
    """
    lam = np.asarray(eigenvalues, float)
    dl = np.asarray(deltas, float)
    m = dl.size + 1
    if lam.ndim != 1 or lam.size < m + 1:
        raise PreconditionError("need at least m+1 eigenvalues for m-1 projection masses")
    if np.any(np.diff(lam) > 1e-12):
        raise PreconditionError("eigenvalues must be sorted in descending order")
    if abs(lam[0] - 1.0) > 1e-8:
        raise PreconditionError("leading eigenvalue must be 1 within 1e-8")
    floor = float(lam[m:].min())
    lower = 1.0 + float(dl @ lam[1:m]) + floor * float((1.0 - dl).sum())
    upper = 1.0 + float(lam[1:m].sum())
    holds = bool(lower - 1e-8 <= score <= upper + 1e-8)
    return lower, upper, holds


def _positive_vector(mu, n: int) -> np.ndarray:
    v = getattr(mu, "values", mu)
    v = np.asarray(v, float)
    if v.shape != (n,) or not np.all(v > 0):
        raise PreconditionError("density must be a strictly positive length-n vector")
    return v
