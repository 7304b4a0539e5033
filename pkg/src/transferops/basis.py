"""Galerkin dictionaries: Ulam box partitions and Gaussian bundles.

The box partition subdivides an axis-aligned domain into half-open cells
(the top face of the domain is closed so every point of the closed box
belongs to exactly one cell).  Cell indices use the fixed convention that
axis 0 varies fastest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomainError, PreconditionError


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by per-axis lower and upper bounds."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise PreconditionError("box bounds must be 1-d and of equal length")
        if not np.all(lo < hi):
            raise PreconditionError("box bounds must satisfy lower < upper on every axis")
        object.__setattr__(self, "lower", tuple(float(v) for v in lo))
        object.__setattr__(self, "upper", tuple(float(v) for v in hi))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def contains(self, X: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of X inside the closed box."""
        X = np.atleast_2d(np.asarray(X, float))
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((X >= lo) & (X <= hi), axis=1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` uniform points from the box."""
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return lo + (hi - lo) * rng.random((size, self.dimension))


class BoxPartition:
    """Disjoint grid of half-open cells covering `domain` exactly.

    Parameters
    ----------
    domain : Box
        The box to subdivide.
    counts : sequence of int
        Number of cells along each axis; the total cell count is their
        product.
    """

    def __init__(self, domain: Box, counts):
        counts = tuple(int(c) for c in counts)
        if len(counts) != domain.dimension:
            raise PreconditionError("one cell count per axis required")
        if any(c < 1 for c in counts):
            raise PreconditionError("cell counts must be positive")
        self.domain = domain
        self.counts = counts
        self.n = int(np.prod(counts))

    def indices(self, X: np.ndarray) -> np.ndarray:
        """Cell index of every row of X; raises if any point is outside."""
        X = np.atleast_2d(np.asarray(X, float))
        inside = self.domain.contains(X)
        if not inside.all():
            bad = np.flatnonzero(~inside)
            raise OutOfDomainError(
                f"{bad.size} point(s) outside the domain, first offending rows: {bad[:5].tolist()}"
            )
        lo = np.asarray(self.domain.lower)
        hi = np.asarray(self.domain.upper)
        counts = np.asarray(self.counts)
        rel = (X - lo) / (hi - lo)
        multi = np.minimum((rel * counts).astype(np.int64), counts - 1)
        return np.ravel_multi_index(tuple(multi.T), self.counts, order="F")

    def index(self, x) -> int:
        return int(self.indices(np.atleast_2d(x))[0])

    def centers(self) -> np.ndarray:
        """Cell centers as an (n, d) array in cell-index order."""
        lo = np.asarray(self.domain.lower)
        hi = np.asarray(self.domain.upper)
        axes = [
            lo[a] + (hi[a] - lo[a]) * (np.arange(c) + 0.5) / c
            for a, c in enumerate(self.counts)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([g.ravel(order="F") for g in grids])

    def to_json(self) -> str:
        return json.dumps(
            {"domain": {"lower": list(self.domain.lower), "upper": list(self.domain.upper)},
             "counts": list(self.counts)},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "BoxPartition":
        obj = json.loads(text)
        return cls(Box(tuple(obj["domain"]["lower"]), tuple(obj["domain"]["upper"])),
                   obj["counts"])

    def __repr__(self):
        return f"BoxPartition(counts={self.counts}, n={self.n})"


def box_index(partition: BoxPartition, x) -> int:
    """Index of the unique half-open cell containing x."""
    return partition.index(x)


class IndicatorBasis:
    """Indicator functions of the cells of a box partition."""

    kind = "indicator"

    def __init__(self, partition: BoxPartition):
        self.partition = partition
        self.n = partition.n

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        idx = self.partition.indices(X)
        out = np.zeros((self.n, X.shape[0]))
        out[idx, np.arange(X.shape[0])] = 1.0
        return out


class GaussianBasis:
    """Radial Gaussian bumps, value 1 at their centers.

    The bandwidth is the Gaussian sigma; there is no default because a
    sensible value depends on the center layout.
    """

    kind = "gaussian"

    def __init__(self, centers: np.ndarray, bandwidth: float):
        centers = np.atleast_2d(np.asarray(centers, float))
        if not bandwidth > 0:
            raise PreconditionError("gaussian bandwidth must be positive")
        self.centers = centers
        self.bandwidth = float(bandwidth)
        self.n = centers.shape[0]

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        d2 = ((self.centers[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        return np.exp(-d2 / (2.0 * self.bandwidth**2))


def evaluate_basis(basis, X: np.ndarray) -> np.ndarray:
    """Evaluate all dictionary functions at the rows of X, as an (n, m) matrix."""
    return basis.evaluate(X)
