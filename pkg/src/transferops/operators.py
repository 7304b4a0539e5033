"""Exact transfer-operator matrices on finite state spaces.

Given a row-stochastic matrix S and a strictly positive density mu, the
five operator matrices are

    P = S^T,  K = S,  T = D_nu^-1 S^T D_mu,  F = K T,  B = T K,

with nu = S^T mu the image density.  F is self-adjoint and positive
semi-definite in the mu-weighted inner product, B in the nu-weighted one,
and both have spectrum in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ImageDensityDegenerateError, NumericalError, PreconditionError

_DENSITY_LABELS = ("uniform", "invariant", "custom")


@dataclass(frozen=True)
class Density:
    """A strictly positive probability vector on n states."""

    values: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.ndim != 1:
            raise PreconditionError("density must be a vector")
        if not np.all(v > 0):
            raise PreconditionError("density must be strictly positive")
        if abs(v.sum() - 1.0) > 1e-12:
            raise PreconditionError("density must sum to 1 within 1e-12")
        if self.label not in _DENSITY_LABELS:
            raise PreconditionError(f"label must be one of {_DENSITY_LABELS}")
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, n: int) -> "Density":
        return cls(np.full(n, 1.0 / n), label="uniform")


def density_values(mu, n: int) -> np.ndarray:
    """Coerce a Density or plain vector to a validated length-n array."""
    v = mu.values if isinstance(mu, Density) else np.asarray(mu, float)
    if v.shape != (n,):
        raise PreconditionError(f"density has length {v.shape}, expected ({n},)")
    if not np.all(v > 0):
        raise PreconditionError("density must be strictly positive")
    return v


@dataclass(frozen=True)
class OperatorBundle:
    """The five operator matrices together with their reference densities.

    mu and nu are set for exact graph bundles and for indicator-basis
    estimates (empirical cell masses); they are None for smooth bases.
    """

    K: np.ndarray
    T: np.ndarray
    F: np.ndarray
    B: np.ndarray
    P: np.ndarray
    mu: np.ndarray | None = None
    nu: np.ndarray | None = None
    provenance: str = "exact"

    @property
    def n(self) -> int:
        return self.K.shape[0]


def _check_row_stochastic(S: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    S = np.asarray(S, float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise PreconditionError("transition matrix must be square")
    if S.min() < -tol:
        raise PreconditionError("transition matrix has negative entries")
    dev = np.abs(S.sum(axis=1) - 1.0).max()
    if dev > tol:
        raise PreconditionError(f"rows must sum to 1, max deviation {dev:.3e}")
    return S


def operator_bundle(S: np.ndarray, mu) -> OperatorBundle:
    """Build all five operator matrices for the chain S and density mu."""
    S = _check_row_stochastic(S)
    n = S.shape[0]
    mu_v = density_values(mu, n)
    nu_v = S.T @ mu_v
    if nu_v.min() <= 0:
        bad = int(np.argmin(nu_v))
        raise ImageDensityDegenerateError(
            f"image density vanishes at state {bad}; operators are undefined")
    T = (S.T * mu_v[None, :]) / nu_v[:, None]
    F = S @ T
    B = T @ S
    return OperatorBundle(K=S, T=T, F=F, B=B, P=S.T.copy(),
                          mu=mu_v, nu=nu_v, provenance="exact")


def random_walk_laplacian(S: np.ndarray) -> np.ndarray:
    """I - S; its negative is a valid rate matrix."""
    S = _check_row_stochastic(S)
    return np.eye(S.shape[0]) - S


def forward_backward_laplacian(bundle: OperatorBundle) -> np.ndarray:
    """I - F; symmetric under the mu-weighted similarity, spectrum in [0, 1]."""
    return np.eye(bundle.n) - bundle.F


def rate_matrix_exponential(L: np.ndarray, tau: float) -> np.ndarray:
    """Transition matrix exp(tau L) of the rate matrix L.

    L must have nonnegative off-diagonal entries and zero row sums; the
    result is row-stochastic within 1e-10 and entrywise nonnegative.
    Uses scaling-and-squaring with a Pade approximant.
    """
    L = np.asarray(L, float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise PreconditionError("rate matrix must be square")
    if tau < 0:
        raise PreconditionError("tau must be nonnegative")
    off = L.copy()
    np.fill_diagonal(off, 0.0)
    if off.min() < 0:
        i, j = np.unravel_index(np.argmin(off), off.shape)
        raise PreconditionError(
            f"negative off-diagonal rate L[{i},{j}] = {L[i, j]:.3e}")
    dev = np.abs(L.sum(axis=1))
    if dev.max() > 1e-10 * max(1.0, np.abs(L).max()):
        i = int(np.argmax(dev))
        raise PreconditionError(f"row {i} of the rate matrix sums to {L[i].sum():.3e}")
    S = scipy.linalg.expm(tau * L)
    S = np.maximum(S, 0.0)
    if np.abs(S.sum(axis=1) - 1.0).max() > 1e-10:
        raise NumericalError("matrix exponential lost row-stochasticity beyond 1e-10")
    return S


def apply_langevin_generator(V: np.ndarray, beta: float, f: np.ndarray, spacing):
    """Apply -grad V . grad f + (1/beta) laplacian f on a uniform grid.

    V and f are nd arrays sampled on the same uniform grid; central
    differences are used, so the result is only defined on interior nodes
    and the returned array is smaller by one cell per side on every axis.
    This is a validation tool, not a PDE solver.
    """
    V = np.asarray(V, float)
    f = np.asarray(f, float)
    if V.shape != f.shape:
        raise PreconditionError("V and f must be sampled on the same grid")
    if any(s < 3 for s in V.shape):
        raise PreconditionError("grid needs at least 3 nodes per axis")
    if not beta > 0:
        raise PreconditionError("beta must be positive")
    ndim = V.ndim
    h = np.broadcast_to(np.asarray(spacing, float), (ndim,))

    def interior(arr, axis, shift):
        sl = []
        for a in range(ndim):
            if a == axis:
                sl.append(slice(1 + shift, arr.shape[a] - 1 + shift))
            else:
                sl.append(slice(1, arr.shape[a] - 1))
        return arr[tuple(sl)]

    out = np.zeros(tuple(s - 2 for s in V.shape))
    for a in range(ndim):
        dV = (interior(V, a, 1) - interior(V, a, -1)) / (2 * h[a])
        df = (interior(f, a, 1) - interior(f, a, -1)) / (2 * h[a])
        d2f = (interior(f, a, 1) - 2 * interior(f, a, 0) + interior(f, a, -1)) / h[a] ** 2
        out += -dV * df + d2f / beta
    return out
