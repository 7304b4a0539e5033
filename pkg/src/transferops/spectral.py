"""Eigen-decomposition services for transfer-operator matrices.

The self-adjoint path symmetrizes A with the similarity
D_mu^{1/2} A D_mu^{-1/2} and runs a dense symmetric eigensolve, so the
forward-backward and backward-forward operators never touch complex
arithmetic.  The general path returns the full complex spectrum; only its
eigenvalues are guaranteed to high accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    NearNullSingularError,
    NotSelfAdjointError,
    NumericalError,
    PreconditionError,
)
from .operators import OperatorBundle, density_values

GENERAL_LIMIT = 4096


@dataclass(frozen=True)
class SpectralResult:
    """Eigenvalues in descending order with aligned eigenvector columns.

    For the self-adjoint path the eigenvectors are orthonormal in the
    weighted inner product given by `weight` and signs are canonicalized
    (first entry of magnitude above 1e-8 of the max is positive), making
    results deterministic across runs.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    weight: np.ndarray | None = None


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    scale = np.abs(v).max()
    if scale == 0:
        return v
    idx = np.flatnonzero(np.abs(v) > 1e-8 * scale)
    if idx.size and v[idx[0]] < 0:
        return -v
    return v


def selfadjoint_eigs(A: np.ndarray, mu, k: int | None = None,
                     sym_tol: float = 1e-8) -> SpectralResult:
    """Top-k eigenpairs of a matrix that is self-adjoint under weight mu.

    Parameters
    ----------
    A : (n, n) array
        Operator matrix; D_mu^{1/2} A D_mu^{-1/2} must be symmetric within
        `sym_tol` (holds for F with weight mu, B with weight nu, and K on
        reversible chains with weight pi).
    mu : Density or positive vector
    k : int or None
        Number of leading eigenpairs; None returns all.

    Returns eigenvectors normalized to <v, v>_mu = 1, residuals below 1e-8.
    """
    A = np.asarray(A, float)
    n = A.shape[0]
    w = density_values(mu, n)
    s = np.sqrt(w)
    M = (A * s[:, None]) / s[None, :]
    defect = float(np.abs(M - M.T).max())
    if defect > sym_tol:
        raise NotSelfAdjointError(
            f"weighted symmetrization defect {defect:.3e} exceeds {sym_tol:.1e}")
    vals, vecs = np.linalg.eigh((M + M.T) / 2.0)
    vecs = vecs / s[:, None]
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    vecs = np.column_stack([_canonical_sign(vecs[:, i]) for i in range(n)])
    # break exact-degeneracy ties lexicographically for order stability
    i = 0
    while i < n - 1:
        j = i + 1
        while j < n and abs(vals[j] - vals[i]) <= 1e-10 * max(1.0, abs(vals[i])):
            j += 1
        if j - i > 1:
            sub = sorted(range(i, j), key=lambda c: tuple(-vecs[:, c]))
            vals[i:j] = vals[sub]
            vecs[:, i:j] = vecs[:, sub]
        i = j
    if k is not None:
        if k < 1:
            raise PreconditionError("k must be positive")
        k = min(k, n)
        vals, vecs = vals[:k], vecs[:, :k]
    residual = np.abs(A @ vecs - vecs * vals[None, :]).max()
    if residual > 1e-8:
        raise NumericalError(f"eigenpair residual {residual:.3e} exceeds 1e-8")
    return SpectralResult(eigenvalues=vals, eigenvectors=vecs, weight=w)


def general_eigs(A: np.ndarray) -> SpectralResult:
    """Full complex spectrum, ordered by modulus descending then argument."""
    A = np.asarray(A, float)
    n = A.shape[0]
    if n > GENERAL_LIMIT:
        raise PreconditionError(f"general eigensolve supports up to {GENERAL_LIMIT} states")
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    # round the moduli so near-degenerate pairs fall back to the argument
    order = np.lexsort((np.angle(vals), -np.round(np.abs(vals), 12)))
    vals, vecs = vals[order], vecs[:, order]
    for i in range(n):
        col = vecs[:, i]
        pivot = int(np.argmax(np.abs(col)))
        phase = col[pivot]
        if np.abs(phase) > 0:
            vecs[:, i] = col * (np.abs(phase) / phase)
    residual = np.abs(A @ vecs - vecs * vals[None, :]).max()
    if residual > 1e-6 * max(1.0, np.abs(A).max()):
        raise NumericalError(f"eigenpair residual {residual:.3e} too large")
    return SpectralResult(eigenvalues=vals, eigenvectors=vecs, weight=None)


def spectral_gap(eigenvalues) -> int:
    """Suggested cluster count k from the largest drop in the spectrum.

    Scans the descending real eigenvalues and returns the k >= 1 whose drop
    lambda_k - lambda_{k+1} is largest, smallest k on ties.  A heuristic:
    callers can always override k explicitly.
    """
    vals = np.asarray(eigenvalues, float)
    if vals.ndim != 1 or vals.size < 2:
        raise PreconditionError("need at least two eigenvalues")
    if np.any(np.diff(vals) > 1e-12):
        raise PreconditionError("eigenvalues must be sorted in descending order")
    drops = vals[:-1] - vals[1:]
    return int(np.argmax(drops)) + 1


def singular_pair(bundle: OperatorBundle, phi: np.ndarray, lam: float):
    """Right singular partner psi = T phi / sqrt(lam) of an F-eigenpair.

    Verifies the defining relations K psi = sqrt(lam) phi and
    B psi = lam psi within 1e-8.
    """
    if lam <= 1e-12:
        raise NearNullSingularError(f"eigenvalue {lam:.3e} too close to zero")
    phi = np.asarray(phi, float)
    root = np.sqrt(lam)
    psi = bundle.T @ phi / root
    res_k = np.abs(bundle.K @ psi - root * phi).max()
    res_b = np.abs(bundle.B @ psi - lam * psi).max()
    if max(res_k, res_b) > 1e-8:
        raise NumericalError(
            f"singular-pair residuals ({res_k:.3e}, {res_b:.3e}) exceed 1e-8")
    return psi
