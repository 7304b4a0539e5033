import math

import numpy as np
import pytest

from conftest import random_directed_graph, random_undirected_graph
from transferops import (
    Density,
    apply_langevin_generator,
    forward_backward_laplacian,
    invariant_density,
    operator_bundle,
    random_walk_laplacian,
    rate_matrix_exponential,
    transition_matrix,
)
from transferops.errors import ImageDensityDegenerateError, PreconditionError


class TestOperatorBundle:
    def test_identity_chain(self):
        bundle = operator_bundle(np.eye(4), Density.uniform(4))
        for M in (bundle.P, bundle.K, bundle.T, bundle.F, bundle.B):
            assert np.allclose(M, np.eye(4))

    def test_reversible_chain_T_equals_K(self, triangle):
        S = transition_matrix(triangle)
        pi = invariant_density(triangle)
        bundle = operator_bundle(S, pi)
        assert np.allclose(bundle.T, bundle.K, atol=1e-14)

    def test_permutation_chain_forward_backward_is_identity(self, directed_cycle3):
        S = transition_matrix(directed_cycle3)
        bundle = operator_bundle(S, Density.uniform(3))
        assert np.allclose(bundle.F, np.eye(3), atol=1e-14)

    def test_compositions(self):
        rng = np.random.default_rng(0)
        S = rng.random((6, 6)) + 0.05
        S /= S.sum(axis=1, keepdims=True)
        mu = rng.random(6) + 0.1
        mu /= mu.sum()
        bundle = operator_bundle(S, mu)
        assert np.allclose(bundle.F, bundle.K @ bundle.T, atol=1e-15)
        assert np.allclose(bundle.B, bundle.T @ bundle.K, atol=1e-15)
        assert np.allclose(bundle.nu, S.T @ mu)

    def test_degenerate_image_density(self):
        S = np.array([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(ImageDensityDegenerateError):
            operator_bundle(S, Density.uniform(2))


class TestAdjointnessLaws:
    def test_duality_pairing_identity(self):
        # <T u, f>_nu == <u, K f>_mu for random chains and test functions
        rng = np.random.default_rng(1)
        for _ in range(10):
            n = rng.integers(2, 12)
            S = rng.random((n, n)) + 0.05
            S /= S.sum(axis=1, keepdims=True)
            mu = rng.random(n) + 0.1
            mu /= mu.sum()
            bundle = operator_bundle(S, mu)
            for _ in range(10):
                u = rng.normal(size=n)
                f = rng.normal(size=n)
                lhs = (bundle.T @ u) @ (bundle.nu * f)
                rhs = u @ (bundle.mu * (bundle.K @ f))
                assert abs(lhs - rhs) < 1e-12

    def test_weighted_symmetry_and_psd(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = rng.integers(2, 25)
            g = random_directed_graph(rng, n)
            S = transition_matrix(g)
            mu = rng.random(n) + 0.1
            mu /= mu.sum()
            bundle = operator_bundle(S, mu)
            for A, w in ((bundle.F, bundle.mu), (bundle.B, bundle.nu)):
                s = np.sqrt(w)
                M = A * s[:, None] / s[None, :]
                assert np.abs(M - M.T).max() < 1e-10
                assert np.linalg.eigvalsh((M + M.T) / 2).min() > -1e-10

    def test_unit_spectral_radius(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = rng.integers(2, 25)
            g = random_directed_graph(rng, n)
            bundle = operator_bundle(transition_matrix(g), Density.uniform(n))
            ones = np.ones(n)
            assert np.abs(bundle.F @ ones - ones).max() < 1e-10
            s = np.sqrt(bundle.mu)
            M = bundle.F * s[:, None] / s[None, :]
            assert abs(np.linalg.eigvalsh((M + M.T) / 2).max() - 1.0) < 1e-10

    def test_spectrum_contained_in_unit_interval(self):
        rng = np.random.default_rng(4)
        for i in range(30):
            n = rng.integers(2, 40)
            g = random_undirected_graph(rng, n) if i % 2 else random_directed_graph(rng, n)
            bundle = operator_bundle(transition_matrix(g), Density.uniform(n))
            for A, w in ((bundle.F, bundle.mu), (bundle.B, bundle.nu)):
                s = np.sqrt(w)
                vals = np.linalg.eigvalsh((lambda M: (M + M.T) / 2)(A * s[:, None] / s[None, :]))
                assert vals.min() > -1e-8 and vals.max() < 1 + 1e-8


class TestLaplacians:
    def test_random_walk_identity(self):
        assert np.allclose(random_walk_laplacian(np.eye(3)), 0.0)

    def test_complete_graph_spectrum(self):
        # K3: S has off-diagonal 1/2, eigenvalues {1, -1/2, -1/2}
        S = (np.ones((3, 3)) - np.eye(3)) / 2
        vals = np.sort(np.linalg.eigvalsh(random_walk_laplacian(S)))
        assert np.allclose(vals, [0.0, 1.5, 1.5], atol=1e-12)

    def test_zero_row_sums(self):
        rng = np.random.default_rng(5)
        S = rng.random((8, 8)) + 0.01
        S /= S.sum(axis=1, keepdims=True)
        assert np.abs(random_walk_laplacian(S).sum(axis=1)).max() < 1e-12

    def test_forward_backward_identity(self):
        bundle = operator_bundle(np.eye(4), Density.uniform(4))
        assert np.allclose(forward_backward_laplacian(bundle), 0.0)

    def test_forward_backward_annihilates_constants(self, triangle):
        pi = invariant_density(triangle)
        bundle = operator_bundle(transition_matrix(triangle), pi)
        L = forward_backward_laplacian(bundle)
        assert np.abs(L @ np.ones(3)).max() < 1e-12

    def test_barbell_weak_coupling(self, barbell):
        pi = invariant_density(barbell)
        bundle = operator_bundle(transition_matrix(barbell), pi)
        L = forward_backward_laplacian(bundle)
        s = np.sqrt(pi)
        vals = np.sort(np.linalg.eigvalsh((lambda M: (M + M.T) / 2)(L * s[:, None] / s[None, :])))
        assert vals[1] < 0.05


class TestRateMatrixExponential:
    def test_zero_time_is_identity(self):
        L = np.array([[-2.0, 2.0], [0.5, -0.5]])
        assert np.allclose(rate_matrix_exponential(L, 0.0), np.eye(2))

    def test_two_state_closed_form(self):
        L = np.array([[-1.0, 1.0], [1.0, -1.0]])
        S = rate_matrix_exponential(L, 1.0)
        a = (1 + math.exp(-2)) / 2
        b = (1 - math.exp(-2)) / 2
        assert np.allclose(S, [[a, b], [b, a]], atol=1e-12)

    def test_row_stochastic(self):
        rng = np.random.default_rng(6)
        R = rng.random((7, 7)) * (rng.random((7, 7)) < 0.5)
        np.fill_diagonal(R, 0.0)
        L = R - np.diag(R.sum(axis=1))
        S = rate_matrix_exponential(L, 5.0)
        assert np.abs(S.sum(axis=1) - 1.0).max() < 1e-10
        assert S.min() >= 0.0

    def test_spectral_mapping(self):
        import scipy.optimize

        rng = np.random.default_rng(7)
        tau = 0.7
        for _ in range(10):
            n = rng.integers(2, 9)
            R = rng.random((n, n))
            np.fill_diagonal(R, 0.0)
            L = R - np.diag(R.sum(axis=1))
            lam = np.linalg.eigvals(L)
            got = np.linalg.eigvals(rate_matrix_exponential(L, tau))
            expected = np.exp(tau * lam)
            cost = np.abs(got[:, None] - expected[None, :])
            rows, cols = scipy.optimize.linear_sum_assignment(cost)
            assert cost[rows, cols].max() < 1e-8

    def test_invalid_rate_matrix(self):
        with pytest.raises(PreconditionError, match=r"L\[0,1\]"):
            rate_matrix_exponential(np.array([[1.0, -1.0], [0.0, 0.0]]), 1.0)
        with pytest.raises(PreconditionError, match="sums"):
            rate_matrix_exponential(np.array([[-1.0, 2.0], [1.0, -1.0]]), 1.0)


class TestLangevinGenerator:
    def grid(self):
        x = np.linspace(-2, 2, 41)
        return np.meshgrid(x, x, indexing="ij"), x[1] - x[0]

    def test_constant_function(self):
        (X1, X2), h = self.grid()
        V = X1**2 + X2**2
        out = apply_langevin_generator(V, 3.0, np.ones_like(V), h)
        assert np.abs(out).max() < 1e-12

    def test_linear_observable(self):
        (X1, X2), h = self.grid()
        V = X1**2 + 0.5 * X2**2
        out = apply_langevin_generator(V, 2.0, X1.copy(), h)
        # laplacian of x1 vanishes and central differences of quadratics
        # are exact, so the result is -dV/dx1 to round-off
        assert np.allclose(out, (-2 * X1)[1:-1, 1:-1], atol=1e-10)

    def test_quadratic_oracle(self):
        # V = |x|^2 / 2, f = x1^2, 1/beta = 1: -2 x1^2 + 2; exact for
        # central differences because f and V are quadratic
        (X1, X2), h = self.grid()
        V = (X1**2 + X2**2) / 2
        out = apply_langevin_generator(V, 1.0, X1**2, h)
        assert np.allclose(out, (-2 * X1**2 + 2)[1:-1, 1:-1], atol=1e-10)

    def test_grid_too_small(self):
        with pytest.raises(PreconditionError):
            apply_langevin_generator(np.zeros((2, 5)), 1.0, np.zeros((2, 5)), 0.1)


def test_density_validation():
    with pytest.raises(PreconditionError):
        Density(np.array([0.5, 0.0, 0.5]))
    with pytest.raises(PreconditionError):
        Density(np.array([0.5, 0.6]))
    assert np.allclose(Density.uniform(5).values, 0.2)
