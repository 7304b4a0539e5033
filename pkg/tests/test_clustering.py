import numpy as np
import pytest

from conftest import reversible_chain
from transferops import (
    Density,
    Partition,
    kmeans,
    metastability_bounds,
    metastability_score,
    operator_bundle,
    projection_mass,
    seba,
    selfadjoint_eigs,
    transition_matrix,
)
from transferops.clustering import _lloyd, load_partition, save_partition
from transferops.errors import DegenerateInputError, EmptyBlockError, PreconditionError


def two_clouds(rng, dist=100.0, n=20):
    a = rng.normal(size=(n, 2))
    b = rng.normal(size=(n, 2)) + dist
    return np.vstack([a, b])


class TestKmeans:
    def test_single_cluster(self):
        rng = np.random.default_rng(0)
        part = kmeans(rng.normal(size=(15, 3)), k=1, seed=1)
        assert part.m == 1 and np.all(part.labels == 0)

    def test_separated_clouds(self):
        rng = np.random.default_rng(1)
        points = two_clouds(rng)
        part = kmeans(points, k=2, seed=3)
        assert len(set(part.labels[:20])) == 1
        assert len(set(part.labels[20:])) == 1
        assert part.labels[0] != part.labels[20]

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(40, 2))
        a = kmeans(points, k=3, seed=5)
        b = kmeans(points, k=3, seed=5)
        assert np.array_equal(a.labels, b.labels)

    def test_distortion_monotone(self):
        rng = np.random.default_rng(3)
        points = rng.normal(size=(60, 2))
        centers = points[rng.choice(60, size=4, replace=False)]
        _, _, _, history = _lloyd(points, centers, max_iter=50, tol=0.0)
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_degenerate_input(self):
        points = np.zeros((10, 2))
        with pytest.raises(DegenerateInputError):
            kmeans(points, k=2, seed=1)

    def test_k_bounds(self):
        with pytest.raises(PreconditionError):
            kmeans(np.zeros((3, 1)), k=4, seed=0)


class TestSeba:
    def test_single_constant_column(self):
        n = 12
        V = np.full((n, 1), 1.0 / np.sqrt(n))
        memberships, part = seba(V)
        assert part.m == 1
        assert np.all(part.labels == 0)
        assert memberships.min() > 0.9

    def test_recovers_indicator_span(self):
        # orthonormalized span of a 2-block indicator partition
        n = 10
        blocks = np.zeros((n, 2))
        blocks[:6, 0] = 1.0
        blocks[6:, 1] = 1.0
        V, _ = np.linalg.qr(blocks)
        memberships, part = seba(V)
        labels = part.labels
        assert np.all(labels >= 0)
        assert len(set(labels[:6])) == 1 and len(set(labels[6:])) == 1
        assert labels[0] != labels[6]
        on = np.where(memberships > 0.5, 1.0, 0.0)
        assert np.array_equal(np.sort(on.sum(axis=0)), [4, 6])

    def test_barbell_bridge_left_unassigned(self, barbell):
        mu = Density.uniform(6).values
        bundle = operator_bundle(transition_matrix(barbell), mu)
        res = selfadjoint_eigs(bundle.F, mu, k=2)
        memberships, part = seba(res.eigenvectors, weight=mu)
        # the two triangle interiors get assigned to different sets
        assert part.labels[0] == part.labels[1] != -1
        assert part.labels[4] == part.labels[5] != -1
        assert part.labels[0] != part.labels[4]

    def test_spans_input_subspace(self):
        import scipy.linalg

        n = 24
        blocks = np.zeros((n, 3))
        blocks[:8, 0] = blocks[8:15, 1] = blocks[15:, 2] = 1.0
        V, _ = np.linalg.qr(blocks)
        memberships, _ = seba(V)
        angles = scipy.linalg.subspace_angles(V, memberships)
        assert angles.max() < 1e-3

    def test_requires_orthonormal_columns(self):
        rng = np.random.default_rng(4)
        with pytest.raises(PreconditionError, match="orthonormal"):
            seba(rng.normal(size=(10, 2)))

    def test_weighted_orthonormal_input_accepted(self):
        rng = np.random.default_rng(5)
        w = rng.random(8) + 0.5
        w /= w.sum()
        raw = rng.normal(size=(8, 2))
        # Gram-Schmidt in the weighted inner product
        v1 = raw[:, 0] / np.sqrt(raw[:, 0] @ (w * raw[:, 0]))
        v2 = raw[:, 1] - (v1 @ (w * raw[:, 1])) * v1
        v2 /= np.sqrt(v2 @ (w * v2))
        memberships, part = seba(np.column_stack([v1, v2]), weight=w)
        assert memberships.shape == (8, 2)
        assert memberships.min() >= 0.0


class TestMetastabilityScore:
    def test_identity_dynamics(self):
        part = Partition(np.array([0, 0, 1, 2, 2]), 3)
        D = metastability_score(np.eye(5), Density.uniform(5), part)
        assert D == pytest.approx(3.0)

    def test_uniform_chain(self):
        n = 6
        S = np.full((n, n), 1.0 / n)
        part = Partition(np.array([0, 0, 0, 1, 1, 2]), 3)
        D = metastability_score(S, Density.uniform(n), part)
        assert D == pytest.approx(1.0)

    def test_two_block_chain(self):
        S = np.array([[0.9, 0.1], [0.1, 0.9]])
        part = Partition(np.array([0, 1]), 2)
        D = metastability_score(S, np.array([0.5, 0.5]), part)
        assert D == pytest.approx(1.8)

    def test_empty_block(self):
        part = Partition(np.array([0, 0, 0]), 2)
        with pytest.raises(EmptyBlockError):
            metastability_score(np.eye(3), Density.uniform(3), part)

    def test_label_permutation_invariance(self):
        rng = np.random.default_rng(6)
        S, pi = reversible_chain(rng, 9)
        labels = rng.integers(0, 3, size=9)
        labels[:3] = [0, 1, 2]
        part = Partition(labels, 3)
        permuted = Partition((labels + 1) % 3, 3)
        a = metastability_score(S, pi, part)
        b = metastability_score(S, pi, permuted)
        assert a == pytest.approx(b)


class TestProjectionMass:
    def test_piecewise_constant(self):
        part = Partition(np.array([0, 0, 1, 1]), 2)
        mu = Density.uniform(4).values
        u = np.array([1.0, 1.0, -1.0, -1.0])
        u /= np.sqrt(u @ (mu * u))
        assert projection_mass(u, part, mu) == pytest.approx(1.0)

    def test_blockwise_zero_mean(self):
        part = Partition(np.array([0, 0, 1, 1]), 2)
        mu = Density.uniform(4).values
        u = np.array([1.0, -1.0, 1.0, -1.0])
        u /= np.sqrt(u @ (mu * u))
        assert projection_mass(u, part, mu) == pytest.approx(0.0, abs=1e-15)

    def test_three_state_example(self):
        part = Partition(np.array([0, 0, 1]), 2)
        mu = Density.uniform(3).values
        u = np.array([1.0, -1.0, 0.0])
        u /= np.sqrt(u @ (mu * u))
        assert projection_mass(u, part, mu) == pytest.approx(0.0, abs=1e-15)

    def test_requires_normalization(self):
        part = Partition(np.array([0, 1]), 2)
        with pytest.raises(PreconditionError, match="normalized"):
            projection_mass(np.array([2.0, 0.0]), part, np.array([0.5, 0.5]))


class TestMetastabilityBounds:
    def test_perfectly_decoupled_blocks(self):
        lower, upper, holds = metastability_bounds([1.0, 1.0, 0.3], [1.0], 2.0)
        assert lower == pytest.approx(2.0)
        assert upper == pytest.approx(2.0)
        assert holds

    def test_two_block_chain_exact(self):
        # eigendecomposition of [[.9,.1],[.1,.9]] by hand: lambda2 = 0.8
        lower, upper, holds = metastability_bounds([1.0, 0.8, 0.0], [1.0], 1.8)
        assert lower == pytest.approx(1.8)
        assert upper == pytest.approx(1.8)
        assert holds

    def test_property_sweep_on_reversible_chains(self):
        # full-spectrum bounds bracket the score on arbitrary chains and
        # partitions; also check the exact trace identity behind them
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 30:
            n = int(rng.integers(4, 16))
            S, pi = reversible_chain(rng, n)
            s = np.sqrt(pi)
            vals, vecs = np.linalg.eigh((lambda M: (M + M.T) / 2)(S * s[:, None] / s[None, :]))
            order = np.argsort(-vals)
            vals, vecs = vals[order], (vecs / s[:, None])[:, order]
            m = int(rng.integers(2, min(5, n)))
            try:
                part = kmeans(vecs[:, :m], m, seed=int(rng.integers(1 << 16)))
            except DegenerateInputError:
                continue
            if min(part.sizes()) == 0:
                continue
            D = metastability_score(S, pi, part)
            all_deltas = np.array([projection_mass(vecs[:, j], part, pi)
                                   for j in range(n)])
            assert D == pytest.approx(1 + all_deltas[1:] @ vals[1:], abs=1e-10)
            assert all_deltas.sum() == pytest.approx(m, abs=1e-10)
            lower, upper, holds = metastability_bounds(vals, all_deltas[1:m], D)
            assert holds, (lower, D, upper)
            checked += 1

    def test_malformed_ordering(self):
        with pytest.raises(PreconditionError):
            metastability_bounds([1.0, 0.5, 0.8], [0.5], 1.0)
        with pytest.raises(PreconditionError):
            metastability_bounds([0.9, 0.5, 0.1], [0.5], 1.0)


def test_partition_roundtrip(tmp_path):
    part = Partition(np.array([0, 2, -1, 1]), 3)
    save_partition(part, tmp_path / "p.csv")
    back = load_partition(tmp_path / "p.csv")
    assert np.array_equal(back.labels, part.labels)
    text = (tmp_path / "p.csv").read_text()
    assert text.splitlines()[0] == "vertex,label"
    assert "-1" in text
