import json

import numpy as np
import pytest

from transferops import Box, BoxPartition, GaussianBasis, IndicatorBasis, box_index, evaluate_basis
from transferops.errors import OutOfDomainError, PreconditionError


@pytest.fixture
def grid16():
    return BoxPartition(Box((-1.75, -1.75), (1.75, 1.75)), (16, 16))


def test_box_index_corners(grid16):
    assert box_index(grid16, (-1.75, -1.75)) == 0
    # top face of the domain belongs to the last cell along each axis
    assert box_index(grid16, (1.75, 1.75)) == 255


def test_box_index_row_major_axis0_fastest():
    part = BoxPartition(Box((0.0, 0.0), (1.0, 1.0)), (2, 2))
    # multi-index (1, 0): axis 0 varies fastest
    assert box_index(part, (0.6, 0.2)) == 1
    assert box_index(part, (0.2, 0.6)) == 2


def test_box_index_out_of_domain(grid16):
    with pytest.raises(OutOfDomainError):
        box_index(grid16, (2.0, 0.0))


def test_indices_reports_offending_rows(grid16):
    X = np.array([[0.0, 0.0], [5.0, 0.0]])
    with pytest.raises(OutOfDomainError, match="1"):
        grid16.indices(X)


def test_centers_invert_index(grid16):
    centers = grid16.centers()
    assert np.array_equal(grid16.indices(centers), np.arange(grid16.n))


def test_partition_of_unity(grid16):
    rng = np.random.default_rng(0)
    X = grid16.domain.sample(rng, 100_000)
    phi = evaluate_basis(IndicatorBasis(grid16), X)
    # exactly one indicator fires per point
    assert np.array_equal(phi.sum(axis=0), np.ones(X.shape[0]))
    assert set(np.unique(phi)) <= {0.0, 1.0}


def test_indicator_one_hot_column():
    part = BoxPartition(Box((0.0, 0.0), (1.0, 1.0)), (2, 2))
    phi = evaluate_basis(IndicatorBasis(part), np.array([[0.6, 0.2]]))
    expected = np.zeros((4, 1))
    expected[1, 0] = 1.0
    assert np.array_equal(phi, expected)


def test_gaussian_unit_diagonal():
    rng = np.random.default_rng(1)
    centers = rng.normal(size=(7, 2))
    basis = GaussianBasis(centers, bandwidth=0.5)
    phi = basis.evaluate(centers)
    assert np.allclose(np.diag(phi), 1.0)
    assert phi.max() <= 1.0 + 1e-15


def test_gaussian_requires_positive_bandwidth():
    with pytest.raises(PreconditionError):
        GaussianBasis(np.zeros((3, 2)), bandwidth=0.0)


def test_partition_json_roundtrip(grid16):
    text = grid16.to_json()
    back = BoxPartition.from_json(text)
    assert back.counts == grid16.counts
    assert back.domain == grid16.domain
    assert json.loads(text)["counts"] == [16, 16]


def test_box_validation():
    with pytest.raises(PreconditionError):
        Box((0.0, 1.0), (1.0, 0.5))
