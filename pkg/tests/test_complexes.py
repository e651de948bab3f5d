import random

import numpy as np
import pytest

from l2torsion.abelian import ring_matrix_to_laurent
from l2torsion.complexes import (
    ChainComplex,
    direct_sum,
    laplacian,
    require_free,
    validate_complex,
)
from l2torsion.engine import evaluate_matrix
from l2torsion.errors import ValidationFailure
from l2torsion.ring import RingElement, RingMatrix
from l2torsion.towers import cyclic_tower, grid_level, grid_tower, QuotientTower

from conftest import random_ring_element


def test_circle_validates(Z, circle):
    report = validate_complex(circle, cyclic_tower([2, 8]))
    assert report.passed  # a two-term complex has no composite to check


def test_torus_validates_on_grid(Z2, torus):
    assert validate_complex(torus, grid_tower(2, [2, 3, 4])).passed


def test_torus_boundary_composite_vanishes_in_abelianization(Z2, torus):
    # symbolic convolution in the commutative quotient: d1 * d2 = 0
    product = torus.boundary(1) @ torus.boundary(2)
    grid = ring_matrix_to_laurent(product, Z2)
    assert all(poly.is_zero() for row in grid for poly in row)


def test_corrupted_boundary_fails_at_first_level(Z2, torus):
    bad_d2 = RingMatrix(
        2,
        1,
        {
            (0, 0): torus.boundary(2).entry(0, 0) * -1,  # sign flip
            (1, 0): torus.boundary(2).entry(1, 0),
        },
    )
    broken = ChainComplex(Z2, (1, 2, 1), (torus.boundary(1), bad_d2))
    report = validate_complex(broken, grid_tower(2, [2, 3]))
    assert not report.passed
    failure = report.first_failure()
    assert failure.level_label == 4  # first grid level (2x2)
    assert failure.degree == 2


def test_shape_mismatch_rejected(Z):
    with pytest.raises(ValidationFailure):
        ChainComplex(Z, (1, 2), (RingMatrix.identity(1),))


def test_circle_laplacians_by_hand(Z, circle):
    expected = RingElement({(): 2, ((0, 1),): -1, ((0, -1),): -1})
    for p in (0, 1):
        delta = laplacian(circle, p)
        assert delta.rows == delta.cols == 1
        assert delta.entry(0, 0) == expected


def test_torus_laplacian_identity_at_level(Z2, torus):
    # quotient evaluation oracle: Delta_1 = d1* d1 + d2 d2* at Z/3 x Z/3
    level = grid_level((3, 3))
    delta = evaluate_matrix(laplacian(torus, 1), level).matrix
    d1 = evaluate_matrix(torus.boundary(1), level).matrix
    d2 = evaluate_matrix(torus.boundary(2), level).matrix
    assert np.array_equal(delta, d1.T @ d1 + d2 @ d2.T)


def test_laplacian_star_fixed(Z2, torus, circle):
    for complex_, degrees in ((torus, (0, 1, 2)), (circle, (0, 1))):
        for p in degrees:
            delta = laplacian(complex_, p)
            assert delta.star() == delta


def test_laplacian_star_fixed_random(F2):
    rng = random.Random(23)
    d1 = RingMatrix(
        2, 3, {(i, j): random_ring_element(rng, 2) for i in range(2) for j in range(3)}
    )
    C = ChainComplex(F2, (2, 3), (d1,))
    for p in (0, 1):
        delta = laplacian(C, p)
        assert delta.star() == delta


def test_laplacian_degree_out_of_range(circle):
    with pytest.raises(ValidationFailure):
        laplacian(circle, 5)


def test_stabilizer_orders_gate_engine(Z, circle):
    proper = ChainComplex(
        Z, circle.ranks, circle.boundaries, stabilizer_orders=((2,), (1,))
    )
    assert not proper.is_free()
    with pytest.raises(ValidationFailure) as err:
        require_free(proper, "l2_torsion")
    assert "combination-rule" in str(err.value)


def test_direct_sum_shapes(Z, circle):
    double = direct_sum(circle, circle)
    assert double.ranks == (2, 2)
    assert validate_complex(double, cyclic_tower([4])).passed
    shifted = direct_sum(circle, circle, shift=1)
    assert shifted.ranks == (1, 2, 1)
    assert validate_complex(shifted, cyclic_tower([4])).passed
