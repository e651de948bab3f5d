import random

import numpy as np
import pytest

from l2torsion.engine import evaluate_matrix
from l2torsion.presentation import AutomorphismSpec, parse_presentation, parse_word
from l2torsion.ring import RingElement, RingMatrix, apply_automorphism, parse_ring_element
from l2torsion.towers import cyclic_level, grid_level

from conftest import random_ring_element


def one():
    return RingElement.one()


def gen(i, e=1):
    return RingElement.generator(i, e)


def test_circle_laplacian_convolution():
    # (t - 1)(t^-1 - 1) = 2 - t - t^-1, by hand
    t = gen(0)
    product = (t - one()) * (t.star() - one())
    assert product == RingElement({(): 2, ((0, 1),): -1, ((0, -1),): -1})


def test_star_definition():
    x = 3 * gen(0) + 2 * gen(1, -1)
    assert x.star() == 3 * gen(0, -1) + 2 * gen(1)


def test_unit_law():
    rng = random.Random(7)
    for _ in range(20):
        x = random_ring_element(rng, 2)
        assert one() * x == x
        assert x * one() == x


def test_star_is_involution_and_antihomomorphism():
    rng = random.Random(3)
    for _ in range(25):
        a = random_ring_element(rng, 2)
        b = random_ring_element(rng, 2)
        assert a.star().star() == a
        assert (a * b).star() == b.star() * a.star()


def test_parse_ring_element_literals():
    Z = parse_presentation("gens a; rels ;")
    assert parse_ring_element("2 - a - A", Z) == RingElement(
        {(): 2, ((0, 1),): -1, ((0, -1),): -1}
    )
    assert parse_ring_element("1", Z) == one()
    assert parse_ring_element("- A", Z) == -gen(0, -1)
    F = parse_presentation("gens a b; rels ;")
    assert parse_ring_element("3 a b^-1 + 2", F) == 3 * RingElement.from_word(
        ((0, 1), (1, -1))
    ) + 2 * one()
    assert parse_ring_element("3*a*b^-1", F) == 3 * RingElement.from_word(((0, 1), (1, -1)))


def test_representation_property_on_levels():
    # evaluate(a*b) == evaluate(a) @ evaluate(b) in the regular representation
    rng = random.Random(11)
    for level in (cyclic_level(8), grid_level((3, 3))):
        rank = len(level.images)
        for _ in range(15):
            a = random_ring_element(rng, rank)
            b = random_ring_element(rng, rank)
            ma = evaluate_matrix(RingMatrix(1, 1, {(0, 0): a}), level).matrix
            mb = evaluate_matrix(RingMatrix(1, 1, {(0, 0): b}), level).matrix
            mab = evaluate_matrix(RingMatrix(1, 1, {(0, 0): a * b}), level).matrix
            assert np.array_equal(mab, ma @ mb)


def test_star_evaluates_to_transpose():
    rng = random.Random(5)
    level = cyclic_level(8)
    for _ in range(15):
        a = random_ring_element(rng, 1)
        m = evaluate_matrix(RingMatrix(1, 1, {(0, 0): a}), level).matrix
        ms = evaluate_matrix(RingMatrix(1, 1, {(0, 0): a.star()}), level).matrix
        assert np.array_equal(ms, m.T)


def test_apply_automorphism_inversion():
    Z = parse_presentation("gens a; rels ;")
    phi = AutomorphismSpec((parse_word("A", Z),))
    x = gen(0) - one()
    assert apply_automorphism(phi, x) == gen(0, -1) - one()


def test_apply_automorphism_identity():
    rng = random.Random(2)
    phi = AutomorphismSpec.identity(2)
    for _ in range(10):
        x = random_ring_element(rng, 2)
        assert apply_automorphism(phi, x) == x


def test_apply_automorphism_free_reduction():
    # a -> ab, b -> b applied to a b^-1 gives (a b) b^-1 = a
    F = parse_presentation("gens a b; rels ;")
    phi = AutomorphismSpec((parse_word("a b", F), parse_word("b", F)))
    x = RingElement.from_word(((0, 1), (1, -1)))
    assert apply_automorphism(phi, x) == gen(0)


def test_apply_automorphism_is_ring_homomorphism():
    rng = random.Random(13)
    F = parse_presentation("gens a b; rels ;")
    phi = AutomorphismSpec((parse_word("a b", F), parse_word("b A", F)))
    for _ in range(20):
        a = random_ring_element(rng, 2)
        b = random_ring_element(rng, 2)
        assert apply_automorphism(phi, a * b) == apply_automorphism(phi, a) * apply_automorphism(phi, b)
        assert apply_automorphism(phi, a + b) == apply_automorphism(phi, a) + apply_automorphism(phi, b)


def test_matrix_shapes_and_block():
    a = RingMatrix.identity(2)
    b = RingMatrix.zeros(2, 1)
    block = RingMatrix.block([[a, b]])
    assert (block.rows, block.cols) == (2, 3)
    with pytest.raises(ValueError):
        RingMatrix.block([[a, RingMatrix.zeros(3, 1)]])
    with pytest.raises(ValueError):
        a @ RingMatrix.zeros(3, 3)


def test_matrix_star_is_conjugate_transpose():
    rng = random.Random(17)
    m = RingMatrix(
        2,
        3,
        {
            (i, j): random_ring_element(rng, 2)
            for i in range(2)
            for j in range(3)
            if rng.random() < 0.8
        },
    )
    s = m.star()
    assert (s.rows, s.cols) == (3, 2)
    for (i, j), elt in m.entries.items():
        assert s.entry(j, i) == elt.star()
    assert s.star() == m


def test_out_of_bounds_entry_rejected():
    with pytest.raises(ValueError):
        RingMatrix(1, 1, {(1, 0): one()})
