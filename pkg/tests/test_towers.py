import numpy as np
import pytest

from l2torsion.errors import ValidationFailure
from l2torsion.presentation import AutomorphismSpec, parse_presentation, parse_word
from l2torsion.towers import (
    LevelNotInvariant,
    QuotientLevel,
    QuotientTower,
    cyclic_level,
    cyclic_tower,
    grid_level,
    grid_tower,
    induced_automorphism,
    perm_order,
    trivial_tower,
    validate_automorphism,
    validate_tower,
    word_permutation,
)


def test_cyclic_tower_passes(Z):
    report = validate_tower(Z, cyclic_tower([2, 4, 8]))
    assert report.passed
    assert [c.order for c in report.checks] == [2, 4, 8]


def test_grid_tower_passes(Z2):
    report = validate_tower(Z2, grid_tower(2, [3]))
    assert report.passed
    assert report.checks[0].order == 9


def test_transposition_level_fails_regularity(Z):
    level = QuotientLevel(3, ((1, 0, 2),))
    report = validate_tower(Z, QuotientTower((level,)))
    assert not report.passed
    check = report.checks[0]
    assert not check.transitive
    assert check.order == 2  # order 2 != degree 3
    assert any("order 2 != degree 3" in m for m in check.messages)


def test_relator_failure_names_relator_and_level(Z2):
    # images that do not commute: two transpositions sharing a point, padded
    # to regular degree would be hard; use S3 on itself (order 6, regular)
    # with a, b two transpositions: the commutator relator must fail.
    import itertools

    elements = list(itertools.permutations(range(3)))
    index = {e: i for i, e in enumerate(elements)}

    def left_mult(g):
        return tuple(index[tuple(g[x] for x in e)] for e in elements)

    a = left_mult((1, 0, 2))
    b = left_mult((0, 2, 1))
    level = QuotientLevel(6, (a, b), label=6)
    report = validate_tower(Z2, QuotientTower((level,)))
    assert not report.passed
    assert report.checks[0].relator_failures == [0]
    assert "relator 0" in report.checks[0].messages[0]


def test_validation_monotone_under_level_removal(Z):
    tower = cyclic_tower([2, 4, 8])
    assert validate_tower(Z, tower).passed
    for skip in range(3):
        levels = tuple(lv for i, lv in enumerate(tower.levels) if i != skip)
        assert validate_tower(Z, QuotientTower(levels)).passed


def test_indices_must_be_nondecreasing():
    with pytest.raises(ValidationFailure):
        QuotientTower((cyclic_level(8), cyclic_level(4)))


def test_connecting_maps_checked(Z):
    tower = QuotientTower(
        (cyclic_level(4), cyclic_level(8)),
        connecting_maps=((parse_word("a", Z),),),
    )
    assert validate_tower(Z, tower).passed


def test_connecting_map_surjectivity_failure(Z2):
    # mapping both generators to the first one cannot cover the grid
    tower = QuotientTower(
        (grid_level((3, 3)), grid_level((9, 9))),
        connecting_maps=((parse_word("a", Z2), parse_word("a", Z2)),),
    )
    report = validate_tower(Z2, tower)
    assert not report.passed
    assert report.checks[1].connecting_ok is False


def test_trivial_tower(TRIV):
    report = validate_tower(TRIV, trivial_tower(2))
    assert report.passed


def test_word_permutation_composes_left_to_right():
    level = cyclic_level(5)
    w = ((0, 2),)
    assert list(word_permutation(level, w)) == [(x + 2) % 5 for x in range(5)]


def test_perm_order():
    assert perm_order(np.array([1, 2, 3, 0])) == 4
    assert perm_order(np.array([1, 0, 3, 2])) == 2


def test_induced_automorphism_inversion(Z):
    phi = AutomorphismSpec((parse_word("A", Z),))
    cmap = induced_automorphism(Z, cyclic_level(5), phi)
    assert list(cmap) == [(-x) % 5 for x in range(5)]


def test_induced_automorphism_not_invertible_at_bad_level(Z):
    # a -> a^2 is invertible mod 5 but not mod 4
    phi = AutomorphismSpec((parse_word("a a", Z),))
    cmap = induced_automorphism(Z, cyclic_level(5), phi)
    assert list(cmap) == [(2 * x) % 5 for x in range(5)]
    with pytest.raises(LevelNotInvariant) as err:
        induced_automorphism(Z, cyclic_level(4), phi)
    assert err.value.label == 4


def test_validate_automorphism_report(Z):
    phi = AutomorphismSpec((parse_word("A", Z),))
    report = validate_automorphism(Z, phi, cyclic_tower([3, 5]))
    assert report.passed
    bad = AutomorphismSpec((parse_word("a a", Z),))
    report = validate_automorphism(Z, bad, cyclic_tower([4]))
    assert not report.passed


def test_swap_automorphism_fails_on_asymmetric_quotient(F2):
    # F2 has no relators, so the relator check is vacuous; the induced-map
    # check must still reject swapping a (order 2 image) with b (order 3
    # image) on the Z/2 x Z/3 quotient.
    level = grid_level((2, 3))
    swap = AutomorphismSpec((parse_word("b", F2), parse_word("a", F2)))
    report = validate_automorphism(F2, swap, QuotientTower((level,)))
    assert not report.passed


def test_non_permutation_image_rejected():
    with pytest.raises(ValidationFailure):
        QuotientLevel(3, ((0, 0, 1),))
