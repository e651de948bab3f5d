import numpy as np
import pytest

from l2torsion.complexes import ChainComplex, point_complex, torus_complex, validate_complex
from l2torsion.engine import evaluate_matrix
from l2torsion.errors import ValidationFailure
from l2torsion.mapping_torus import (
    ChainMapError,
    MappingTorusSpec,
    extend_level,
    extend_tower,
    extended_presentation,
    mapping_torus,
    verify_chain_map,
)
from l2torsion.presentation import AutomorphismSpec, parse_presentation, parse_word
from l2torsion.ring import RingElement, RingMatrix
from l2torsion.towers import (
    LevelNotInvariant,
    QuotientTower,
    check_level,
    cyclic_level,
    cyclic_tower,
    grid_level,
    perm_order,
    trivial_tower,
    validate_tower,
    word_permutation,
)


def inversion_spec(Z, circle):
    """The degree -1 twist over a -> a^-1: f0 = 1, f1 = -a^-1."""
    phi = AutomorphismSpec((parse_word("A", Z),), declared_order=2)
    f0 = RingMatrix.identity(1)
    f1 = RingMatrix(1, 1, {(0, 0): -RingElement.generator(0, -1)})
    return MappingTorusSpec(circle, phi, (f0, f1))


def test_point_torus_is_circle(TRIV, point):
    spec = MappingTorusSpec.identity(point)
    extended, complex_ = mapping_torus(spec, trivial_tower(1), m=4)
    assert complex_.ranks == (1, 1)
    t_minus_1 = RingElement.generator(0) - RingElement.one()
    assert complex_.boundary(1).entry(0, 0) == t_minus_1
    assert extended.presentation.generators == ("t",)


def test_identity_on_circle_gives_torus(Z, circle):
    spec = MappingTorusSpec.identity(circle)
    extended, complex_ = mapping_torus(spec, cyclic_tower([3, 5]), m=4)
    assert complex_.ranks == (1, 2, 1)
    assert extended.presentation.generators == ("a", "t")
    # block boundaries match the directly-entered torus with b = t
    direct = torus_complex(extended.presentation, a=0, b=1)
    assert complex_.boundary(1) == direct.boundary(1)
    assert complex_.boundary(2) == direct.boundary(2)
    assert validate_complex(complex_, extended.tower).passed


def test_klein_bottle_from_inversion(Z, circle):
    spec = inversion_spec(Z, circle)
    extended, complex_ = mapping_torus(spec, cyclic_tower([3, 5, 9]), m=2)
    # relator is t a t^-1 a (the twisted commutation)
    assert extended.presentation.relators == (((1, 1), (0, 1), (1, -1), (0, 1)),)
    assert validate_complex(complex_, extended.tower).passed
    assert validate_tower(extended.presentation, extended.tower).passed


def test_chain_map_violation_names_level(Z, circle):
    phi = AutomorphismSpec((parse_word("A", Z),))
    wrong = MappingTorusSpec(
        circle, phi, (RingMatrix.identity(1), RingMatrix.identity(1))
    )
    with pytest.raises(ChainMapError) as err:
        verify_chain_map(wrong, cyclic_tower([5]))
    assert err.value.level_label == 5


def test_extend_identity_level(Z):
    # Z with identity automorphism, level Z/4, m = 3: abelian of order 12
    phi = AutomorphismSpec.identity(1)
    level = extend_level(Z, cyclic_level(4), phi, m=3)
    assert level.degree == 12
    ext = extended_presentation(Z, phi)
    assert check_level(ext, level).passed
    a, t = level.arrays()
    assert np.array_equal(a[t], t[a])  # commuting


def test_extend_inversion_is_dihedral(Z):
    # Z/5 with a -> a^-1 and m = 1: order-10 dihedral relations
    phi = AutomorphismSpec((parse_word("A", Z),))
    level = extend_level(Z, cyclic_level(5), phi, m=1)
    assert level.degree == 10
    ext = extended_presentation(Z, phi)
    assert check_level(ext, level).passed
    a, t = level.arrays()
    identity = np.arange(10)
    assert np.array_equal(t[t], identity)  # t^2 = 1
    assert perm_order(a) == 5
    # t a t^-1 = a^-1 read off the permutations
    t_inv = np.argsort(t)
    assert np.array_equal(t[a[t_inv]], np.argsort(a))


def test_extend_unipotent_is_heisenberg_type(Z2):
    # a -> a, b -> a b on Z^2 at the 3x3 grid has induced order 3; m = 1
    # gives a nonabelian group of order 27, verified by orbit enumeration
    phi = AutomorphismSpec((parse_word("a", Z2), parse_word("a b", Z2)))
    level = extend_level(Z2, grid_level((3, 3)), phi, m=1)
    assert level.degree == 27
    ext = extended_presentation(Z2, phi)
    assert check_level(ext, level).passed  # regular, so group order is 27
    arrays = level.arrays()
    a, b, t = arrays
    assert not np.array_equal(t[b], b[t])  # genuinely nonabelian


def test_extend_tower_rejects_non_invariant_level(Z):
    phi = AutomorphismSpec((parse_word("a a", Z),))
    with pytest.raises(LevelNotInvariant) as err:
        extend_tower(Z, cyclic_tower([4]), phi, m=1)
    assert err.value.label == 4
    assert "not bijective" in str(err.value)


def test_extend_tower_names_generator_on_equivariance_failure(F2):
    # swapping the generators cannot descend to the asymmetric Z/2 x Z/3
    # quotient; the check must name the first generator that witnesses it
    swap = AutomorphismSpec((parse_word("b", F2), parse_word("a", F2)))
    with pytest.raises(LevelNotInvariant) as err:
        extend_tower(F2, QuotientTower((grid_level((2, 3)),)), swap, m=1)
    assert err.value.generator in ("a", "b")


def test_stable_letter_name_avoids_clash():
    G = parse_presentation("gens t; rels ;")
    ext = extended_presentation(G, AutomorphismSpec.identity(1))
    assert ext.generators == ("t", "t0")


def _singular_values_by_degree(complex_, level):
    out = {}
    for n in range(1, complex_.dim + 1):
        shadow = evaluate_matrix(complex_.boundary(n), level).matrix.astype(float)
        s = np.linalg.svd(shadow, compute_uv=False) if shadow.size else np.zeros(0)
        out[n] = np.sort(s[s > 1e-9])
    return out


def _tensor_with_circle(base: ChainComplex, ext_presentation, t_index: int) -> ChainComplex:
    """Degreewise tensor with the two-term circle complex over the stable letter."""
    t = RingElement.generator(t_index)
    one = RingElement.one()
    dim = base.dim
    ranks = tuple(base.rank(n) + base.rank(n - 1) for n in range(dim + 2))
    boundaries = []
    for n in range(1, dim + 2):
        r = base.rank(n - 1)
        tb = RingMatrix(r, r, {(i, i): (t - one) * (-1) ** n for i in range(r)})
        block = RingMatrix.block(
            [
                [base.boundary(n), tb],
                [RingMatrix.zeros(base.rank(n - 2), base.rank(n)), base.boundary(n - 1)],
            ]
        )
        boundaries.append(block)
    return ChainComplex(ext_presentation, ranks, tuple(boundaries))


@pytest.mark.parametrize("base_name", ["point", "circle"])
def test_identity_torus_matches_tensor_with_circle(request, base_name):
    # functoriality smoke test: same nonzero singular values degreewise
    base = request.getfixturevalue(base_name)
    tower = trivial_tower(1) if base_name == "point" else cyclic_tower([4])
    spec = MappingTorusSpec.identity(base)
    extended, torus_cx = mapping_torus(spec, tower, m=3)
    tensor_cx = _tensor_with_circle(base, extended.presentation, extended.t_index)
    assert validate_complex(tensor_cx, extended.tower).passed
    for level in extended.tower.levels:
        sv_torus = _singular_values_by_degree(torus_cx, level)
        sv_tensor = _singular_values_by_degree(tensor_cx, level)
        for n in sv_torus:
            assert np.allclose(sv_torus[n], sv_tensor[n], atol=1e-9)


def test_erasing_t_gives_algebraic_cone(Z, circle):
    # set t = identity with the identity twist: the boundary becomes the cone
    # of (Id - f)
    spec = MappingTorusSpec.identity(circle)
    extended, complex_ = mapping_torus(spec, cyclic_tower([4]), m=2)
    kill_t = AutomorphismSpec(
        (parse_word("a", extended.presentation), ())  # t -> empty word
    )
    dim = circle.dim
    for n in range(1, dim + 2):
        erased = complex_.boundary(n).apply(kill_t)
        r = circle.rank(n - 1)
        cone_block = (RingMatrix.identity(r) - spec.chain_map[n - 1]) if r else RingMatrix.zeros(0, 0)
        if n % 2 == 1:
            cone_block = -cone_block
        expected = RingMatrix.block(
            [
                [circle.boundary(n), cone_block],
                [RingMatrix.zeros(circle.rank(n - 2), circle.rank(n)), circle.boundary(n - 1)],
            ]
        )
        assert erased == expected


def test_chain_map_shape_validation(Z, circle):
    with pytest.raises(ValidationFailure):
        MappingTorusSpec(circle, AutomorphismSpec.identity(1), (RingMatrix.identity(1),))
