"""Finite-quotient computation of L2-torsion and related invariants.

The toolkit covers: exact integral group-ring arithmetic over finitely
presented groups, towers of finite permutation quotients, chain complexes and
their combinatorial Laplacians, the algebraic mapping torus of a twisted
chain self-map, a finite-quotient approximation engine for L2-Betti numbers
and Fuglede-Kadison determinants, an exact Laurent/Mahler oracle over
free-abelian groups, an exact evaluator for torsion combination rules, and a
homology-torsion-growth lab built on arbitrary-precision Smith normal forms.
"""

from .abelian import LaurentPoly, MahlerResult, l2_torsion_abelian, laurent_det, mahler_log
from .combine import (
    OrbitCell,
    TorsionValue,
    amalgam,
    cell_sum,
    evaluate_decomposition,
    finite_quotient_rule,
    graph_of_groups,
    jsj_auto,
    orbifold_euler,
    power_rule,
    product_rule,
    restriction_rule,
    scaling_rules,
    surface_auto,
)
from .complexes import (
    ChainComplex,
    circle_complex,
    direct_sum,
    laplacian,
    point_complex,
    torus_complex,
    validate_complex,
)
from .engine import (
    BettiEstimate,
    CutoffPolicy,
    LogDetEstimate,
    TorsionEstimate,
    betti,
    evaluate_matrix,
    fk_log_det,
    l2_torsion,
    rho_of_automorphism,
)
from .errors import NumericPreconditionError, ValidationFailure
from .growth import (
    GrowthReport,
    SnfResult,
    growth_series,
    homology,
    homology_torsion,
    integer_determinant,
    smith_normal_form,
)
from .mapping_torus import (
    ExtendedGroup,
    MappingTorusSpec,
    extend_tower,
    extended_presentation,
    mapping_torus,
)
from .presentation import (
    AutomorphismSpec,
    GroupPresentation,
    PresentationError,
    free_abelian_presentation,
    parse_presentation,
    parse_word,
    trivial_presentation,
)
from .ring import RingElement, RingMatrix, apply_automorphism, parse_ring_element
from .towers import (
    QuotientLevel,
    QuotientTower,
    cyclic_tower,
    grid_tower,
    induced_automorphism,
    trivial_tower,
    validate_automorphism,
    validate_tower,
)

__version__ = "0.1.0"
