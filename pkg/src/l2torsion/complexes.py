"""Finite free chain complexes over an integral group ring.

``ranks[n]`` counts the equivariant n-cells (the rank of the free module in
degree n) and ``boundaries`` holds the boundary matrices.  The composite
``boundary(n-1) @ boundary(n)`` is never checked symbolically; it is verified
to vanish at every supplied quotient level in exact integer arithmetic.

Cells may carry finite stabilizer orders as data, but the numeric engine only
accepts all-free complexes; complexes with proper cells are meant to be
handled through the combination-rule evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationFailure
from .presentation import GroupPresentation
from .ring import RingMatrix
from .towers import QuotientLevel, QuotientTower


@dataclass(frozen=True)
class ChainComplex:
    presentation: GroupPresentation
    ranks: tuple[int, ...]
    boundaries: tuple[RingMatrix, ...]
    stabilizer_orders: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if any(r < 0 for r in self.ranks):
            raise ValidationFailure("ranks must be nonnegative")
        expected = max(len(self.ranks) - 1, 0)
        if len(self.boundaries) != expected:
            raise ValidationFailure(
                f"expected {expected} boundary matrices for {len(self.ranks)} degrees, "
                f"got {len(self.boundaries)}"
            )
        for n, mat in enumerate(self.boundaries, start=1):
            if (mat.rows, mat.cols) != (self.ranks[n - 1], self.ranks[n]):
                raise ValidationFailure(
                    f"boundary in degree {n} has shape {mat.rows}x{mat.cols}, "
                    f"expected {self.ranks[n - 1]}x{self.ranks[n]}"
                )
            if mat.max_generator() >= self.presentation.rank:
                raise ValidationFailure(
                    f"boundary in degree {n} uses an undeclared generator"
                )
        if self.stabilizer_orders is not None:
            if len(self.stabilizer_orders) != len(self.ranks):
                raise ValidationFailure("stabilizer orders must cover every degree")
            for n, orders in enumerate(self.stabilizer_orders):
                if len(orders) != self.ranks[n]:
                    raise ValidationFailure(
                        f"degree {n}: expected {self.ranks[n]} stabilizer orders"
                    )
                if any(o < 1 for o in orders):
                    raise ValidationFailure("stabilizer orders must be positive")

    @property
    def dim(self) -> int:
        return len(self.ranks) - 1

    def rank(self, n: int) -> int:
        if 0 <= n < len(self.ranks):
            return self.ranks[n]
        return 0

    def boundary(self, n: int) -> RingMatrix:
        """The boundary C_n -> C_{n-1}; zero matrix outside the stored range."""
        if 1 <= n <= self.dim:
            return self.boundaries[n - 1]
        return RingMatrix.zeros(self.rank(n - 1), self.rank(n))

    def is_free(self) -> bool:
        if self.stabilizer_orders is None:
            return True
        return all(o == 1 for orders in self.stabilizer_orders for o in orders)

    def total_rank(self) -> int:
        return sum(self.ranks)


def require_free(C: ChainComplex, what: str) -> None:
    if not C.is_free():
        raise ValidationFailure(
            f"{what} requires a free complex; cells with finite stabilizers must be "
            "routed through the combination-rule evaluator"
        )


@dataclass
class DegreeCheck:
    level_label: int
    degree: int
    max_abs: int

    @property
    def passed(self) -> bool:
        return self.max_abs == 0


@dataclass
class ComplexReport:
    checks: list[DegreeCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> DegreeCheck | None:
        for c in self.checks:
            if not c.passed:
                return c
        return None

    def summary(self) -> str:
        lines = [
            f"level {c.level_label}, degree {c.degree}: max |d o d| = {c.max_abs} "
            + ("(pass)" if c.passed else "(FAIL)")
            for c in self.checks
        ]
        lines.append("complex: " + ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)


def _exact_product_max_abs(a: np.ndarray, b: np.ndarray) -> int:
    """max |(a @ b)_{ij}| with an exactness guard on the float path."""
    if a.size == 0 or b.size == 0:
        return 0
    bound = a.shape[1] * int(np.abs(a).max(initial=0)) * int(np.abs(b).max(initial=0))
    if bound < 2**53:
        prod = a.astype(np.float64) @ b.astype(np.float64)
        return int(np.abs(prod).max(initial=0.0))
    prod = a.astype(object) @ b.astype(object)
    return int(max((abs(v) for v in prod.flat), default=0))


def validate_complex(C: ChainComplex, tower: QuotientTower) -> ComplexReport:
    """Check d o d = 0 at every level in exact integer arithmetic."""
    from .engine import evaluate_matrix

    checks = []
    for level in tower.levels:
        evaluated = {n: evaluate_matrix(C.boundary(n), level).matrix for n in range(1, C.dim + 1)}
        for n in range(2, C.dim + 1):
            max_abs = _exact_product_max_abs(evaluated[n - 1], evaluated[n])
            checks.append(DegreeCheck(level.label, n, max_abs))
    return ComplexReport(checks)


def laplacian(C: ChainComplex, p: int) -> RingMatrix:
    """The degree-p combinatorial Laplacian d_p* d_p + d_{p+1} d_{p+1}*."""
    if not 0 <= p <= C.dim:
        raise ValidationFailure(f"degree {p} out of range 0..{C.dim}")
    down = C.boundary(p)
    up = C.boundary(p + 1)
    return down.star() @ down + up @ up.star()


def circle_complex(presentation: GroupPresentation, generator: int = 0) -> ChainComplex:
    """Ranks [1, 1] with boundary (g - 1): the equivariant circle over <g>."""
    from .ring import RingElement

    boundary = RingMatrix(
        1,
        1,
        {(0, 0): RingElement.generator(generator) - RingElement.one()},
    )
    return ChainComplex(presentation, (1, 1), (boundary,))


def torus_complex(presentation: GroupPresentation, a: int = 0, b: int = 1) -> ChainComplex:
    """Ranks [1, 2, 1]: the standard free resolution of Z over Z[Z^2]."""
    from .ring import RingElement

    one = RingElement.one()
    ea = RingElement.generator(a) - one
    eb = RingElement.generator(b) - one
    d1 = RingMatrix(1, 2, {(0, 0): ea, (0, 1): eb})
    d2 = RingMatrix(2, 1, {(0, 0): -eb, (1, 0): ea})
    return ChainComplex(presentation, (1, 2, 1), (d1, d2))


def point_complex(presentation: GroupPresentation) -> ChainComplex:
    """A single free 0-cell."""
    return ChainComplex(presentation, (1,), ())


def direct_sum(a: ChainComplex, b: ChainComplex, shift: int = 0) -> ChainComplex:
    """Degreewise direct sum, with b shifted up by ``shift`` degrees."""
    if a.presentation != b.presentation:
        raise ValidationFailure("direct sum requires a common presentation")
    dim = max(a.dim, b.dim + shift)
    ranks = tuple(a.rank(n) + b.rank(n - shift) for n in range(dim + 1))
    boundaries = []
    for n in range(1, dim + 1):
        block = RingMatrix.block(
            [
                [a.boundary(n), RingMatrix.zeros(a.rank(n - 1), b.rank(n - shift))],
                [RingMatrix.zeros(b.rank(n - 1 - shift), a.rank(n)), b.boundary(n - shift)],
            ]
        )
        boundaries.append(block)
    return ChainComplex(a.presentation, ranks, tuple(boundaries))
