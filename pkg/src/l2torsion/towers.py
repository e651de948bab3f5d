"""Towers of finite quotients given by generator permutations.

A quotient level is the regular permutation representation of a finite
quotient of the presented group: generator images are permutations of
``{0, ..., d-1}``, every relator must act trivially, and the generated group
must act transitively with order equal to the degree.  Regularity is what lets
the index ``[G : G_i]`` be read off as the degree, which is the normalization
used throughout the approximation engine.

Whether the chain of kernels intersects trivially is not machine-checkable
and is a declared trust assumption on the supplied tower.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationFailure
from .presentation import AutomorphismSpec, GroupPresentation
from .words import Word

_CLOSURE_CAP = 200_000  # element cap when enumerating a group order for diagnostics


@dataclass(frozen=True)
class QuotientLevel:
    """A finite quotient in its regular representation.

    ``images[g]`` is the permutation of ``{0, ..., degree-1}`` by which
    generator ``g`` acts; point 0 plays the role of the identity coset.
    """

    degree: int
    images: tuple[tuple[int, ...], ...]
    label: int = 0

    def __post_init__(self):
        if self.degree < 1:
            raise ValidationFailure("level degree must be positive")
        for g, perm in enumerate(self.images):
            if len(perm) != self.degree or sorted(perm) != list(range(self.degree)):
                raise ValidationFailure(
                    f"level {self.label}: image of generator {g} is not a permutation "
                    f"of degree {self.degree}"
                )

    def arrays(self) -> list[np.ndarray]:
        return [np.asarray(p, dtype=np.int64) for p in self.images]


def perm_inverse(p: np.ndarray) -> np.ndarray:
    inv = np.empty_like(p)
    inv[p] = np.arange(len(p), dtype=p.dtype)
    return inv


def perm_power(p: np.ndarray, n: int) -> np.ndarray:
    if n < 0:
        return perm_power(perm_inverse(p), -n)
    result = np.arange(len(p), dtype=p.dtype)
    base = p
    while n:
        if n & 1:
            result = result[base]
        base = base[base]
        n >>= 1
    return result


def perm_order(p: np.ndarray) -> int:
    """Order of a permutation: lcm of its cycle lengths."""
    n = len(p)
    seen = np.zeros(n, dtype=bool)
    order = 1
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        x = start
        while not seen[x]:
            seen[x] = True
            x = p[x]
            length += 1
        order = int(np.lcm(order, length))
    return order


def word_permutation(level: QuotientLevel, word: Word, arrays: list[np.ndarray] | None = None) -> np.ndarray:
    """Permutation by which a word acts, composing left to right."""
    if arrays is None:
        arrays = level.arrays()
    acc = np.arange(level.degree, dtype=np.int64)
    for gen, exp in word:
        if gen >= len(arrays):
            raise ValidationFailure(
                f"level {level.label}: word uses undeclared generator index {gen}"
            )
        acc = acc[perm_power(arrays[gen], exp)]
    return acc


@dataclass(frozen=True)
class QuotientTower:
    """A family of quotient levels with non-decreasing indices.

    ``connecting_maps[i]``, when present, is a generator assignment describing
    a surjection from level ``i+1`` onto level ``i``; when absent the levels
    are treated as an unordered family.
    """

    levels: tuple[QuotientLevel, ...]
    connecting_maps: tuple[tuple[Word, ...], ...] | None = None

    def __post_init__(self):
        degrees = [lv.degree for lv in self.levels]
        if any(d2 < d1 for d1, d2 in zip(degrees, degrees[1:])):
            raise ValidationFailure("tower indices must be non-decreasing")
        if self.connecting_maps is not None and len(self.connecting_maps) != max(
            len(self.levels) - 1, 0
        ):
            raise ValidationFailure("need one connecting map per adjacent level pair")

    def __len__(self) -> int:
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    @property
    def last_index(self) -> int:
        return self.levels[-1].degree


@dataclass
class LevelCheck:
    label: int
    degree: int
    relator_failures: list[int] = field(default_factory=list)
    transitive: bool = True
    orbit_size: int = 0
    regular: bool = True
    order: int | None = None
    connecting_ok: bool | None = None
    messages: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            not self.relator_failures
            and self.transitive
            and self.regular
            and self.connecting_ok is not False
        )


@dataclass
class TowerReport:
    checks: list[LevelCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            order = c.order if c.order is not None else "?"
            lines.append(
                f"level {c.label}: degree {c.degree}, order {order}, "
                f"transitive={c.transitive}, regular={c.regular}, "
                f"relator failures={c.relator_failures or 'none'} -> {status}"
            )
            lines.extend("  " + m for m in c.messages)
        lines.append("tower: " + ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)


def _orbit_of_zero(arrays: list[np.ndarray], degree: int) -> np.ndarray:
    seen = np.zeros(degree, dtype=bool)
    seen[0] = True
    frontier = [0]
    count = 1
    while frontier:
        nxt = []
        for x in frontier:
            for p in arrays:
                y = int(p[x])
                if not seen[y]:
                    seen[y] = True
                    nxt.append(y)
                    count += 1
        frontier = nxt
    return seen


def _regular_transversal(arrays: list[np.ndarray], degree: int) -> np.ndarray | None:
    """BFS transversal ``U[x]`` = unique element with ``U[x](0) = x``.

    Returns the ``(degree, degree)`` table if the action is regular, else
    ``None``.  A revisit producing a different permutation witnesses a
    nontrivial point stabilizer (Schreier generator) and refutes regularity.
    """
    idx = np.arange(degree, dtype=np.int64)
    table = np.full((degree, degree), -1, dtype=np.int64)
    table[0] = idx
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            ux = table[x]
            for p in arrays:
                q = p[ux]
                y = int(q[0])
                if table[y][0] < 0:
                    table[y] = q
                    nxt.append(y)
                elif not np.array_equal(table[y], q):
                    return None
        frontier = nxt
    if any(table[x][0] < 0 for x in range(degree)):
        return None
    return table


def _closure_order(arrays: list[np.ndarray], degree: int, cap: int = _CLOSURE_CAP) -> int | None:
    """Order of the generated permutation group by closure, or None past cap."""
    identity = np.arange(degree, dtype=np.int64)
    seen = {identity.tobytes()}
    frontier = [identity]
    while frontier:
        nxt = []
        for q in frontier:
            for p in arrays:
                r = p[q]
                key = r.tobytes()
                if key not in seen:
                    seen.add(key)
                    if len(seen) > cap:
                        return None
                    nxt.append(r)
        frontier = nxt
    return len(seen)


def check_level(G: GroupPresentation, level: QuotientLevel) -> LevelCheck:
    check = LevelCheck(label=level.label, degree=level.degree)
    if len(level.images) != G.rank:
        raise ValidationFailure(
            f"level {level.label}: expected {G.rank} generator images, got {len(level.images)}"
        )
    arrays = level.arrays()
    identity = np.arange(level.degree, dtype=np.int64)
    for k, rel in enumerate(G.relators):
        if not np.array_equal(word_permutation(level, rel, arrays), identity):
            check.relator_failures.append(k)
            check.messages.append(
                f"relator {k} ({G.word_to_str(rel)}) does not act trivially at level {level.label}"
            )
    orbit = _orbit_of_zero(arrays, level.degree)
    check.orbit_size = int(orbit.sum())
    check.transitive = check.orbit_size == level.degree
    if not check.transitive:
        check.regular = False
        check.messages.append(
            f"action not transitive: orbit of 0 has size {check.orbit_size} < degree {level.degree}"
        )
    else:
        table = _regular_transversal(arrays, level.degree)
        check.regular = table is not None
        if check.regular:
            check.order = level.degree
    if not check.regular:
        order = _closure_order(arrays, level.degree)
        check.order = order
        shown = order if order is not None else f"> {_CLOSURE_CAP}"
        check.messages.append(
            f"action not regular: group order {shown} != degree {level.degree}"
        )
    return check


def _check_connecting_map(
    G: GroupPresentation, assignment: tuple[Word, ...], target: QuotientLevel
) -> tuple[bool, str | None]:
    if len(assignment) != G.rank:
        return False, "connecting map must assign a word to every generator"
    arrays = target.arrays()
    images = [word_permutation(target, w, arrays) for w in assignment]
    identity = np.arange(target.degree, dtype=np.int64)
    for k, rel in enumerate(G.relators):
        acc = identity
        for gen, exp in rel:
            acc = acc[perm_power(images[gen], exp)]
        if not np.array_equal(acc, identity):
            return False, f"connecting map does not kill relator {k} at level {target.label}"
    orbit = _orbit_of_zero(images, target.degree)
    if int(orbit.sum()) != target.degree:
        return False, f"connecting map is not surjective onto level {target.label}"
    return True, None


def validate_tower(G: GroupPresentation, tower: QuotientTower) -> TowerReport:
    """Per level: relator check, transitivity, regularity (order = degree),
    and connecting-map checks where maps are supplied."""
    checks = [check_level(G, level) for level in tower.levels]
    if tower.connecting_maps is not None:
        for i, assignment in enumerate(tower.connecting_maps):
            ok, msg = _check_connecting_map(G, assignment, tower.levels[i])
            checks[i + 1].connecting_ok = ok
            if msg:
                checks[i + 1].messages.append(msg)
    return TowerReport(checks)


class LevelNotInvariant(ValidationFailure):
    def __init__(self, label: int, generator: str | None):
        if generator is not None:
            detail = f"equivariance fails at generator {generator!r}"
        else:
            detail = "the induced endomorphism is not bijective"
        super().__init__(
            f"level {label}: automorphism does not descend to the quotient; {detail}"
        )
        self.label = label
        self.generator = generator


def induced_automorphism(
    G: GroupPresentation, level: QuotientLevel, phi: AutomorphismSpec
) -> np.ndarray:
    """Point map of the automorphism the generator images induce on a level.

    Propagates images over a breadth-first spanning tree from the identity
    point and then verifies equivariance on every generator, which certifies
    well-definedness; bijectivity certifies automorphy.  Raises
    ``LevelNotInvariant`` naming the offending generator otherwise.
    """
    if len(phi.images) != G.rank:
        raise ValidationFailure("automorphism must supply an image per generator")
    arrays = level.arrays()
    image_arrays = [word_permutation(level, phi.images[g], arrays) for g in range(G.rank)]
    d = level.degree
    cmap = np.full(d, -1, dtype=np.int64)
    cmap[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for g in range(G.rank):
                y = int(arrays[g][x])
                if cmap[y] < 0:
                    cmap[y] = image_arrays[g][cmap[x]]
                    nxt.append(y)
        frontier = nxt
    if np.any(cmap < 0):
        raise ValidationFailure(
            f"level {level.label}: action is not transitive; validate the tower first"
        )
    for g in range(G.rank):
        if not np.array_equal(cmap[arrays[g]], image_arrays[g][cmap]):
            raise LevelNotInvariant(level.label, G.generators[g])
    if len(np.unique(cmap)) != d:
        raise LevelNotInvariant(level.label, None)
    return cmap


@dataclass
class AutomorphismReport:
    checks: list[LevelCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def validate_automorphism(
    G: GroupPresentation, phi: AutomorphismSpec, tower: QuotientTower
) -> AutomorphismReport:
    """At every level: relators map to the identity permutation, the images
    generate transitively (surjectivity), and the induced point map is a
    well-defined bijection."""
    checks = []
    for level in tower.levels:
        check = LevelCheck(label=level.label, degree=level.degree)
        arrays = level.arrays()
        image_arrays = [word_permutation(level, w, arrays) for w in phi.images]
        identity = np.arange(level.degree, dtype=np.int64)
        for k, rel in enumerate(G.relators):
            acc = identity
            for gen, exp in rel:
                acc = acc[perm_power(image_arrays[gen], exp)]
            if not np.array_equal(acc, identity):
                check.relator_failures.append(k)
                check.messages.append(f"image of relator {k} does not act trivially")
        orbit = _orbit_of_zero(image_arrays, level.degree)
        check.orbit_size = int(orbit.sum())
        check.transitive = check.orbit_size == level.degree
        if not check.transitive:
            check.messages.append("generator images do not generate the quotient")
        try:
            induced_automorphism(G, level, phi)
        except ValidationFailure as exc:
            check.regular = False
            check.messages.append(str(exc))
        checks.append(check)
    return AutomorphismReport(checks)


def cyclic_level(k: int, label: int | None = None) -> QuotientLevel:
    """The quotient Z -> Z/k with the generator acting as a k-cycle."""
    perm = tuple((x + 1) % k for x in range(k))
    return QuotientLevel(degree=k, images=(perm,), label=k if label is None else label)


def cyclic_tower(ks: Sequence[int]) -> QuotientTower:
    levels = tuple(cyclic_level(k) for k in ks)
    return QuotientTower(levels)


def grid_level(dims: Sequence[int], label: int | None = None) -> QuotientLevel:
    """The quotient Z^n -> Z/d1 x ... x Z/dn; generator i shifts coordinate i."""
    dims = tuple(dims)
    degree = 1
    for d in dims:
        degree *= d
    strides = []
    acc = 1
    for d in reversed(dims):
        strides.append(acc)
        acc *= d
    strides.reverse()
    coords = np.indices(dims).reshape(len(dims), -1)
    images = []
    for axis, d in enumerate(dims):
        shifted = coords.copy()
        shifted[axis] = (shifted[axis] + 1) % d
        flat = np.zeros(degree, dtype=np.int64)
        for s, row in zip(strides, shifted):
            flat += s * row
        images.append(tuple(int(v) for v in flat))
    return QuotientLevel(degree=degree, images=tuple(images), label=degree if label is None else label)


def grid_tower(n: int, ks: Sequence[int]) -> QuotientTower:
    """Tower of n-dimensional k x ... x k grid quotients for Z^n."""
    return QuotientTower(tuple(grid_level((k,) * n) for k in ks))


def trivial_tower(count: int = 1) -> QuotientTower:
    """Degree-1 levels for the trivial group (no generators)."""
    return QuotientTower(tuple(QuotientLevel(1, (), label=i) for i in range(count)))


def product_with_cyclic_level(level: QuotientLevel, m: int) -> QuotientLevel:
    """Level for G x Z from a level for G: the extra generator cycles a Z/m
    factor, existing generators act diagonally.  Points are (x, j) -> x*m + j."""
    d = level.degree
    images = []
    for perm in level.images:
        images.append(tuple(perm[x] * m + j for x in range(d) for j in range(m)))
    images.append(tuple(x * m + (j + 1) % m for x in range(d) for j in range(m)))
    return QuotientLevel(degree=d * m, images=tuple(images), label=level.label * m)


def orbit_transversal_words(level: QuotientLevel, rank: int) -> list[Word]:
    """Breadth-first words writing each point as a generator product from 0."""
    arrays = level.arrays()
    words: list[Word | None] = [None] * level.degree
    words[0] = ()
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for g in range(rank):
                y = int(arrays[g][x])
                if words[y] is None:
                    base = words[x]
                    assert base is not None
                    if base and base[-1][0] == g:
                        words[y] = base[:-1] + ((g, base[-1][1] + 1),)
                    else:
                        words[y] = base + ((g, 1),)
                    nxt.append(y)
        frontier = nxt
    if any(w is None for w in words):
        raise ValidationFailure(f"level {level.label}: action is not transitive")
    return [w for w in words if w is not None]
