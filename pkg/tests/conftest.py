import math
import random
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import settings

from l2torsion import (
    ChainComplex,
    RingElement,
    RingMatrix,
    circle_complex,
    parse_presentation,
    parse_ring_element,
    point_complex,
    torus_complex,
    trivial_presentation,
)

settings.register_profile("ci", derandomize=True, max_examples=60)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def Z():
    return parse_presentation("gens a; rels ;")


@pytest.fixture(scope="session")
def Z2():
    return parse_presentation("gens a b; rels a b A B;")


@pytest.fixture(scope="session")
def F2():
    return parse_presentation("gens a b; rels ;")


@pytest.fixture(scope="session")
def TRIV():
    return trivial_presentation()


@pytest.fixture(scope="session")
def circle(Z):
    return circle_complex(Z)


@pytest.fixture(scope="session")
def torus(Z2):
    return torus_complex(Z2)


@pytest.fixture(scope="session")
def point(TRIV):
    return point_complex(TRIV)


@pytest.fixture(scope="session")
def a_minus_2_complex(Z):
    elt = parse_ring_element("a - 2", Z)
    return ChainComplex(Z, (1, 1), (RingMatrix(1, 1, {(0, 0): elt}),))


def random_word(rng: random.Random, rank: int, max_len: int = 4):
    syllables = []
    for _ in range(rng.randint(0, max_len)):
        syllables.append((rng.randrange(rank), rng.choice((-2, -1, 1, 2))))
    from l2torsion.words import free_reduce

    return free_reduce(syllables)


def random_ring_element(rng: random.Random, rank: int, terms: int = 3) -> RingElement:
    out = RingElement.zero()
    for _ in range(rng.randint(1, terms)):
        out = out + RingElement.from_word(random_word(rng, rank), rng.randint(-3, 3))
    return out


# ---------------------------------------------------------------------------
# independent oracles


def sylvester_resultant(p: list[int], q: list[int]) -> int:
    """Resultant of two integer polynomials (coefficient lists, ascending)
    via the Sylvester matrix and fraction-free elimination."""
    from l2torsion.intrank import bareiss_det

    while p and p[-1] == 0:
        p = p[:-1]
    while q and q[-1] == 0:
        q = q[:-1]
    m, n = len(p) - 1, len(q) - 1
    if m < 0 or n < 0:
        return 0
    if m == 0:
        return p[0] ** n
    if n == 0:
        return q[0] ** m
    size = m + n
    rows = []
    for i in range(n):
        row = [0] * size
        for j, c in enumerate(reversed(p)):
            row[i + j] = c
        rows.append(row)
    for i in range(m):
        row = [0] * size
        for j, c in enumerate(reversed(q)):
            row[i + j] = c
        rows.append(row)
    return bareiss_det(rows)


def minor_gcd_invariant_factors(M: list[list[int]]) -> list[int]:
    """Invariant factors from determinantal divisors (brute force over all
    minors); only usable for tiny matrices."""
    m, n = len(M), len(M[0]) if M else 0
    arr = np.array(M, dtype=object)
    divisors = [1]
    k = 1
    while k <= min(m, n):
        g = 0
        for rows in combinations(range(m), k):
            for cols in combinations(range(n), k):
                sub = [[int(arr[r, c]) for c in cols] for r in rows]
                from l2torsion.intrank import bareiss_det

                g = math.gcd(g, abs(bareiss_det(sub)))
        if g == 0:
            break
        divisors.append(g)
        k += 1
    return [divisors[i] // divisors[i - 1] for i in range(1, len(divisors))]


def naive_snf_factors(M: list[list[int]]) -> list[int]:
    """Straightforward textbook row/column reduction, no pivoting tricks."""
    work = [list(map(int, row)) for row in M]
    m = len(work)
    n = len(work[0]) if m else 0
    factors = []
    k = 0
    while k < min(m, n):
        # locate any nonzero entry
        found = None
        for i in range(k, m):
            for j in range(k, n):
                if work[i][j]:
                    found = (i, j)
                    break
            if found:
                break
        if not found:
            break
        i, j = found
        work[k], work[i] = work[i], work[k]
        for row in work:
            row[k], row[j] = row[j], row[k]
        while True:
            progress = False
            for i in range(k + 1, m):
                if work[i][k]:
                    q = work[i][k] // work[k][k]
                    for t in range(n):
                        work[i][t] -= q * work[k][t]
                    if work[i][k]:
                        work[k], work[i] = work[i], work[k]
                        progress = True
            for j in range(k + 1, n):
                if work[k][j]:
                    q = work[k][j] // work[k][k]
                    for i2 in range(m):
                        work[i2][j] -= q * work[i2][k]
                    if work[k][j]:
                        for row in work:
                            row[k], row[j] = row[j], row[k]
                        progress = True
            if progress:
                continue
            bad = None
            for i in range(k + 1, m):
                for j in range(k + 1, n):
                    if work[i][j] % work[k][k]:
                        bad = i
                        break
                if bad:
                    break
            if bad is None:
                break
            for t in range(n):
                work[k][t] += work[bad][t]
        if work[k][k] < 0:
            work[k] = [-v for v in work[k]]
        factors.append(work[k][k])
        k += 1
    return factors


def mat_mult_int(A: list[list[int]], B: list[list[int]]) -> list[list[int]]:
    rows, inner, cols = len(A), len(B), len(B[0]) if B else 0
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        for t in range(inner):
            a = A[i][t]
            if a:
                for j in range(cols):
                    out[i][j] += a * B[t][j]
    return out


def random_int_matrix(rng: random.Random, m: int, n: int, bound: int = 9) -> list[list[int]]:
    return [[rng.randint(-bound, bound) for _ in range(n)] for _ in range(m)]
