import random

import numpy as np
import pytest

from l2torsion.intrank import (
    MODULAR_PRIMES,
    bareiss_det,
    bareiss_rank,
    exact_rank,
    kernel_dimension,
    rank_mod_prime,
)

from conftest import random_int_matrix


def test_primes_are_prime_and_small_enough():
    from l2torsion.growth import _is_prime

    for p in MODULAR_PRIMES:
        assert _is_prime(p)
        assert p * p * 8192 < 2**53  # float64 exactness budget


def test_bareiss_det_known_values():
    assert bareiss_det([[4, 3, 0], [-3, 4, 0], [0, 0, 5]]) == 125
    assert bareiss_det([[2]]) == 2
    assert bareiss_det([[1, 2], [2, 4]]) == 0
    assert bareiss_det([]) == 1


def test_bareiss_rank_and_modular_agree_random():
    rng = random.Random(41)
    for _ in range(40):
        m, n = rng.randint(1, 12), rng.randint(1, 12)
        M = np.array(random_int_matrix(rng, m, n, 5))
        rb = bareiss_rank(M)
        for p in MODULAR_PRIMES[:2]:
            assert rank_mod_prime(M, p) <= rb
        assert exact_rank(M) == rb


def test_rank_of_constructed_low_rank_matrix():
    rng = random.Random(9)
    for _ in range(5):
        m, n, r = 150, 210, rng.randint(1, 6)
        A = np.array(random_int_matrix(rng, m, r, 3))
        B = np.array(random_int_matrix(rng, r, n, 3))
        if bareiss_rank(A) < r or bareiss_rank(B) < r:
            continue  # degenerate draw; the seed avoids this in practice
        # dims exceed the Bareiss limit, so this exercises the modular path
        assert exact_rank(A @ B) == r


def test_blocked_elimination_matches_unblocked():
    rng = random.Random(5)
    p = MODULAR_PRIMES[0]
    for _ in range(10):
        m, n = rng.randint(1, 90), rng.randint(1, 90)
        M = np.array(random_int_matrix(rng, m, n, 20))
        assert rank_mod_prime(M, p, panel=7) == rank_mod_prime(M, p, panel=64)


def test_circulant_corank():
    # shift-minus-identity has corank exactly 1 at every size
    for k in (5, 17, 150):
        P = np.zeros((k, k), dtype=np.int64)
        P[np.arange(k), (np.arange(k) - 1) % k] = 1
        M = P - np.eye(k, dtype=np.int64)
        assert kernel_dimension(M) == 1


def test_empty_and_zero_matrices():
    assert exact_rank(np.zeros((0, 5), dtype=np.int64)) == 0
    assert exact_rank(np.zeros((4, 4), dtype=np.int64)) == 0
    assert kernel_dimension(np.zeros((3, 7), dtype=np.int64)) == 7


def test_object_dtype_supported():
    M = np.array([[2**70, 1], [0, 3]], dtype=object)
    assert rank_mod_prime(M, MODULAR_PRIMES[0]) == 2
