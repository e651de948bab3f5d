"""Exact rank and determinant of integer matrices.

Small matrices go through fraction-free (Bareiss) elimination over arbitrary
precision integers.  Larger ones use Gaussian elimination modulo several
fixed word-sized primes with blocked float64 arithmetic (all intermediate
values stay below 2^53, so the modular computation is exact).  A prime can
only underestimate the rational rank, never overestimate it, so the maximum
over primes is reported; the prime list is extended until two consecutive
primes agree.  The engine additionally cross-checks kernel dimensions against
spectral counts, so a silently unlucky prime set would still be flagged.
"""

from __future__ import annotations

import numpy as np

# Primes just below sqrt(2^31): accumulating up to ~2^12 products of two
# residues stays far below 2^53 in float64.
MODULAR_PRIMES = (46337, 46327, 46309, 46307, 46301, 46279, 46273, 46271)

BAREISS_LIMIT = 128
_PANEL = 64


def bareiss_elimination(rows: list[list[int]]) -> tuple[int, int]:
    """Fraction-free elimination; returns (rank, last pivot with sign).

    For a square full-rank input the second component is the determinant.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    M = [list(map(int, row)) for row in rows]
    rank = 0
    prev = 1
    sign = 1
    last_pivot = 1
    for col in range(n):
        if rank >= m:
            break
        pivot_row = None
        for i in range(rank, m):
            if M[i][col]:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        if pivot_row != rank:
            M[rank], M[pivot_row] = M[pivot_row], M[rank]
            sign = -sign
        pivot = M[rank][col]
        for i in range(rank + 1, m):
            factor = M[i][col]
            row_i = M[i]
            row_r = M[rank]
            for j in range(col, n):
                row_i[j] = (row_i[j] * pivot - factor * row_r[j]) // prev
        prev = pivot
        last_pivot = pivot
        rank += 1
    return rank, sign * last_pivot


def bareiss_rank(A) -> int:
    rows = _as_int_rows(A)
    if not rows or not rows[0]:
        return 0
    return bareiss_elimination(rows)[0]


def bareiss_det(A) -> int:
    """Exact determinant of a square integer matrix."""
    rows = _as_int_rows(A)
    n = len(rows)
    if n == 0:
        return 1
    if any(len(r) != n for r in rows):
        raise ValueError("determinant requires a square matrix")
    rank, det = bareiss_elimination(rows)
    return det if rank == n else 0


def _as_int_rows(A) -> list[list[int]]:
    if isinstance(A, np.ndarray):
        return [[int(v) for v in row] for row in A]
    return [[int(v) for v in row] for row in A]


def _exact_mod(x: np.ndarray, p: int) -> np.ndarray:
    """Residues in [0, p) of exact-integer-valued float64 data.

    fmod is exact for IEEE doubles, so this never rounds as long as the
    inputs are integers below 2^53 in magnitude.
    """
    r = np.fmod(x, p)
    np.add(r, p, out=r, where=r < 0)
    return r


def rank_mod_prime(A: np.ndarray, p: int, panel: int = _PANEL) -> int:
    """Rank of an integer matrix modulo p via blocked float64 elimination.

    Entries are exact integers carried in float64.  Schur complements
    accumulate at most ``rows * p^2`` per entry, below 2^53 for the primes in
    ``MODULAR_PRIMES`` up to several thousand rows, so no rounding occurs and
    the modular result is exact.
    """
    M = np.asarray(A)
    if M.size == 0:
        return 0
    m, n = M.shape
    if (max(m, n) + 1) * p * p >= 2**53:
        raise ValueError("matrix too large for this modulus without rounding")
    if M.dtype == object:
        M = np.array([[int(v) % p for v in row] for row in M], dtype=np.float64)
    else:
        M = np.mod(M, p).astype(np.float64)
    rank = 0
    col = 0
    while col < n and rank < m:
        panel_end = min(col + panel, n)
        width = panel_end - col
        P = _exact_mod(M[:, col:panel_end], p)
        Lp = np.zeros((m, width), dtype=np.float64)
        invs: list[float] = []
        q = 0
        r0 = rank
        for c in range(width):
            r = r0 + q
            nz = np.nonzero(P[r:, c])[0]
            if nz.size == 0:
                continue
            pr = r + int(nz[0])
            if pr != r:
                P[[r, pr]] = P[[pr, r]]
                M[[r, pr]] = M[[pr, r]]
                Lp[[r, pr]] = Lp[[pr, r]]
            inv = float(pow(int(P[r, c]), p - 2, p))
            P[r, c:] = _exact_mod(P[r, c:] * inv, p)
            mult = P[r + 1 :, c].copy()
            if mult.size:
                P[r + 1 :, c:] = _exact_mod(
                    P[r + 1 :, c:] - mult[:, None] * P[r, c:][None, :], p
                )
            Lp[r + 1 :, q] = mult
            invs.append(inv)
            q += 1
        if q and panel_end < n:
            # forward-substitute the pivot rows of the trailing block with the
            # same pivot normalizations used inside the panel, then one Schur
            # update for everything below
            U = _exact_mod(M[r0 : r0 + q, panel_end:], p)
            U[0] = _exact_mod(U[0] * invs[0], p)
            for j in range(1, q):
                U[j] = _exact_mod((_exact_mod(U[j] - Lp[r0 + j, :j] @ U[:j], p)) * invs[j], p)
            M[r0 : r0 + q, panel_end:] = U
            below = M[r0 + q :, panel_end:]
            if below.size:
                below -= Lp[r0 + q :, :q] @ U
        M[:, col:panel_end] = P
        rank += q
        col = panel_end
    return rank


def exact_rank(A: np.ndarray, bareiss_limit: int = BAREISS_LIMIT) -> int:
    """Rank over the rationals.

    Dispatches to fraction-free elimination when small, multi-prime modular
    elimination when large (maximum over primes, extended until stable).
    """
    M = np.asarray(A)
    if M.size == 0:
        return 0
    if max(M.shape) <= bareiss_limit:
        return bareiss_rank(M)
    ranks = [rank_mod_prime(M, p) for p in MODULAR_PRIMES[:3]]
    extra = 3
    while len(set(ranks[-2:])) > 1 and extra < len(MODULAR_PRIMES):
        ranks.append(rank_mod_prime(M, MODULAR_PRIMES[extra]))
        extra += 1
    return max(ranks)


def kernel_dimension(A: np.ndarray, bareiss_limit: int = BAREISS_LIMIT) -> int:
    M = np.asarray(A)
    if M.size == 0:
        return M.shape[1] if M.ndim == 2 else 0
    return M.shape[1] - exact_rank(M, bareiss_limit)
