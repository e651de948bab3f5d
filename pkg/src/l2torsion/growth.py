"""Integral homology torsion of finite covers and its growth statistics.

Smith normal forms are computed in exact arbitrary-precision arithmetic with
pivoting on the entry of minimal absolute value.  For large square
nonsingular inputs the workspace is additionally reduced modulo the exact
determinant: the determinant times the identity lies in the column span, so
entrywise reduction is a legitimate unimodular column operation on an
augmented presentation of the same cokernel.  This keeps entries from blowing
up exponentially, which is the main performance concern of naive SNF.

The lab reports sequences only; no limits are extrapolated or claimed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complexes import ChainComplex, require_free
from .engine import evaluate_matrix
from .errors import ValidationFailure
from .intrank import exact_rank
from .towers import QuotientLevel, QuotientTower

_MODULAR_MIN_DIM = 48


def _is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for word-sized integers."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _prime_stream(start: int = 46337):
    """Primes descending from ``start`` (small enough for exact float64
    modular elimination, see intrank)."""
    p = start
    while p > 3:
        if _is_prime(p):
            yield p
        p -= 2


@dataclass
class SnfResult:
    """Invariant factors (positive, divisibility chain), rank, torsion order,
    and optionally the unimodular transforms with U M V = D."""

    factors: tuple[int, ...]
    rank: int
    torsion: int
    rows: int
    cols: int
    U: list[list[int]] | None = None
    V: list[list[int]] | None = None


def _to_rows(M) -> list[list[int]]:
    if isinstance(M, np.ndarray):
        return [[int(v) for v in row] for row in M]
    return [[int(v) for v in row] for row in M]


def _det_mod_prime(M: np.ndarray, p: int) -> int:
    """Determinant mod p by float64 Gaussian elimination (exact, see intrank)."""
    if M.dtype == object:
        A = np.array([[int(v) % p for v in row] for row in M], dtype=np.float64)
    else:
        A = np.mod(M, p).astype(np.float64)
    n = A.shape[0]
    det = 1
    sign = 1
    for k in range(n):
        nz = np.nonzero(A[k:, k])[0]
        if nz.size == 0:
            return 0
        pr = k + int(nz[0])
        if pr != k:
            A[[k, pr]] = A[[pr, k]]
            sign = -sign
        pivot = int(A[k, k])
        det = (det * pivot) % p
        inv = float(pow(pivot, p - 2, p))
        if k + 1 < n:
            mult = np.fmod(A[k + 1 :, k] * inv, p)
            A[k + 1 :, k + 1 :] -= mult[:, None] * A[k, k + 1 :][None, :]
            A[k + 1 :, k + 1 :] = np.fmod(A[k + 1 :, k + 1 :], p)
            np.add(A[k + 1 :, k + 1 :], p, out=A[k + 1 :, k + 1 :], where=A[k + 1 :, k + 1 :] < 0)
    return (sign * det) % p


def integer_determinant(M) -> int:
    """Exact determinant via CRT over word-size primes (Hadamard bounded)."""
    rows = _to_rows(M)
    n = len(rows)
    if n == 0:
        return 1
    if any(len(r) != n for r in rows):
        raise ValidationFailure("determinant requires a square matrix")
    sq_norms = [sum(v * v for v in row) for row in rows]
    if any(v == 0 for v in sq_norms):
        return 0
    log_bound = 0.5 * sum(big_log(v) for v in sq_norms) + math.log(2)
    max_abs = max(abs(v) for row in rows for v in row)
    A64 = np.array(rows, dtype=np.int64) if max_abs < 2**62 else np.array(rows, dtype=object)
    modulus = 1
    value = 0
    acc_log = 0.0
    for p in _prime_stream():
        r = _det_mod_prime(A64, p)
        if modulus == 1:
            value, modulus = r % p, p
        else:
            # Garner lift: adjust by a multiple of the old modulus
            inv = pow(modulus % p, p - 2, p)
            diff = (r - value) % p
            value = value + modulus * ((diff * inv) % p)
            modulus *= p
        acc_log += math.log(p)
        if acc_log > log_bound:
            break
    if value > modulus // 2:
        value -= modulus
    return value


def _min_pivot(rows: list[list[int]], start: int, m: int, n: int) -> tuple[int, int] | None:
    best = None
    best_abs = None
    for i in range(start, m):
        row = rows[i]
        for j in range(start, n):
            v = row[j]
            if v:
                a = abs(v)
                if best_abs is None or a < best_abs:
                    best = (i, j)
                    best_abs = a
                    if a == 1:
                        return best
    return best


class _Transforms:
    """Row/column operation recorder producing unimodular U and V."""

    def __init__(self, m: int, n: int, enabled: bool):
        self.enabled = enabled
        if enabled:
            self.U = [[int(i == j) for j in range(m)] for i in range(m)]
            self.V = [[int(i == j) for j in range(n)] for i in range(n)]
        else:
            self.U = None
            self.V = None

    def swap_rows(self, i, k):
        if self.enabled:
            self.U[i], self.U[k] = self.U[k], self.U[i]

    def swap_cols(self, j, k):
        if self.enabled:
            for row in self.V:
                row[j], row[k] = row[k], row[j]

    def add_row(self, dst, src, factor):
        if self.enabled:
            dst_row, src_row = self.U[dst], self.U[src]
            for t in range(len(dst_row)):
                dst_row[t] += factor * src_row[t]

    def add_col(self, dst, src, factor):
        if self.enabled:
            for row in self.V:
                row[dst] += factor * row[src]

    def negate_row(self, i):
        if self.enabled:
            self.U[i] = [-v for v in self.U[i]]


def _divisibility_chain(values: list[int]) -> list[int]:
    """Sort elementary divisors into an invariant-factor chain by repeated
    gcd/lcm exchanges (the group they present is unchanged)."""
    factors = [abs(v) for v in values if v]
    changed = True
    while changed:
        changed = False
        for i in range(len(factors)):
            for j in range(i + 1, len(factors)):
                a, b = factors[i], factors[j]
                if b % a:
                    g = math.gcd(a, b)
                    factors[i], factors[j] = g, a * b // g
                    changed = True
    return factors


def smith_normal_form(
    M,
    want_transforms: bool = False,
    modular: str = "auto",
) -> SnfResult:
    """Exact Smith normal form.

    ``modular='auto'`` reduces the workspace modulo the determinant for large
    square nonsingular inputs (transforms disabled); ``'never'`` forces the
    plain arbitrary-precision path; ``'always'`` forces the modular path when
    legal.
    """
    rows = _to_rows(M)
    m = len(rows)
    n = len(rows[0]) if m else 0
    if any(len(r) != n for r in rows):
        raise ValidationFailure("ragged integer matrix")

    modulus = None
    if modular != "never" and not want_transforms and m == n and n >= (_MODULAR_MIN_DIM if modular == "auto" else 0) and n > 0:
        det = integer_determinant(rows)
        if det != 0:
            modulus = abs(det)

    if modulus is not None:
        factors = _snf_factors_modular(rows, modulus)
        torsion = 1
        for f in factors:
            if f > 1:
                torsion *= f
        return SnfResult(tuple(factors), len(factors), torsion, m, n)

    return _snf_plain(rows, m, n, want_transforms)


def _nearest_quotient(v: int, d: int) -> int:
    """Quotient minimizing |v - q d| for positive d (ties toward zero rest)."""
    q, r = divmod(v, d)
    if 2 * r > d:
        q += 1
    return q


def _snf_plain(rows: list[list[int]], m: int, n: int, want_transforms: bool) -> SnfResult:
    """Gcd elimination with the submatrix minimum re-selected as pivot every
    round and nearest-integer division; this is what keeps entry growth tame
    on dense inputs."""
    work = [row[:] for row in rows]
    tr = _Transforms(m, n, want_transforms)
    k = 0
    limit = min(m, n)
    while k < limit:
        pivot = _min_pivot(work, k, m, n)
        if pivot is None:
            break
        while True:
            pi, pj = pivot
            if pi != k:
                work[pi], work[k] = work[k], work[pi]
                tr.swap_rows(pi, k)
            if pj != k:
                for row in work:
                    row[pj], row[k] = row[k], row[pj]
                tr.swap_cols(pj, k)
            if work[k][k] < 0:
                work[k] = [-v for v in work[k]]
                tr.negate_row(k)
            d = work[k][k]
            # reduce the pivot column and row by nearest multiples; leftover
            # remainders are strictly smaller than d and become the next pivot
            remainder_left = False
            for i in range(k + 1, m):
                v = work[i][k]
                if v:
                    q = _nearest_quotient(v, d)
                    if q:
                        row_i, row_k = work[i], work[k]
                        for t in range(k, n):
                            row_i[t] -= q * row_k[t]
                        tr.add_row(i, k, -q)
                    if work[i][k]:
                        remainder_left = True
            for j in range(k + 1, n):
                v = work[k][j]
                if v:
                    q = _nearest_quotient(v, d)
                    if q:
                        for row_idx in range(k, m):
                            work[row_idx][j] -= q * work[row_idx][k]
                        tr.add_col(j, k, -q)
                    if work[k][j]:
                        remainder_left = True
            if remainder_left:
                pivot = _min_pivot(work, k, m, n)
                continue
            # pivot row and column are clear; enforce divisibility
            offender = None
            for i in range(k + 1, m):
                row = work[i]
                for j in range(k + 1, n):
                    if row[j] % d:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_o, row_k = work[offender], work[k]
            for t in range(k, n):
                row_k[t] += row_o[t]
            tr.add_row(k, offender, 1)
            pivot = _min_pivot(work, k, m, n)
        k += 1
    factors = [work[i][i] for i in range(k)]
    torsion = 1
    for f in factors:
        if f > 1:
            torsion *= f
    return SnfResult(tuple(factors), k, torsion, m, n, tr.U, tr.V)


def _symmetric_mod(v: int, modulus: int) -> int:
    r = v % modulus
    if 2 * r > modulus:
        r -= modulus
    return r


def _snf_factors_modular(rows: list[list[int]], modulus: int) -> list[int]:
    """Invariant factors of a square nonsingular matrix with |det| = modulus.

    Entrywise reduction mod the determinant is a legal column operation on the
    augmented presentation [A | det * I] of the same cokernel, so the plain
    gcd elimination runs on symmetric residues; the final factors are
    gcds with the determinant, rechained and checked against it.
    """
    work = [[_symmetric_mod(v, modulus) for v in row] for row in rows]
    m = len(work)
    n = m
    k = 0
    while k < n:
        pivot = _min_pivot(work, k, m, n)
        if pivot is None:
            break
        pi, pj = pivot
        if pi != k:
            work[pi], work[k] = work[k], work[pi]
        if pj != k:
            for row in work:
                row[pj], row[k] = row[k], row[pj]
        while True:
            dirty = False
            for i in range(k + 1, m):
                if work[i][k]:
                    q = work[i][k] // work[k][k]
                    if q:
                        row_i, row_k = work[i], work[k]
                        for t in range(k, n):
                            row_i[t] = _symmetric_mod(row_i[t] - q * row_k[t], modulus)
                    if work[i][k]:
                        work[i], work[k] = work[k], work[i]
                        dirty = True
            for j in range(k + 1, n):
                if work[k][j]:
                    q = work[k][j] // work[k][k]
                    if q:
                        for row_idx in range(k, m):
                            work[row_idx][j] = _symmetric_mod(
                                work[row_idx][j] - q * work[row_idx][k], modulus
                            )
                    if work[k][j]:
                        for row_idx in range(m):
                            row = work[row_idx]
                            row[j], row[k] = row[k], row[j]
                        dirty = True
            if not dirty:
                break
        k += 1
    diag = [abs(work[i][i]) for i in range(k)]
    # entries reduced mod the determinant: zero residues are really det-multiples
    elementary = [math.gcd(d if d else modulus, modulus) for d in diag]
    elementary.extend([modulus] * (n - k) if k < n else [])
    # a diagonal entry of 0 mod det stands for det itself; pad deficiencies
    elementary = [e if e else modulus for e in elementary]
    factors = _divisibility_chain(elementary)
    product = 1
    for f in factors:
        product *= f
    if product != modulus:
        raise ArithmeticError(
            "modular SNF consistency check failed (product of factors != |det|)"
        )
    return factors


def cover_boundary(C: ChainComplex, level: QuotientLevel, n: int) -> list[list[int]]:
    """The boundary of the finite cover: the level shadow read over Z."""
    require_free(C, "cover_boundary")
    shadow = evaluate_matrix(C.boundary(n), level).matrix
    return [[int(v) for v in row] for row in shadow]


@dataclass
class HomologyResult:
    degree: int
    free_rank: int
    torsion_factors: tuple[int, ...]
    torsion: int


def homology(C: ChainComplex, level: QuotientLevel, n: int) -> HomologyResult:
    """Integral homology of the cover complex at one level.

    The torsion subgroup of ``ker d_n / im d_{n+1}`` equals the torsion of
    ``Z^c / im d_{n+1}`` because the quotient by the kernel is free (the exact
    sequence splits), so the invariant factors of the single matrix
    ``d_{n+1}`` carry all torsion; kernel ranks only enter the free part.
    """
    require_free(C, "homology")
    snf_next = smith_normal_form(cover_boundary(C, level, n + 1))
    if 1 <= n <= C.dim:
        rank_this = exact_rank(evaluate_matrix(C.boundary(n), level).matrix)
    else:
        rank_this = 0
    free_rank = C.rank(n) * level.degree - rank_this - snf_next.rank
    torsion_factors = tuple(f for f in snf_next.factors if f > 1)
    return HomologyResult(n, free_rank, torsion_factors, snf_next.torsion)


def homology_torsion(C: ChainComplex, level: QuotientLevel, n: int) -> int:
    """|tors H_n| of the cover at this level, as an exact big integer."""
    d_next = cover_boundary(C, level, n + 1)
    return smith_normal_form(d_next).torsion


def big_log(n: int) -> float:
    """Natural log of a positive big integer (math.log handles the width)."""
    if n <= 0:
        raise ValueError("log of a nonpositive integer")
    return math.log(n)


@dataclass
class GrowthRow:
    label: int
    index: int
    degree: int
    torsion: int
    normalized_log: float


@dataclass
class GrowthReport:
    """Per level and degree: |tors H_n| and its normalized logarithm, plus the
    alternating-sum column and the engine's reference value.  Sequences only;
    interpreting limits is left to the reader."""

    rows: list[GrowthRow]
    rho_z: list[tuple[int, int, float]]
    engine_rho: float | None = None
    degrees: tuple[int, ...] = ()

    def csv_rows(self) -> list[str]:
        out = ["level,index,degree,torsion,normalized_log,rho_z,engine_rho"]
        rho_by_label = {label: value for label, _, value in self.rho_z}
        engine = "" if self.engine_rho is None else f"{self.engine_rho:.12e}"
        for row in self.rows:
            out.append(
                f"{row.label},{row.index},{row.degree},{row.torsion},"
                f"{row.normalized_log:.12e},{rho_by_label[row.label]:.12e},{engine}"
            )
        return out


def growth_series(
    C: ChainComplex,
    tower: QuotientTower,
    degrees: tuple[int, ...] | None = None,
    include_engine: bool = True,
    pmap=map,
    **engine_kwargs,
) -> GrowthReport:
    """Homology torsion growth across the tower with the engine comparison."""
    require_free(C, "growth_series")
    if len(tower.levels) < 3:
        raise ValidationFailure("growth statistics need a tower with at least 3 levels")
    if degrees is None:
        degrees = tuple(range(C.dim + 1))

    def one_level(level: QuotientLevel) -> list[GrowthRow]:
        out = []
        for n in degrees:
            torsion = homology_torsion(C, level, n)
            out.append(
                GrowthRow(
                    label=level.label,
                    index=level.degree,
                    degree=n,
                    torsion=torsion,
                    normalized_log=big_log(torsion) / level.degree,
                )
            )
        return out

    level_chunks = list(pmap(one_level, tower.levels))
    rows: list[GrowthRow] = [row for chunk in level_chunks for row in chunk]
    rho_z = []
    for level, chunk in zip(tower.levels, level_chunks):
        total = sum((-1) ** row.degree * row.normalized_log for row in chunk)
        rho_z.append((level.label, level.degree, total))

    engine_rho = None
    if include_engine:
        from .engine import l2_torsion

        engine_rho = l2_torsion(C, tower, pmap=pmap, **engine_kwargs).value
    return GrowthReport(rows=rows, rho_z=rho_z, engine_rho=engine_rho, degrees=degrees)
