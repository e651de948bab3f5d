"""Exact arithmetic in integral group rings and sparse matrices over them.

Elements are finite integer combinations of freely reduced words.  The star
operation realizes the adjoint: each word is inverted and coefficients are
conjugated (the identity on integers).  No group-element equality beyond free
reduction is ever decided here; all quantitative semantics go through finite
quotient levels.
"""

from __future__ import annotations

import re
from typing import Callable, Iterable, Mapping

from .presentation import AutomorphismSpec, GroupPresentation, PresentationError, parse_word
from .words import IDENTITY, Word, word_inv, word_mul, word_pow


class RingElement:
    """An element of the integral group ring, stored as word -> coefficient."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Word, int] | None = None):
        clean: dict[Word, int] = {}
        if terms:
            for word, coeff in terms.items():
                if coeff != 0:
                    clean[word] = clean.get(word, 0) + coeff
                    if clean[word] == 0:
                        del clean[word]
        self.terms = clean

    @staticmethod
    def zero() -> "RingElement":
        return RingElement()

    @staticmethod
    def one() -> "RingElement":
        return RingElement({IDENTITY: 1})

    @staticmethod
    def from_word(word: Word, coeff: int = 1) -> "RingElement":
        return RingElement({word: coeff})

    @staticmethod
    def generator(gen: int, exp: int = 1, coeff: int = 1) -> "RingElement":
        word = ((gen, exp),) if exp != 0 else IDENTITY
        return RingElement({word: coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: "RingElement") -> "RingElement":
        out = dict(self.terms)
        for word, coeff in other.terms.items():
            new = out.get(word, 0) + coeff
            if new:
                out[word] = new
            else:
                out.pop(word, None)
        result = RingElement.__new__(RingElement)
        result.terms = out
        return result

    def __neg__(self) -> "RingElement":
        result = RingElement.__new__(RingElement)
        result.terms = {w: -c for w, c in self.terms.items()}
        return result

    def __sub__(self, other: "RingElement") -> "RingElement":
        return self + (-other)

    def __mul__(self, other: "RingElement | int") -> "RingElement":
        if isinstance(other, int):
            if other == 0:
                return RingElement.zero()
            result = RingElement.__new__(RingElement)
            result.terms = {w: c * other for w, c in self.terms.items()}
            return result
        out: dict[Word, int] = {}
        for wa, ca in self.terms.items():
            for wb, cb in other.terms.items():
                word = word_mul(wa, wb)
                new = out.get(word, 0) + ca * cb
                if new:
                    out[word] = new
                else:
                    out.pop(word, None)
        result = RingElement.__new__(RingElement)
        result.terms = out
        return result

    def __rmul__(self, other: int) -> "RingElement":
        return self * other

    def star(self) -> "RingElement":
        """Adjoint: w -> w^{-1} on words, identity on integer coefficients."""
        result = RingElement.__new__(RingElement)
        result.terms = {word_inv(w): c for w, c in self.terms.items()}
        return result

    def apply(self, phi: AutomorphismSpec) -> "RingElement":
        out: dict[Word, int] = {}
        for word, coeff in self.terms.items():
            image = phi.apply_word(word)
            new = out.get(image, 0) + coeff
            if new:
                out[image] = new
            else:
                out.pop(image, None)
        result = RingElement.__new__(RingElement)
        result.terms = out
        return result

    def coeff_abs_sum(self) -> int:
        return sum(abs(c) for c in self.terms.values())

    def max_generator(self) -> int:
        return max((g for w in self.terms for g, _ in w), default=-1)

    def sorted_terms(self) -> list[tuple[Word, int]]:
        return sorted(self.terms.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RingElement):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def to_str(self, presentation: GroupPresentation) -> str:
        if not self.terms:
            return "0"
        parts: list[str] = []
        for word, coeff in self.sorted_terms():
            wtxt = presentation.word_to_str(word)
            if word == IDENTITY:
                body = str(abs(coeff))
            elif abs(coeff) == 1:
                body = wtxt
            else:
                body = f"{abs(coeff)} {wtxt}"
            sign = "-" if coeff < 0 else "+"
            parts.append(f"{sign} {body}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def __repr__(self) -> str:
        return f"RingElement({dict(self.sorted_terms())!r})"


def apply_automorphism(phi: AutomorphismSpec, x: "RingElement | RingMatrix"):
    """Rewrite every word through the automorphism's generator images."""
    return x.apply(phi)


_ELEMENT_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+|[()^*+\-]|\S")


def parse_ring_element(text: str, presentation: GroupPresentation) -> RingElement:
    """Parse a group-ring literal such as ``"2 - a - A"`` or ``"3 a b^-1"``.

    Grammar: signed terms joined by ``+``/``-``; each term is an optional
    unsigned integer coefficient followed by an optional word (``*`` between
    factors is allowed and ignored).
    """
    tokens = _ELEMENT_TOKEN_RE.findall(text)
    if not tokens:
        raise PresentationError("empty ring-element literal")
    pos = 0
    n = len(tokens)
    result = RingElement.zero()
    sign = 1
    first = True
    while pos < n:
        tok = tokens[pos]
        if tok in "+-":
            sign = -1 if tok == "-" else 1
            pos += 1
            if pos >= n:
                raise PresentationError(f"dangling {tok!r} in ring-element literal")
        elif not first:
            raise PresentationError(f"expected '+' or '-' before {tok!r}")
        coeff = 1
        has_coeff = False
        if pos < n and tokens[pos].isdigit():
            coeff = int(tokens[pos])
            has_coeff = True
            pos += 1
            if pos < n and tokens[pos] == "*":
                pos += 1
        word_tokens: list[str] = []
        depth = 0
        prev = ""
        while pos < n:
            tok = tokens[pos]
            if tok in "+-" and depth == 0 and prev != "^":
                break
            if tok == "(":
                depth += 1
            elif tok == ")":
                depth -= 1
                if depth < 0:
                    raise PresentationError("unbalanced ')' in ring-element literal")
            if tok == "*":
                pos += 1
                continue
            word_tokens.append(tok)
            prev = tok
            pos += 1
        if word_tokens in ([], ["1"]):
            if not has_coeff and not word_tokens:
                raise PresentationError("empty term in ring-element literal")
            word: Word = IDENTITY
        else:
            word = parse_word(" ".join(word_tokens), presentation)
        result = result + RingElement.from_word(word, sign * coeff)
        sign = 1
        first = False
    return result


class RingMatrix:
    """Sparse matrix over the integral group ring; immutable after build."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(
        self,
        rows: int,
        cols: int,
        entries: Mapping[tuple[int, int], RingElement] | None = None,
    ):
        if rows < 0 or cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        self.rows = rows
        self.cols = cols
        clean: dict[tuple[int, int], RingElement] = {}
        if entries:
            for (r, c), elt in entries.items():
                if not 0 <= r < rows or not 0 <= c < cols:
                    raise ValueError(f"entry ({r},{c}) outside {rows}x{cols} matrix")
                if elt:
                    clean[(r, c)] = elt
        self.entries = clean

    @staticmethod
    def zeros(rows: int, cols: int) -> "RingMatrix":
        return RingMatrix(rows, cols)

    @staticmethod
    def identity(n: int) -> "RingMatrix":
        one = RingElement.one()
        return RingMatrix(n, n, {(i, i): one for i in range(n)})

    @staticmethod
    def from_rows(data: Iterable[Iterable[RingElement]]) -> "RingMatrix":
        rows = [list(r) for r in data]
        nr = len(rows)
        nc = len(rows[0]) if rows else 0
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != nc:
                raise ValueError("ragged rows")
            for j, elt in enumerate(row):
                if elt:
                    entries[(i, j)] = elt
        return RingMatrix(nr, nc, entries)

    def entry(self, r: int, c: int) -> RingElement:
        return self.entries.get((r, c), RingElement.zero())

    def __add__(self, other: "RingMatrix") -> "RingMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in matrix addition")
        out = dict(self.entries)
        for key, elt in other.entries.items():
            merged = out.get(key, RingElement.zero()) + elt
            if merged:
                out[key] = merged
            else:
                out.pop(key, None)
        return RingMatrix(self.rows, self.cols, out)

    def __neg__(self) -> "RingMatrix":
        return RingMatrix(self.rows, self.cols, {k: -v for k, v in self.entries.items()})

    def __sub__(self, other: "RingMatrix") -> "RingMatrix":
        return self + (-other)

    def __matmul__(self, other: "RingMatrix") -> "RingMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        by_row: dict[int, list[tuple[int, RingElement]]] = {}
        for (r, k), elt in self.entries.items():
            by_row.setdefault(r, []).append((k, elt))
        by_col: dict[int, list[tuple[int, RingElement]]] = {}
        for (k, c), elt in other.entries.items():
            by_col.setdefault(k, []).append((c, elt))
        out: dict[tuple[int, int], RingElement] = {}
        for r, row_entries in by_row.items():
            for k, left in row_entries:
                for c, right in by_col.get(k, ()):
                    prod = left * right
                    if not prod:
                        continue
                    key = (r, c)
                    merged = out.get(key, RingElement.zero()) + prod
                    if merged:
                        out[key] = merged
                    else:
                        out.pop(key, None)
        return RingMatrix(self.rows, other.cols, out)

    def star(self) -> "RingMatrix":
        """Conjugate transpose: transpose plus entrywise adjoint."""
        return RingMatrix(
            self.cols, self.rows, {(c, r): elt.star() for (r, c), elt in self.entries.items()}
        )

    def apply(self, phi: AutomorphismSpec) -> "RingMatrix":
        return self.map_entries(lambda e: e.apply(phi))

    def map_entries(self, fn: Callable[[RingElement], RingElement]) -> "RingMatrix":
        out = {}
        for key, elt in self.entries.items():
            mapped = fn(elt)
            if mapped:
                out[key] = mapped
        return RingMatrix(self.rows, self.cols, out)

    def scale_right(self, elt: RingElement) -> "RingMatrix":
        return self.map_entries(lambda e: e * elt)

    def scale_left(self, elt: RingElement) -> "RingMatrix":
        return self.map_entries(lambda e: elt * e)

    @staticmethod
    def block(grid: list[list["RingMatrix"]]) -> "RingMatrix":
        """Assemble a block matrix; row heights and column widths must agree."""
        if not grid:
            return RingMatrix.zeros(0, 0)
        heights = [row[0].rows for row in grid]
        widths = [m.cols for m in grid[0]]
        for row in grid:
            if len(row) != len(widths):
                raise ValueError("ragged block grid")
            for j, m in enumerate(row):
                if m.cols != widths[j]:
                    raise ValueError("inconsistent block widths")
            if any(m.rows != row[0].rows for m in row):
                raise ValueError("inconsistent block heights")
        row_off = [0]
        for h in heights:
            row_off.append(row_off[-1] + h)
        col_off = [0]
        for w in widths:
            col_off.append(col_off[-1] + w)
        entries = {}
        for i, row in enumerate(grid):
            for j, m in enumerate(row):
                for (r, c), elt in m.entries.items():
                    entries[(row_off[i] + r, col_off[j] + c)] = elt
        return RingMatrix(row_off[-1], col_off[-1], entries)

    def max_generator(self) -> int:
        return max((e.max_generator() for e in self.entries.values()), default=-1)

    def max_coeff_abs_sum(self) -> int:
        return max((e.coeff_abs_sum() for e in self.entries.values()), default=0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RingMatrix):
            return NotImplemented
        return (
            self.rows == other.rows and self.cols == other.cols and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, frozenset(self.entries.items())))

    def __repr__(self) -> str:
        return f"RingMatrix({self.rows}x{self.cols}, {len(self.entries)} entries)"
