"""Finitely presented groups and their automorphisms.

Presentation source grammar (EBNF, whitespace-insensitive):

    presentation := "gens" name* ";" "rels" [ word { "," word } ] ";"
    word         := factor { factor }
    factor       := atom [ "^" integer ]
    atom         := name | inverse-name | "(" word ")"

Generator names are lowercase identifiers; the fully uppercased name denotes
the inverse (``a b A B`` is the commutator of ``a`` and ``b``).  Relators are
stored freely reduced; a relator that needed reduction is flagged in
``GroupPresentation.warnings``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .words import IDENTITY, Word, free_reduce, is_reduced, word_mul, word_pow


class PresentationError(ValueError):
    """Raised on malformed presentation source or invalid presentation data."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class GroupPresentation:
    """A finite presentation: generator names plus freely reduced relators."""

    generators: tuple[str, ...]
    relators: tuple[Word, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(set(self.generators)) != len(self.generators):
            raise PresentationError("generator symbols must be distinct")
        n = len(self.generators)
        for k, rel in enumerate(self.relators):
            for gen, _ in rel:
                if not 0 <= gen < n:
                    raise PresentationError(
                        f"relator {k} references undeclared generator index {gen}"
                    )
            if not is_reduced(rel):
                raise PresentationError(f"relator {k} is not freely reduced")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def generator_index(self, name: str) -> int:
        try:
            return self.generators.index(name)
        except ValueError:
            raise PresentationError(f"undeclared generator {name!r}") from None

    def word_to_str(self, word: Word) -> str:
        if not word:
            return "1"
        parts = []
        for gen, exp in word:
            name = self.generators[gen]
            if exp == 1:
                parts.append(name)
            elif exp == -1:
                parts.append(name.upper())
            else:
                parts.append(f"{name}^{exp}")
        return " ".join(parts)


_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+|[()^,;+\-*]|\S")


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for m in _TOKEN_RE.finditer(line):
            tokens.append(_Token(m.group(0), lineno, m.start() + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], generators: tuple[str, ...]):
        self.tokens = tokens
        self.pos = 0
        self.generators = generators
        self.index = {name: i for i, name in enumerate(generators)}

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("", 1, 1)
            raise PresentationError("unexpected end of input", last.line, last.col)
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise PresentationError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def parse_word(self, stop: tuple[str, ...]) -> Word:
        syllables: list[tuple[int, int]] = []
        saw_factor = False
        while True:
            tok = self.peek()
            if tok is None or tok.text in stop:
                break
            syllables.extend(self.parse_factor())
            saw_factor = True
        if not saw_factor:
            tok = self.peek()
            where = (tok.line, tok.col) if tok else (0, 0)
            raise PresentationError("empty word", *where)
        return free_reduce(syllables)

    def parse_factor(self) -> Word:
        tok = self.next()
        if tok.text == "(":
            inner = self.parse_word(stop=(")",))
            self.expect(")")
            base = inner
        else:
            base = self.parse_atom(tok)
        nxt = self.peek()
        if nxt is not None and nxt.text == "^":
            self.next()
            etok = self.next()
            sign = 1
            if etok.text == "-":
                sign = -1
                etok = self.next()
            if not etok.text.isdigit():
                raise PresentationError(
                    f"expected integer exponent, found {etok.text!r}", etok.line, etok.col
                )
            return word_pow(base, sign * int(etok.text))
        return base

    def parse_atom(self, tok: _Token) -> Word:
        name = tok.text
        if name in self.index:
            return ((self.index[name], 1),)
        lowered = name.lower()
        if name != lowered and lowered in self.index:
            return ((self.index[lowered], -1),)
        raise PresentationError(f"undeclared generator {name!r}", tok.line, tok.col)


def parse_presentation(text: str) -> GroupPresentation:
    """Parse presentation source, e.g. ``"gens a b; rels a b A B;"``."""
    tokens = _tokenize(text)
    if not tokens:
        raise PresentationError("empty presentation source", 1, 1)
    pos = 0

    def take() -> _Token:
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1]
            raise PresentationError("unexpected end of input", last.line, last.col)
        tok = tokens[pos]
        pos += 1
        return tok

    head = take()
    if head.text != "gens":
        raise PresentationError(f"expected 'gens', found {head.text!r}", head.line, head.col)
    names: list[str] = []
    while True:
        tok = take()
        if tok.text == ";":
            break
        if not re.fullmatch(r"[a-z_][a-z0-9_]*", tok.text):
            raise PresentationError(
                f"invalid generator name {tok.text!r} (must be lowercase)", tok.line, tok.col
            )
        if tok.text in names:
            raise PresentationError(f"duplicate generator {tok.text!r}", tok.line, tok.col)
        names.append(tok.text)

    head = take()
    if head.text != "rels":
        raise PresentationError(f"expected 'rels', found {head.text!r}", head.line, head.col)

    parser = _Parser(tokens, tuple(names))
    parser.pos = pos
    relators: list[Word] = []
    warnings: list[str] = []
    tok = parser.peek()
    if tok is None:
        raise PresentationError("missing ';' after relators", 0, 0)
    if tok.text == ";":
        parser.next()
    else:
        while True:
            start = parser.peek()
            raw: list[tuple[int, int]] = []
            while True:
                tok = parser.peek()
                if tok is None or tok.text in (",", ";"):
                    break
                raw.extend(parser.parse_factor())
            if not raw:
                where = (start.line, start.col) if start else (0, 0)
                raise PresentationError("empty relator", *where)
            reduced = free_reduce(raw)
            if tuple(raw) != reduced:
                warnings.append(
                    f"relator {len(relators)} was not freely reduced; stored reduced form"
                )
            relators.append(reduced)
            tok = parser.next()
            if tok.text == ";":
                break
            if tok.text != ",":
                raise PresentationError(
                    f"expected ',' or ';', found {tok.text!r}", tok.line, tok.col
                )
    if parser.peek() is not None:
        tok = parser.peek()
        raise PresentationError(f"trailing input {tok.text!r}", tok.line, tok.col)

    return GroupPresentation(tuple(names), tuple(relators), tuple(warnings))


def parse_word(text: str, presentation: GroupPresentation) -> Word:
    """Parse a single word literal against a presentation's alphabet."""
    tokens = _tokenize(text)
    if not tokens:
        return IDENTITY
    if len(tokens) == 1 and tokens[0].text == "1":
        return IDENTITY
    parser = _Parser(tokens, presentation.generators)
    word = parser.parse_word(stop=())
    if parser.peek() is not None:
        tok = parser.peek()
        raise PresentationError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return word


def free_abelian_presentation(n: int, names: tuple[str, ...] | None = None) -> GroupPresentation:
    """Z^n: n generators with all pairwise commutator relators."""
    if names is None:
        if n <= 4:
            names = tuple("abcd"[:n])
        else:
            names = tuple(f"x{i}" for i in range(n))
    rels = []
    for i in range(n):
        for j in range(i + 1, n):
            rels.append(((i, 1), (j, 1), (i, -1), (j, -1)))
    return GroupPresentation(tuple(names), tuple(rels))


def trivial_presentation() -> GroupPresentation:
    return GroupPresentation((), ())


@dataclass(frozen=True)
class AutomorphismSpec:
    """A group endomorphism given on generators; automorphy is certified
    level-by-level against a quotient tower, never symbolically."""

    images: tuple[Word, ...]
    declared_order: int | None = None

    def __post_init__(self):
        if self.declared_order is not None and self.declared_order < 1:
            raise PresentationError("declared order must be positive")

    def apply_word(self, word: Word) -> Word:
        out: Word = IDENTITY
        for gen, exp in word:
            if gen >= len(self.images):
                raise PresentationError(f"automorphism has no image for generator {gen}")
            out = word_mul(out, word_pow(self.images[gen], exp))
        return out

    @staticmethod
    def identity(rank: int) -> "AutomorphismSpec":
        return AutomorphismSpec(tuple(((g, 1),) for g in range(rank)), declared_order=1)
