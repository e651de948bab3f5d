"""Freely reduced words over an indexed generating set.

A word is a tuple of syllables ``(generator_index, exponent)`` with nonzero
exponents and no two adjacent syllables sharing a generator index.  The empty
tuple is the identity.  Only free reduction is ever performed symbolically;
deciding equality of group elements is left to finite-quotient evaluation.
"""

from __future__ import annotations

from typing import Iterable

Syllable = tuple[int, int]
Word = tuple[Syllable, ...]

IDENTITY: Word = ()


def free_reduce(syllables: Iterable[Syllable]) -> Word:
    """Merge adjacent syllables with equal generator index and drop zeros."""
    out: list[Syllable] = []
    for gen, exp in syllables:
        if exp == 0:
            continue
        if out and out[-1][0] == gen:
            merged = out[-1][1] + exp
            if merged == 0:
                out.pop()
            else:
                out[-1] = (gen, merged)
        else:
            out.append((gen, exp))
    return tuple(out)


def is_reduced(word: Word) -> bool:
    if any(exp == 0 for _, exp in word):
        return False
    return all(word[i][0] != word[i + 1][0] for i in range(len(word) - 1))


def word_mul(a: Word, b: Word) -> Word:
    """Concatenate and freely reduce."""
    if not a:
        return b
    if not b:
        return a
    out = list(a)
    for gen, exp in b:
        if out and out[-1][0] == gen:
            merged = out[-1][1] + exp
            if merged == 0:
                out.pop()
            else:
                out[-1] = (gen, merged)
        else:
            out.append((gen, exp))
    return tuple(out)


def word_inv(a: Word) -> Word:
    return tuple((gen, -exp) for gen, exp in reversed(a))


def word_pow(a: Word, n: int) -> Word:
    if n == 0:
        return IDENTITY
    base = a if n > 0 else word_inv(a)
    out = base
    for _ in range(abs(n) - 1):
        out = word_mul(out, base)
    return out


def single(gen: int, exp: int = 1) -> Word:
    if exp == 0:
        return IDENTITY
    return ((gen, exp),)


def max_generator(word: Word) -> int:
    """Largest generator index used, or -1 for the identity."""
    return max((gen for gen, _ in word), default=-1)
