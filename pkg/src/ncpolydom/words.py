"""Words in free semigroups and tuples of such words.

A word over ``n`` generators is a tuple of 1-based letters; the empty tuple
is the identity ``g_0``.  A word tuple holds one word per factor of the
polydomain.  All enumerations use graded-lexicographic order (shorter words
first, then letters compared numerically), and tuples are ordered by the
product of those orders with the first component varying slowest.  This
product order coincides with the row order of ``numpy.kron`` over the
factors, which the Fock model relies on.
"""
from __future__ import annotations

import itertools
from typing import Iterator, Sequence, Tuple

Word = Tuple[int, ...]
WordTuple = Tuple[Word, ...]

IDENTITY: Word = ()


def check_word(word: Sequence[int], n: int) -> Word:
    """Return ``word`` as a tuple after checking every letter lies in [1, n]."""
    w = tuple(int(c) for c in word)
    for c in w:
        if not 1 <= c <= n:
            raise ValueError(f"letter {c} out of range for alphabet size {n}")
    return w


def graded_lex_key(word: Word) -> tuple:
    return (len(word), word)


def enumerate_words(n: int, length: int) -> list[Word]:
    """All ``n**length`` words of exactly ``length`` letters, lexicographically."""
    if n < 1 or length < 0:
        raise ValueError("need n >= 1 and length >= 0")
    return list(itertools.product(range(1, n + 1), repeat=length))


def words_up_to(n: int, cap: int) -> list[Word]:
    """All words of length at most ``cap`` in graded-lex order."""
    out: list[Word] = []
    for ell in range(cap + 1):
        out.extend(enumerate_words(n, ell))
    return out


def count_words_up_to(n: int, cap: int) -> int:
    return sum(n**ell for ell in range(cap + 1))


def factorizations(word: Word) -> list[tuple[Word, ...]]:
    """Ordered factorizations of ``word`` into nonempty subwords.

    There are ``2**(len(word) - 1)`` of them, one per subset of the inner cut
    points.  Listed with the coarsest factorization first.
    """
    word = tuple(word)
    p = len(word)
    if p == 0:
        raise ValueError("identity has no nonempty factorization")
    out = []
    for ncuts in range(p):
        for cuts in itertools.combinations(range(1, p), ncuts):
            bounds = (0,) + cuts + (p,)
            out.append(tuple(word[a:b] for a, b in zip(bounds, bounds[1:])))
    return out


def compositions(m: int, k: int) -> list[tuple[int, ...]]:
    """Weak compositions of ``m`` into ``k`` nonnegative parts, lexicographic."""
    if k == 0:
        return [()] if m == 0 else []
    return [p for p in itertools.product(range(m + 1), repeat=k) if sum(p) == m]


def enumerate_lambda(n_vec: Sequence[int], p_vec: Sequence[int]) -> list[WordTuple]:
    """The index set of word tuples with ``len(alpha_i) == p_i``."""
    if len(n_vec) != len(p_vec):
        raise ValueError("alphabet sizes and degree profile differ in length")
    factors = [enumerate_words(n, p) for n, p in zip(n_vec, p_vec)]
    return list(itertools.product(*factors))


def enumerate_gamma(n_vec: Sequence[int], m: int) -> list[WordTuple]:
    """Word tuples of total length ``m``, grouped by degree profile."""
    if m < 0:
        raise ValueError("total degree must be nonnegative")
    out: list[WordTuple] = []
    for p in compositions(m, len(n_vec)):
        out.extend(enumerate_lambda(n_vec, p))
    return out


def profiles_up_to(caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Degree profiles inside the box ``p_i <= caps[i]``."""
    return itertools.product(*(range(c + 1) for c in caps))


def profile(wt: WordTuple) -> tuple[int, ...]:
    return tuple(len(w) for w in wt)


def word_to_json(word: Word) -> list[int]:
    return list(word)


def word_tuple_to_json(wt: WordTuple) -> list[list[int]]:
    return [list(w) for w in wt]


def word_tuple_from_json(obj, n_vec: Sequence[int]) -> WordTuple:
    if len(obj) != len(n_vec):
        raise ValueError(f"word tuple has {len(obj)} components, expected {len(n_vec)}")
    return tuple(check_word(w, n) for w, n in zip(obj, n_vec))
