"""Positive regular polynomials and their factorization coefficients ``b``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Mapping, Sequence

from .errors import ValidationError
from .words import Word, WordTuple, check_word, factorizations, profiles_up_to, enumerate_lambda


def _as_coeff(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ValidationError(f"coefficient {value!r} is not a real number")
    return float(value)


@dataclass(frozen=True, eq=False)
class NcPolynomial:
    """A positive regular noncommutative polynomial ``q = sum a_w Z_w``.

    Build instances with :func:`validate_positive_regular`.  Coefficients are
    floats, or :class:`fractions.Fraction` when supplied that way, in which
    case every ``b`` value is computed exactly.
    """

    n: int
    terms: Mapping[Word, float]
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def degree(self) -> int:
        return max(len(w) for w in self.terms)

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.terms.values())

    def linear_coefficients(self) -> list:
        return [self.terms[(j,)] for j in range(1, self.n + 1)]

    def b(self, word: Sequence[int]):
        return b_coefficient(self, tuple(word))

    def scalar_value(self, t: Sequence[float]) -> float:
        """Evaluate ``q`` at commuting nonnegative scalars ``t_1..t_n``."""
        return sum(float(a) * math.prod(t[c - 1] for c in w) for w, a in self.terms.items())

    def level_sums(self, t: Sequence[float]) -> list[float]:
        """``[sum_{|w|=d} a_w t^w for d = 0..degree]`` at commuting scalars."""
        out = [0.0] * (self.degree + 1)
        for w, a in self.terms.items():
            out[len(w)] += float(a) * math.prod(t[c - 1] for c in w)
        return out

    def same_as(self, other: "NcPolynomial") -> bool:
        return self.n == other.n and dict(self.terms) == dict(other.terms)

    def __repr__(self):
        body = " + ".join(f"{a}*Z{''.join(map(str, w))}" for w, a in sorted(self.terms.items(), key=lambda t: (len(t[0]), t[0])))
        return f"NcPolynomial(n={self.n}, {body})"


def validate_positive_regular(candidate: Mapping, n: int) -> NcPolynomial:
    """Check the defining conditions and return an :class:`NcPolynomial`.

    ``candidate`` maps words (sequences of 1-based letters) to coefficients.
    Zero coefficients are dropped before validation, except on the constant
    term which must be absent or zero.
    """
    if n < 1:
        raise ValidationError("alphabet size must be >= 1")
    terms: dict[Word, object] = {}
    for raw_word, raw_coeff in candidate.items():
        try:
            w = check_word(raw_word, n)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        c = _as_coeff(raw_coeff)
        if not math.isfinite(float(c)):
            raise ValidationError(f"non-finite coefficient at word {list(w)}")
        if len(w) == 0:
            if c != 0:
                raise ValidationError("constant term nonzero")
            continue
        if c == 0:
            continue
        if c < 0:
            raise ValidationError(f"nonpositive coefficient at word {list(w)}")
        terms[w] = terms.get(w, 0) + c
    for j in range(1, n + 1):
        if (j,) not in terms:
            raise ValidationError(f"missing linear term g{j}")
    return NcPolynomial(n=n, terms=terms)


def ball_polynomial(n: int) -> NcPolynomial:
    """``Z_1 + ... + Z_n``; its polydomain factor is the unit row ball."""
    return validate_positive_regular({(j,): 1.0 for j in range(1, n + 1)}, n)


def b_coefficient(q: NcPolynomial, word: Word):
    """Coefficient ``b_word`` of the weighted creation operators.

    Uses the prefix recursion ``b_a = sum_{a = beta gamma, 1<=|beta|<=deg} a_beta b_gamma``
    with ``b`` of the identity equal to 1, memoized on the polynomial.
    """
    memo = q._memo
    if word in memo:
        return memo[word]
    # iterative over suffixes so long words do not hit the recursion limit
    deg = q.degree
    one = Fraction(1) if q.exact else 1.0
    p = len(word)
    for start in range(p, -1, -1):
        suffix = word[start:]
        if suffix in memo:
            continue
        if not suffix:
            memo[suffix] = one
            continue
        total = 0 * one
        for d in range(1, min(deg, len(suffix)) + 1):
            a = q.terms.get(suffix[:d])
            if a is not None:
                total += a * memo[suffix[d:]]
        memo[suffix] = total
    return memo[word]


def b_by_factorizations(q: NcPolynomial, word: Word):
    """Reference value of ``b_word`` by summing over all factorizations.

    Exponential in ``len(word)``; kept as an independent oracle.
    """
    word = tuple(word)
    if not word:
        return Fraction(1) if q.exact else 1.0
    total = 0
    for parts in factorizations(word):
        prod = 1
        for part in parts:
            a = q.terms.get(part)
            if a is None:
                prod = 0
                break
            prod = prod * a
        total += prod
    return total


@dataclass(frozen=True, eq=False)
class PolyTuple:
    """The k-tuple ``(q_1, ..., q_k)`` defining a polydomain."""

    polys: tuple[NcPolynomial, ...]

    def __post_init__(self):
        if len(self.polys) < 1:
            raise ValidationError("a polydomain needs at least one polynomial")

    @property
    def k(self) -> int:
        return len(self.polys)

    @property
    def n_vec(self) -> tuple[int, ...]:
        return tuple(p.n for p in self.polys)

    def __getitem__(self, i: int) -> NcPolynomial:
        return self.polys[i]

    def __iter__(self):
        return iter(self.polys)

    def b(self, wt: WordTuple) -> float:
        """``prod_i b_{i, alpha_i}`` for a word tuple."""
        return math.prod(b_coefficient(q, w) for q, w in zip(self.polys, wt))

    def same_as(self, other: "PolyTuple") -> bool:
        return self.k == other.k and all(a.same_as(b) for a, b in zip(self.polys, other.polys))


def poly_tuple(*polys: NcPolynomial) -> PolyTuple:
    return PolyTuple(tuple(polys))


def b_table(q: PolyTuple, max_lengths: Sequence[int]) -> dict[WordTuple, float]:
    """Products ``prod_i b_{i,alpha_i}`` for every word tuple in the degree box."""
    if len(max_lengths) != q.k:
        raise ValidationError("max_lengths must have one entry per polynomial")
    if any(m < 0 for m in max_lengths):
        raise ValidationError("max_lengths must be nonnegative")
    table: dict[WordTuple, float] = {}
    for p in profiles_up_to(max_lengths):
        for wt in enumerate_lambda(q.n_vec, p):
            table[wt] = q.b(wt)
    return table


def fibonacci(m: int) -> int:
    a, b = 0, 1
    for _ in range(m):
        a, b = b, a + b
    return a


def polynomial_to_json(q: NcPolynomial) -> dict:
    items = sorted(q.terms.items(), key=lambda t: (len(t[0]), t[0]))
    return {"n": q.n, "terms": [{"word": list(w), "coeff": float(a)} for w, a in items]}


def polynomial_from_json(obj) -> NcPolynomial:
    if not isinstance(obj, dict):
        raise ValidationError("polynomial must be a JSON object")
    try:
        n = obj["n"]
        raw = obj["terms"]
    except KeyError as exc:
        raise ValidationError(f"polynomial is missing field {exc.args[0]!r}") from None
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError("polynomial field 'n' must be an integer")
    if not isinstance(raw, list):
        raise ValidationError("polynomial field 'terms' must be an array")
    cand: dict = {}
    for idx, term in enumerate(raw):
        try:
            w = tuple(term["word"])
            c = term["coeff"]
        except (KeyError, TypeError):
            raise ValidationError(f"terms[{idx}] needs 'word' and 'coeff'") from None
        if w in cand:
            raise ValidationError(f"terms[{idx}] repeats word {list(w)}")
        cand[w] = c
    return validate_positive_regular(cand, n)


def poly_tuple_from_json(obj) -> PolyTuple:
    """Accept an array of polynomials, or a single polynomial as a 1-tuple."""
    if isinstance(obj, dict):
        return PolyTuple((polynomial_from_json(obj),))
    if not isinstance(obj, list):
        raise ValidationError("q must be a polynomial object or an array of them")
    return PolyTuple(tuple(polynomial_from_json(o) for o in obj))


def poly_tuple_to_json(q: PolyTuple) -> list:
    return [polynomial_to_json(p) for p in q.polys]

