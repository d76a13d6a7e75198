"""Truncated tensor Fock spaces and the weighted creation operators.

Truncation keeps the words of length ``<= N_i`` in factor ``i`` and sends any
basis vector pushed past the cap to zero.  Every truncated operator built here
is therefore the compression ``P W P`` of its infinite counterpart to a
subspace that is invariant under all ``W*``.  Degree-preserving expressions
such as ``W_a W_a*`` are exact on that subspace, so the universal defect
identity holds with no truncation error at all.
"""
from __future__ import annotations

import itertools
import math
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ValidationError
from .polycoeff import NcPolynomial, PolyTuple, b_coefficient
from .words import Word, WordTuple, count_words_up_to, words_up_to

DENSE_NORM_LIMIT = 2500


def default_caps(n_vec: Sequence[int]) -> tuple[int, ...]:
    return tuple(4 if n <= 2 else 3 for n in n_vec)


class FactorBasis:
    """Graded-lex basis of one truncated Fock space ``F^2(H_n)``."""

    def __init__(self, q: NcPolynomial, cap: int):
        if cap < 0:
            raise ValidationError("caps must be nonnegative")
        self.q = q
        self.n = q.n
        self.cap = cap
        self.words: list[Word] = words_up_to(q.n, cap)
        self.index = {w: i for i, w in enumerate(self.words)}
        self.dim = len(self.words)

    def creation(self, j: int) -> sp.csr_matrix:
        if not 1 <= j <= self.n:
            raise ValidationError(f"generator index {j} out of range 1..{self.n}")
        return self.word_operator((j,))

    def word_operator(self, alpha: Word) -> sp.csr_matrix:
        """``W_alpha e_beta = sqrt(b_beta / b_{alpha beta}) e_{alpha beta}``, truncated."""
        rows, cols, vals = [], [], []
        room = self.cap - len(alpha)
        if room >= 0:
            for col, beta in enumerate(self.words):
                if len(beta) > room:
                    break
                target = alpha + beta
                rows.append(self.index[target])
                cols.append(col)
                vals.append(math.sqrt(float(b_coefficient(self.q, beta)) / float(b_coefficient(self.q, target))))
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)


class TruncatedModel:
    """The truncated universal model ``W = {W_{i,j}}`` of the polydomain.

    Basis vectors are word tuples with ``len(alpha_i) <= caps[i]``, ordered
    like ``numpy.kron`` of the factor bases; index 0 is the vacuum.
    """

    def __init__(self, q: PolyTuple, caps: Sequence[int] | None = None):
        caps = default_caps(q.n_vec) if caps is None else tuple(int(c) for c in caps)
        if len(caps) != q.k:
            raise ValidationError(f"need {q.k} caps, got {len(caps)}")
        self.q = q
        self.caps = caps
        self.factors = [FactorBasis(qi, c) for qi, c in zip(q.polys, caps)]
        self.dims = tuple(f.dim for f in self.factors)
        self.dim = math.prod(self.dims)
        self._cache: dict = {}

    @property
    def k(self) -> int:
        return self.q.k

    @cached_property
    def basis(self) -> list[WordTuple]:
        return list(itertools.product(*(f.words for f in self.factors)))

    def index_of(self, wt: WordTuple) -> int:
        idx = 0
        for f, w in zip(self.factors, wt):
            idx = idx * f.dim + f.index[w]
        return idx

    def contains(self, wt: WordTuple) -> bool:
        return all(len(w) <= c for w, c in zip(wt, self.caps))

    def _embed(self, i: int, op: sp.spmatrix) -> sp.csr_matrix:
        left = math.prod(self.dims[:i])
        right = math.prod(self.dims[i + 1:])
        out = op
        if left > 1:
            out = sp.kron(sp.identity(left, dtype=complex, format="csr"), out, format="csr")
        if right > 1:
            out = sp.kron(out, sp.identity(right, dtype=complex, format="csr"), format="csr")
        return sp.csr_matrix(out)

    def ambient(self, i: int, j: int) -> sp.csr_matrix:
        """``I x ... x W_{i,j} x ... x I`` with 1-based ``i`` and ``j``."""
        if not 1 <= i <= self.k:
            raise ValidationError(f"factor index {i} out of range 1..{self.k}")
        key = ("amb", i, j)
        if key not in self._cache:
            self._cache[key] = self._embed(i - 1, self.factors[i - 1].creation(j))
        return self._cache[key]

    def word_operator(self, wt: WordTuple) -> sp.csr_matrix:
        """``W_alpha = W_{1,alpha_1} ... W_{k,alpha_k}`` as one Kronecker product."""
        key = ("word", wt)
        if key not in self._cache:
            out = None
            for f, w in zip(self.factors, wt):
                op = f.word_operator(w)
                out = op if out is None else sp.kron(out, op, format="csr")
            self._cache[key] = sp.csr_matrix(out)
        return self._cache[key]

    def vacuum_projection(self) -> np.ndarray:
        P = np.zeros((self.dim, self.dim), dtype=complex)
        P[0, 0] = 1.0
        return P

    def operator_tuple(self, r: float = 1.0):
        """The truncated model as a dense :class:`OperatorTuple`, scaled by ``r``."""
        from .domain import OperatorTuple

        blocks = tuple(
            tuple(r * self.ambient(i, j).toarray() for j in range(1, self.factors[i - 1].n + 1))
            for i in range(1, self.k + 1)
        )
        return OperatorTuple(blocks)


def creation_operator(q_i: NcPolynomial, j: int, cap: int) -> sp.csr_matrix:
    return FactorBasis(q_i, cap).creation(j)


def ambient_operator(model: TruncatedModel, i: int, j: int) -> sp.csr_matrix:
    return model.ambient(i, j)


def word_operator(model: TruncatedModel, wt: WordTuple) -> sp.csr_matrix:
    return model.word_operator(wt)


def phi_sparse(q_i: NcPolynomial, model: TruncatedModel, i: int, Y):
    """``Phi_{q_i, W_i}(Y) = sum_a a_a W_{i,a} Y W_{i,a}*`` on the model."""
    out = None
    for w, a in q_i.terms.items():
        wt = tuple(w if s == i - 1 else () for s in range(model.k))
        Wa = model.word_operator(wt)
        term = float(a) * (Wa @ Y @ Wa.conj().T)
        out = term if out is None else out + term
    return out


def universal_defect(model: TruncatedModel) -> np.ndarray:
    """``(id - Phi_{q_1,W_1}) o ... o (id - Phi_{q_k,W_k})(I)`` on the truncated space."""
    Y = sp.identity(model.dim, dtype=complex, format="csr")
    for i in range(model.k, 0, -1):
        Y = Y - phi_sparse(model.q[i - 1], model, i, Y)
    return np.asarray(Y.toarray())


def row_defect(model: TruncatedModel, i: int) -> np.ndarray:
    """``Phi_{q_i, W_i}(I)``, a positive contraction."""
    Y = sp.identity(model.dim, dtype=complex, format="csr")
    return np.asarray(phi_sparse(model.q[i - 1], model, i, Y).toarray())


def operator_norm(A) -> float:
    """Largest singular value.

    Dense inputs go through the largest eigenvalue of ``A* A``; this is exact
    to relative machine precision for the top singular value and gives bitwise
    equal results for ``A`` and ``-A``.  Large sparse inputs use ARPACK.
    """
    if sp.issparse(A):
        if not np.all(np.isfinite(A.data)):
            raise ValidationError("operator has non-finite entries")
        if A.nnz == 0:
            return 0.0
        if max(A.shape) <= DENSE_NORM_LIMIT:
            return operator_norm(A.toarray())
        s = spla.svds(A, k=1, return_singular_vectors=False, tol=0)
        return float(s[0])
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    if not np.all(np.isfinite(A)):
        raise ValidationError("operator has non-finite entries")
    m, n = A.shape
    G = A.conj().T @ A if n <= m else A @ A.conj().T
    G = 0.5 * (G + G.conj().T)
    lam = np.linalg.eigvalsh(G)[-1]
    return float(math.sqrt(max(lam, 0.0)))


def operator_to_json(A) -> dict:
    """Dense row-major ``[re, im]`` pairs."""
    M = A.toarray() if sp.issparse(A) else np.asarray(A)
    flat = M.reshape(-1)
    return {"dim": int(M.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in flat]}


def operator_to_triplets(A) -> dict:
    S = sp.coo_matrix(A)
    return {
        "dim": int(S.shape[0]),
        "triplets": [[int(r), int(c), [float(v.real), float(v.imag)]] for r, c, v in zip(S.row, S.col, S.data)],
    }


def count_dim(n_vec: Sequence[int], caps: Sequence[int]) -> int:
    return math.prod(count_words_up_to(n, c) for n, c in zip(n_vec, caps))
