"""Noncommutative Berezin kernel and transform at a point of the polydomain."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .domain import OperatorTuple, _margin, check_cross_commuting, default_commute_tol, default_eps_psd, defect
from .errors import ValidationError
from .fock import TruncatedModel, operator_norm
from .polycoeff import PolyTuple
from .words import WordTuple, word_tuple_from_json


@dataclass(frozen=True, eq=False)
class BerezinKernel:
    """Truncated ``K_{q,X}: H -> (truncated Fock) x (defect range)``.

    Rows are indexed by ``basis_index * defect_rank + r``.  ``tail_bound``
    bounds ``||K* K - K_N* K_N||``, the mass dropped by truncation.
    """

    q: PolyTuple
    X: OperatorTuple
    model: TruncatedModel
    matrix: np.ndarray
    defect_root: np.ndarray
    defect_rank: int
    tail_bound: float

    @property
    def caps(self) -> tuple[int, ...]:
        return self.model.caps

    def lifted(self, op) -> sp.csr_matrix:
        """``op x I`` on the kernel's target space."""
        return sp.kron(op, sp.identity(self.defect_rank, dtype=complex), format="csr")


def _factor_tail(q_i, X_i: Sequence[np.ndarray], cap: int, nilpotent: bool) -> tuple[float, float]:
    """Scalar majorant of ``sum_l sum_{|b|=l} b_b ||X_b||^2``: (total, part beyond ``cap``).

    With ``t_j = ||X_j||^2`` the level sums ``c_l`` satisfy ``c_0 = 1`` and
    ``c_l = sum_d Q_d(t) c_{l-d}``.  Summing the recurrence over ``l > N``
    gives the remainder ``T (1 - q(t)) = sum_d Q_d sum_{N-d < l <= N} c_l``
    without cancellation.
    """
    t = [operator_norm(M) ** 2 for M in X_i]
    Q = q_i.level_sums(t)
    deg = len(Q) - 1
    c = [1.0]
    for ell in range(1, cap + 1):
        c.append(sum(Q[d] * c[ell - d] for d in range(1, min(deg, ell) + 1)))
    head = sum(c)
    if nilpotent:
        return head, 0.0
    qt = sum(Q)
    if qt >= 1.0:
        return math.inf, math.inf
    boundary = sum(Q[d] * sum(c[max(0, cap + 1 - d):cap + 1]) for d in range(1, deg + 1))
    tail = boundary / (1.0 - qt)
    return head + tail, tail


def _words_vanish(X_i: Sequence[np.ndarray], length: int) -> bool:
    """True when every word of the given length in ``X_i`` is zero."""
    d = X_i[0].shape[0]
    Y = np.eye(d, dtype=complex)
    for _ in range(length):
        Y = sum(M @ Y @ M.conj().T for M in X_i)
    scale = max(1.0, max(operator_norm(M) for M in X_i)) ** (2 * length)
    return operator_norm(Y) <= 1e-28 * scale


def tail_bound(q: PolyTuple, X: OperatorTuple, caps: Sequence[int], defect_norm: float) -> float:
    totals, tails = [], []
    for i in range(q.k):
        nil = _words_vanish(X.blocks[i], caps[i] + 1)
        tot, tail = _factor_tail(q[i], X.blocks[i], caps[i], nil)
        totals.append(tot)
        tails.append(tail)
    bound = 0.0
    for i in range(q.k):
        if tails[i] == 0.0:
            continue
        others = math.prod(totals[s] for s in range(q.k) if s != i)
        bound += tails[i] * others
    return defect_norm * bound


def build_kernel(q: PolyTuple, X: OperatorTuple, caps: Sequence[int] | None = None,
                 eps_psd: float | None = None) -> BerezinKernel:
    X.matching(q)
    res = check_cross_commuting(X)
    if res > default_commute_tol(X):
        raise ValidationError(f"entries of different factors do not commute (residual {res:.3e})")
    model = TruncatedModel(q, caps)
    D = defect(q, X, (1,) * q.k)
    eps = default_eps_psd(D) if eps_psd is None else eps_psd
    for p in _corner_profiles(q.k):
        m = _margin(defect(q, X, p))
        if m < -eps:
            raise ValidationError(f"X is not in the closed polydomain: margin {m:.3e} at p = {list(p)}")
    lam, V = np.linalg.eigh(D)
    if lam[0] < -eps:
        raise ValidationError(f"defect not PSD beyond tolerance (eigenvalue {lam[0]:.3e})")
    keep = lam > eps
    R = (np.sqrt(lam[keep])[:, None] * V[:, keep].conj().T) if keep.any() else np.zeros((0, X.dim), dtype=complex)
    rank = R.shape[0]

    d = X.dim
    K = np.zeros((model.dim * rank, d), dtype=complex)
    star: list[dict] = []
    for i, f in enumerate(model.factors):
        star.append({w: X.word(i, w).conj().T for w in f.words})
    b_vals = [{w: float(model.q[i].b(w)) for w in f.words} for i, f in enumerate(model.factors)]
    for idx, wt in enumerate(model.basis):
        weight = math.sqrt(math.prod(b_vals[i][w] for i, w in enumerate(wt)))
        P = None
        for i, w in enumerate(wt):
            if w:
                P = star[i][w] if P is None else P @ star[i][w]
        block = R if P is None else R @ P
        K[idx * rank:(idx + 1) * rank, :] = weight * block
    bound = tail_bound(q, X, model.caps, float(lam[-1]) if lam.size else 0.0)
    return BerezinKernel(q, X, model, K, R, rank, bound)


def _corner_profiles(k: int):
    return itertools.product((0, 1), repeat=k)


def verify_isometry(kernel: BerezinKernel) -> float:
    K = kernel.matrix
    return operator_norm(K.conj().T @ K - np.eye(K.shape[1]))


def verify_intertwining(kernel: BerezinKernel) -> float:
    """``max ||K X*_{ij} - (W*_{ij} x I) K||`` over all generators."""
    K = kernel.matrix
    worst = 0.0
    for i in range(1, kernel.q.k + 1):
        for j in range(1, kernel.q[i - 1].n + 1):
            W = kernel.lifted(kernel.model.ambient(i, j))
            lhs = K @ kernel.X.blocks[i - 1][j - 1].conj().T
            rhs = W.conj().T @ K
            worst = max(worst, operator_norm(lhs - rhs))
    return worst


def intertwining_bound(kernel: BerezinKernel) -> float:
    """Truncation bound for :func:`verify_intertwining`.

    The residual only collects top-level components, each weighted by
    ``b_beta / b_{g_j beta} <= 1 / a_{g_j}``.
    """
    if kernel.tail_bound == 0.0:
        return 0.0
    amin = min(float(a) for qi in kernel.q for a in qi.linear_coefficients())
    return math.sqrt(kernel.tail_bound / amin)


# -- transform ----------------------------------------------------------------

Expression = Sequence[tuple[complex, WordTuple, WordTuple]]


def berezin_transform(q: PolyTuple, X: OperatorTuple, g: Expression, check_membership: bool = True) -> np.ndarray:
    """``B_X[sum c W_alpha W_beta*] = sum c X_alpha X_beta*`` in closed form."""
    X.matching(q)
    if check_membership:
        D = defect(q, X, (1,) * q.k)
        eps = default_eps_psd(D)
        bad = [p for p in _corner_profiles(q.k) if _margin(defect(q, X, p)) < -eps]
        if bad:
            raise ValidationError(f"X is outside the closed polydomain (p = {list(bad[0])})")
    out = np.zeros((X.dim, X.dim), dtype=complex)
    for c, alpha, beta in g:
        out += c * (X.word_tuple(alpha) @ X.word_tuple(beta).conj().T)
    return out


def expression_operator(model: TruncatedModel, g: Expression) -> sp.csr_matrix:
    """The model operator ``sum c W_alpha W_beta*`` on the truncated space."""
    out = sp.csr_matrix((model.dim, model.dim), dtype=complex)
    for c, alpha, beta in g:
        out = out + c * (model.word_operator(alpha) @ model.word_operator(beta).conj().T)
    return out


def kernel_transform(kernel: BerezinKernel, g: Expression) -> np.ndarray:
    """``K* (g x I) K`` with the truncated kernel."""
    G = kernel.lifted(expression_operator(kernel.model, g))
    K = kernel.matrix
    return K.conj().T @ (G @ K)


def radial_transform_grid(q: PolyTuple, X: OperatorTuple, g: Expression, caps: Sequence[int] | None,
                          r_grid: Sequence[float] = (0.9, 0.99, 0.999)) -> list[dict]:
    """Discrepancy between the closed form and ``K*_{rX}(g x I)K_{rX}`` over ``r``.

    This samples the radial limit only; no convergence rate is asserted.
    """
    closed = berezin_transform(q, X, g, check_membership=False)
    rows = []
    for r in r_grid:
        ker = build_kernel(q, X.scaled(r), caps)
        approx = kernel_transform(ker, g)
        rows.append({"r": float(r), "discrepancy": operator_norm(approx - closed), "tail_bound": ker.tail_bound})
    return rows


def expression_from_json(obj, n_vec) -> list[tuple[complex, WordTuple, WordTuple]]:
    if not isinstance(obj, list):
        raise ValidationError("expression must be an array of {coeff, alpha, beta} terms")
    out = []
    for idx, term in enumerate(obj):
        try:
            c = term.get("coeff", 1.0)
            alpha = word_tuple_from_json(term["alpha"], n_vec)
            beta = word_tuple_from_json(term.get("beta", [[] for _ in n_vec]), n_vec)
        except (KeyError, AttributeError, TypeError, ValueError) as exc:
            raise ValidationError(f"expression[{idx}]: {exc}") from None
        if isinstance(c, list):
            c = complex(c[0], c[1])
        out.append((complex(c), alpha, beta))
    return out
