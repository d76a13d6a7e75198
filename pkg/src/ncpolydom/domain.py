"""Concrete points of the polydomain and the predicates that locate them."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .fock import operator_norm
from .polycoeff import NcPolynomial, PolyTuple
from .words import Word, WordTuple

OPEN = "inside-open"
CLOSED = "on-or-inside-closed"
OUTSIDE = "outside"


@dataclass(frozen=True, eq=False)
class OperatorTuple:
    """``X = (X_1, ..., X_k)``; ``blocks[i][j]`` is the d x d matrix ``X_{i+1,j+1}``."""

    blocks: tuple[tuple[np.ndarray, ...], ...]
    _words: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.blocks or any(len(b) == 0 for b in self.blocks):
            raise ValidationError("every factor needs at least one matrix")
        d = None
        fixed = []
        for blk in self.blocks:
            row = []
            for M in blk:
                M = np.asarray(M, dtype=complex)
                if M.ndim != 2 or M.shape[0] != M.shape[1]:
                    raise ValidationError("operator entries must be square matrices")
                if d is None:
                    d = M.shape[0]
                elif M.shape[0] != d:
                    raise ValidationError(f"dimension mismatch: {M.shape[0]} vs {d}")
                if not np.all(np.isfinite(M)):
                    raise ValidationError("operator entries must be finite")
                row.append(M)
            fixed.append(tuple(row))
        object.__setattr__(self, "blocks", tuple(fixed))

    @property
    def dim(self) -> int:
        return self.blocks[0][0].shape[0]

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def n_vec(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def scaled(self, r) -> "OperatorTuple":
        """``r X``; ``r`` may be a scalar or a per-factor sequence."""
        rs = [r] * self.k if np.isscalar(r) else list(r)
        return OperatorTuple(tuple(tuple(ri * M for M in blk) for ri, blk in zip(rs, self.blocks)))

    def reinhardt(self, z: Sequence[Sequence[complex]]) -> "OperatorTuple":
        """``zX = {z_ij X_ij}``."""
        return OperatorTuple(tuple(tuple(c * M for c, M in zip(zi, blk)) for zi, blk in zip(z, self.blocks)))

    def word(self, i: int, w: Word) -> np.ndarray:
        """``X_{i,w}`` (0-based factor ``i``), memoized by prefix recursion."""
        key = (i, w)
        cache = self._words
        if key in cache:
            return cache[key]
        if not w:
            out = np.eye(self.dim, dtype=complex)
        else:
            out = self.blocks[i][w[0] - 1] @ self.word(i, w[1:])
        cache[key] = out
        return out

    def word_tuple(self, wt: WordTuple) -> np.ndarray:
        """``X_alpha = X_{1,alpha_1} ... X_{k,alpha_k}``."""
        out = None
        for i, w in enumerate(wt):
            if not w:
                continue
            M = self.word(i, w)
            out = M if out is None else out @ M
        return np.eye(self.dim, dtype=complex) if out is None else out

    def max_entry_norm(self) -> float:
        return max(operator_norm(M) for blk in self.blocks for M in blk)

    def matching(self, q: PolyTuple) -> None:
        if self.n_vec != q.n_vec:
            raise ValidationError(f"operator tuple shape {self.n_vec} does not match q with n = {q.n_vec}")


def check_cross_commuting(X: OperatorTuple) -> float:
    """Largest ``||X_{s,j} X_{t,j'} - X_{t,j'} X_{s,j}||`` over factors ``s != t``."""
    worst = 0.0
    for s, t in itertools.combinations(range(X.k), 2):
        for A in X.blocks[s]:
            for B in X.blocks[t]:
                worst = max(worst, operator_norm(A @ B - B @ A))
    return worst


def default_commute_tol(X: OperatorTuple) -> float:
    return 1e-10 * max(X.max_entry_norm() ** 2, 1.0)


def _require_cross_commuting(X: OperatorTuple, tol: float | None) -> None:
    tol = default_commute_tol(X) if tol is None else tol
    res = check_cross_commuting(X)
    if res > tol:
        raise ValidationError(f"entries of different factors do not commute (residual {res:.3e} > {tol:.3e})")


def phi_map(q_i: NcPolynomial, X_i: Sequence[np.ndarray], Y: np.ndarray, _words=None) -> np.ndarray:
    """``Phi_{q,A}(Y) = sum_a a_a A_a Y A_a*``."""
    X_i = list(X_i)
    if len(X_i) != q_i.n:
        raise ValidationError(f"polynomial has {q_i.n} variables but {len(X_i)} matrices were given")
    words = {} if _words is None else _words
    out = np.zeros_like(Y, dtype=complex)
    for w, a in q_i.terms.items():
        if w not in words:
            M = np.eye(Y.shape[0], dtype=complex)
            for c in w:
                M = M @ X_i[c - 1]
            words[w] = M
        Aw = words[w]
        out += float(a) * (Aw @ Y @ Aw.conj().T)
    return out


def _phi(q: PolyTuple, X: OperatorTuple, i: int, Y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(Y, dtype=complex)
    for w, a in q[i].terms.items():
        Aw = X.word(i, w)
        out += float(a) * (Aw @ Y @ Aw.conj().T)
    return out


def defect(q: PolyTuple, X: OperatorTuple, p_vec: Sequence[int]) -> np.ndarray:
    """``(id - Phi_1)^{p_1} o ... o (id - Phi_k)^{p_k}`` applied to ``I``."""
    X.matching(q)
    if len(p_vec) != q.k or any(p < 0 for p in p_vec):
        raise ValidationError("p_vec needs k nonnegative entries")
    Y = np.eye(X.dim, dtype=complex)
    for i in range(q.k - 1, -1, -1):
        for _ in range(p_vec[i]):
            Y = Y - _phi(q, X, i, Y)
    return 0.5 * (Y + Y.conj().T)


def _margin(D: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (D + D.conj().T))[0])


def default_eps_psd(D: np.ndarray) -> float:
    return 1e-10 * (1.0 + operator_norm(D))


@dataclass
class MembershipReport:
    verdict: str
    margins: dict[tuple[int, ...], float]
    tolerances: dict[tuple[int, ...], float]
    cross_residual: float

    @property
    def interior(self) -> bool:
        """Every defect ``Delta^p(I)``, ``p`` in ``{0,1}^k``, is strictly positive."""
        return all(m > self.tolerances[p] for p, m in self.margins.items())

    @property
    def closed_ok(self) -> bool:
        return all(m >= -self.tolerances[p] for p, m in self.margins.items())

    def accepts(self, mode: str) -> bool:
        if mode == "open":
            return self.verdict == OPEN
        if mode == "closed":
            return self.closed_ok
        raise ValidationError(f"unknown membership mode {mode!r}")

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "interior": self.interior,
            "closed": self.closed_ok,
            "margins": [{"p": list(p), "margin": m, "eps_psd": self.tolerances[p]} for p, m in self.margins.items()],
            "cross_residual": self.cross_residual,
        }


def _all_margins(q: PolyTuple, X: OperatorTuple, eps_psd: float | None):
    margins, tols = {}, {}
    for p in itertools.product((0, 1), repeat=q.k):
        D = defect(q, X, p)
        margins[p] = _margin(D)
        tols[p] = default_eps_psd(D) if eps_psd is None else eps_psd
    return margins, tols


def membership(q: PolyTuple, X: OperatorTuple, mode: str = "open", eps_psd: float | None = None,
               commute_tol: float | None = None) -> MembershipReport:
    """Locate ``X`` relative to the polydomain.

    The open verdict follows the literal definition: only ``Delta_{q,X}(I) > 0``
    (the ``p = (1,...,1)`` margin) is tested.  All ``2^k`` margins are
    reported; :attr:`MembershipReport.interior` requires all of them.
    """
    if mode not in ("open", "closed"):
        raise ValidationError(f"unknown membership mode {mode!r}")
    X.matching(q)
    res = check_cross_commuting(X)
    tol = default_commute_tol(X) if commute_tol is None else commute_tol
    if res > tol:
        raise ValidationError(f"entries of different factors do not commute (residual {res:.3e} > {tol:.3e})")
    margins, tols = _all_margins(q, X, eps_psd)
    top = (1,) * q.k
    if margins[top] > tols[top]:
        verdict = OPEN
    elif all(m >= -tols[p] for p, m in margins.items()):
        verdict = CLOSED
    else:
        verdict = OUTSIDE
    return MembershipReport(verdict, margins, tols, res)


def _in_closed(q: PolyTuple, X: OperatorTuple, scale: float) -> bool:
    Xs = X.scaled(scale)
    margins, tols = _all_margins(q, Xs, None)
    return all(m >= -tols[p] for p, m in margins.items())


def minkowski_functional(q: PolyTuple, X: OperatorTuple, tol_bisect: float = 1e-12,
                         commute_tol: float | None = None) -> float:
    """``m(X) = inf{r > 0 : X in r D_q}`` by bisection on ``r``.

    The predicate is membership of ``X / r`` in the closed domain, all ``2^k``
    defects ``>= -eps_psd``.  Testing strict positivity instead would be
    slowed by the top defect, which vanishes quadratically where two
    factors reach their boundary together.  Returns the upper end of the
    final bracket, so ``X / m(X)`` lies in the closed domain up to
    ``eps_psd``; the bisection tolerance is relative.
    """
    X.matching(q)
    _require_cross_commuting(X, commute_tol)
    if X.max_entry_norm() == 0.0:
        return 0.0
    hi = 1.0
    while not _in_closed(q, X, 1.0 / hi):
        hi *= 2.0
        if hi > 1e300:
            raise ValidationError("could not bracket the Minkowski functional")
    lo = 0.0
    if hi > 1.0:
        lo = hi / 2.0
    else:
        while _in_closed(q, X, 1.0 / (hi / 2.0)):
            hi /= 2.0
            if hi < 1e-300:
                return 0.0
        lo = hi / 2.0
    while hi - lo > tol_bisect * hi:
        mid = 0.5 * (lo + hi)
        if _in_closed(q, X, 1.0 / mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class PurityReport:
    pure: bool
    traces: list[list[float]]
    tol: float

    def to_json(self) -> dict:
        return {"pure": self.pure, "tol": self.tol, "norm_traces": self.traces}


def is_pure(q: PolyTuple, X: OperatorTuple, m_max: int = 200, tol: float = 1e-12) -> PurityReport:
    """Iterate ``Y <- Phi_{q_i,X_i}(Y)`` from ``I`` and record ``||Y||`` per axis."""
    X.matching(q)
    traces = []
    pure = True
    for i in range(q.k):
        Y = np.eye(X.dim, dtype=complex)
        seq = [1.0]
        for _ in range(m_max):
            Y = _phi(q, X, i, Y)
            v = operator_norm(Y)
            seq.append(v)
            if v < tol or not math.isfinite(v) or v > 1e300:
                break
        traces.append(seq)
        pure = pure and seq[-1] < tol
    return PurityReport(pure, traces, tol)


# -- sampling -----------------------------------------------------------------

def random_operator_tuple(n_vec: Sequence[int], factor_dims: Sequence[int], rng: np.random.Generator,
                          complex_entries: bool = True) -> OperatorTuple:
    """Random cross-commuting tuple on ``C^{d_1} x ... x C^{d_k}``.

    Factor ``i`` acts on the ``i``-th tensor leg only, which makes entries of
    different factors commute exactly.
    """
    if len(n_vec) != len(factor_dims):
        raise ValidationError("need one factor dimension per polynomial")
    blocks = []
    for i, n in enumerate(n_vec):
        row = []
        for _ in range(n):
            M = rng.standard_normal((factor_dims[i], factor_dims[i]))
            if complex_entries:
                M = M + 1j * rng.standard_normal(M.shape)
            row.append(_leg(M, i, factor_dims))
        blocks.append(tuple(row))
    return OperatorTuple(tuple(blocks))


def random_nilpotent_tuple(n_vec: Sequence[int], factor_dims: Sequence[int], rng: np.random.Generator) -> OperatorTuple:
    """Like :func:`random_operator_tuple` with strictly upper triangular legs."""
    blocks = []
    for i, n in enumerate(n_vec):
        row = []
        for _ in range(n):
            d = factor_dims[i]
            M = np.triu(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)), k=1)
            row.append(_leg(M, i, factor_dims))
        blocks.append(tuple(row))
    return OperatorTuple(tuple(blocks))


def _leg(M: np.ndarray, i: int, factor_dims: Sequence[int]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for s, d in enumerate(factor_dims):
        out = np.kron(out, M if s == i else np.eye(d))
    return out


def rescale_into(q: PolyTuple, X: OperatorTuple, target: float) -> OperatorTuple:
    """Scale ``X`` so that its Minkowski functional is at most ``target``."""
    m = minkowski_functional(q, X)
    if m == 0.0:
        return X
    return X.scaled(target / m)


# -- JSON ---------------------------------------------------------------------

def _complex_entry(z, where: str) -> complex:
    if isinstance(z, (int, float)) and not isinstance(z, bool):
        return complex(z)
    if isinstance(z, list) and len(z) == 2 and all(isinstance(v, (int, float)) for v in z):
        return complex(z[0], z[1])
    raise ValidationError(f"{where}: expected a number or [re, im] pair")


def matrix_from_json(obj, where: str = "matrix", dim: int | None = None) -> np.ndarray:
    """Row-major matrix: a list of rows, or a flat list of ``dim**2`` entries.

    Entries are numbers or ``[re, im]`` pairs.  A list whose items are all
    lists of the same length as the outer list is read as rows.
    """
    if not isinstance(obj, list) or not obj:
        raise ValidationError(f"{where}: expected a non-empty array")
    if all(isinstance(r, list) and len(r) == len(obj) for r in obj):
        rows = [[_complex_entry(z, f"{where}[{a}][{b}]") for b, z in enumerate(r)] for a, r in enumerate(obj)]
        M = np.array(rows, dtype=complex)
    else:
        flat = [_complex_entry(z, f"{where}[{a}]") for a, z in enumerate(obj)]
        d = math.isqrt(len(flat))
        if d * d != len(flat):
            raise ValidationError(f"{where}: {len(flat)} entries do not form a square matrix")
        M = np.array(flat, dtype=complex).reshape(d, d)
    if dim is not None and M.shape[0] != dim:
        raise ValidationError(f"{where}: expected {dim} x {dim}, got {M.shape[0]} x {M.shape[0]}")
    return M


def matrix_to_json(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def operator_tuple_from_json(obj) -> OperatorTuple:
    if not isinstance(obj, dict) or "blocks" not in obj:
        raise ValidationError("operator tuple must be an object with 'blocks'")
    dim = obj.get("dim")
    blocks = obj["blocks"]
    if not isinstance(blocks, list) or not blocks:
        raise ValidationError("'blocks' must be a non-empty array")
    parsed = []
    for i, blk in enumerate(blocks):
        if not isinstance(blk, list) or not blk:
            raise ValidationError(f"blocks[{i}] must be a non-empty array of matrices")
        parsed.append(tuple(matrix_from_json(M, f"blocks[{i}][{j}]", dim) for j, M in enumerate(blk)))
    X = OperatorTuple(tuple(parsed))
    if dim is not None and X.dim != dim:
        raise ValidationError(f"'dim' is {dim} but matrices are {X.dim} x {X.dim}")
    return X


def operator_tuple_to_json(X: OperatorTuple) -> dict:
    return {"dim": X.dim, "blocks": [[matrix_to_json(M) for M in blk] for blk in X.blocks]}
