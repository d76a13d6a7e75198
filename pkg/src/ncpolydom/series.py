"""Free holomorphic functions as truncated formal power series.

A series ``F = sum A_alpha x Z_alpha`` is stored as a finite map from word
tuples to ``d_K x d_K`` coefficient blocks.  When ``truncated`` is set the
stored terms are a window onto an infinite series, and every operation that
depends on the unseen tail says so through an explicit estimate.  Otherwise
the stored terms are the whole series (a free polynomial).

The exact homogeneous norm ``||sum_{Lambda_p} A x W_alpha|| =
||sum A* A / b||^{1/2}`` is the workhorse: the upper end of every model-norm
bracket is the triangle inequality over homogeneous levels, and the lower end
is the numerical norm on the truncated Fock model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .domain import OperatorTuple, minkowski_functional
from .errors import CertificationError, ValidationError
from .fock import TruncatedModel, count_dim, operator_norm
from .polycoeff import PolyTuple, ball_polynomial, poly_tuple_from_json, poly_tuple_to_json
from .words import WordTuple, compositions, enumerate_lambda, profile, word_tuple_from_json

MAX_MODEL_DIM = 4000
SUP_GRID = (0.9, 0.99, 0.999)


@dataclass(frozen=True, eq=False)
class FormalSeries:
    q: PolyTuple
    terms: Mapping[WordTuple, np.ndarray]
    coeff_dim: int = 1
    truncated: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        clean = {}
        for wt, A in self.terms.items():
            if len(wt) != self.q.k:
                raise ValidationError(f"word tuple {wt} has {len(wt)} components, expected {self.q.k}")
            for w, n in zip(wt, self.q.n_vec):
                if any(not 1 <= c <= n for c in w):
                    raise ValidationError(f"word {list(w)} uses a letter outside 1..{n}")
            A = np.atleast_2d(np.asarray(A, dtype=complex))
            if A.shape != (self.coeff_dim, self.coeff_dim):
                raise ValidationError(f"block for {wt} has shape {A.shape}, expected {(self.coeff_dim,) * 2}")
            if not np.all(np.isfinite(A)):
                raise ValidationError(f"block for {wt} is not finite")
            clean[tuple(tuple(w) for w in wt)] = A
        # canonical order keeps every reduction independent of how terms arrived
        order = sorted(clean, key=lambda wt: (sum(map(len, wt)), profile(wt), wt))
        object.__setattr__(self, "terms", {wt: clean[wt] for wt in order})

    # -- structure -----------------------------------------------------------

    @property
    def k(self) -> int:
        return self.q.k

    @property
    def degree_profile(self) -> tuple[int, ...]:
        if not self.terms:
            return (0,) * self.k
        return tuple(max(len(wt[i]) for wt in self.terms) for i in range(self.k))

    @property
    def total_degree(self) -> int:
        return max((sum(profile(wt)) for wt in self.terms), default=0)

    def levels(self) -> dict[tuple[int, ...], list[tuple[WordTuple, np.ndarray]]]:
        if "levels" not in self._cache:
            out: dict = {}
            for wt, A in self.terms.items():
                out.setdefault(profile(wt), []).append((wt, A))
            self._cache["levels"] = dict(sorted(out.items(), key=lambda t: (sum(t[0]), t[0])))
        return self._cache["levels"]

    def coefficient(self, wt: WordTuple) -> np.ndarray:
        return self.terms.get(wt, np.zeros((self.coeff_dim, self.coeff_dim), dtype=complex))

    def constant_term(self) -> np.ndarray:
        return self.coefficient(((),) * self.k)

    def _like(self, terms, truncated=None) -> "FormalSeries":
        return FormalSeries(self.q, terms, self.coeff_dim, self.truncated if truncated is None else truncated)

    def check_compatible(self, other: "FormalSeries") -> None:
        if not self.q.same_as(other.q) or self.coeff_dim != other.coeff_dim:
            raise ValidationError("series live over different polydomains or coefficient sizes")

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        self.check_compatible(other)
        terms = dict(self.terms)
        for wt, A in other.terms.items():
            terms[wt] = terms[wt] + A if wt in terms else A
        return self._like(terms, self.truncated or other.truncated)

    def __neg__(self) -> "FormalSeries":
        return self._like({wt: -A for wt, A in self.terms.items()})

    def __sub__(self, other: "FormalSeries") -> "FormalSeries":
        return self + (-other)

    def scale(self, c: complex) -> "FormalSeries":
        return self._like({wt: c * A for wt, A in self.terms.items()})

    def partial_sum(self, m: int) -> "FormalSeries":
        """Terms of total degree ``<= m``; the result is a polynomial."""
        return self._like({wt: A for wt, A in self.terms.items() if sum(profile(wt)) <= m}, truncated=False)

    def window(self, max_total: int) -> dict[WordTuple, np.ndarray]:
        """All coefficients up to total degree ``max_total``, zeros included."""
        out = {}
        for m in range(max_total + 1):
            for p in compositions(m, self.k):
                for wt in enumerate_lambda(self.q.n_vec, p):
                    out[wt] = self.coefficient(wt)
        return out


def from_scalars(q: PolyTuple, coeffs: Mapping[WordTuple, complex], truncated: bool = False) -> FormalSeries:
    return FormalSeries(q, {wt: np.array([[c]], dtype=complex) for wt, c in coeffs.items()}, 1, truncated)


def from_function(q: PolyTuple, fn: Callable[[WordTuple], complex], max_total: int, truncated: bool = True) -> FormalSeries:
    """Scalar series with coefficient ``fn(alpha)`` for every ``|alpha| <= max_total``."""
    coeffs = {}
    for m in range(max_total + 1):
        for p in compositions(m, q.k):
            for wt in enumerate_lambda(q.n_vec, p):
                c = fn(wt)
                if c != 0:
                    coeffs[wt] = c
    return from_scalars(q, coeffs, truncated)


def geometric_series(q: PolyTuple, max_total: int, ratio: float = 1.0) -> FormalSeries:
    """``sum ratio^{|alpha|} Z_alpha`` truncated at total degree ``max_total``."""
    return from_function(q, lambda wt: ratio ** sum(len(w) for w in wt), max_total)


def monomial(q: PolyTuple, wt: WordTuple, c: complex = 1.0) -> FormalSeries:
    return from_scalars(q, {wt: c})


# -- norms ----------------------------------------------------------------------

@dataclass
class NormBracket:
    lower: float
    upper: float
    caps: tuple[int, ...] = ()

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "width": self.width, "caps": list(self.caps)}


def level_gram(F: FormalSeries, p: Sequence[int]) -> np.ndarray:
    """``sum_{alpha in Lambda_p} A_alpha* A_alpha / (b_{1,alpha_1} ... b_{k,alpha_k})``."""
    p = tuple(p)
    G = np.zeros((F.coeff_dim, F.coeff_dim), dtype=complex)
    for wt, A in F.levels().get(p, []):
        G += (A.conj().T @ A) / float(F.q.b(wt))
    return G


def homogeneous_norm(F: FormalSeries, p: Sequence[int]) -> float:
    """Exact norm of the level-``p`` part on the universal model."""
    key = ("hom", tuple(p))
    if key not in F._cache:
        G = level_gram(F, p)
        lam = np.linalg.eigvalsh(0.5 * (G + G.conj().T))[-1] if G.size else 0.0
        F._cache[key] = math.sqrt(max(float(lam), 0.0))
    return F._cache[key]


def _radii(F: FormalSeries, r_vec) -> tuple[float, ...]:
    rs = (float(r_vec),) * F.k if np.isscalar(r_vec) else tuple(float(r) for r in r_vec)
    if len(rs) != F.k or any(r < 0 for r in rs):
        raise ValidationError(f"polyradius needs {F.k} nonnegative entries")
    return rs


def _rpow(rs, p) -> float:
    return math.prod(r**e for r, e in zip(rs, p))


def model_upper(F: FormalSeries, r_vec) -> float:
    rs = _radii(F, r_vec)
    return sum(_rpow(rs, p) * homogeneous_norm(F, p) for p in F.levels())


def default_model_caps(F: FormalSeries) -> tuple[int, ...]:
    """Stored degree profile, shrunk until the model fits ``MAX_MODEL_DIM``."""
    caps = list(F.degree_profile)
    while count_dim(F.q.n_vec, caps) * F.coeff_dim > MAX_MODEL_DIM and max(caps) > 0:
        caps[caps.index(max(caps))] -= 1
    return tuple(caps)


def _level_operators(F: FormalSeries, caps: tuple[int, ...]) -> dict:
    key = ("levelops", caps)
    if key not in F._cache:
        model = TruncatedModel(F.q, caps)
        ops = {}
        for p, items in F.levels().items():
            if any(pi > c for pi, c in zip(p, caps)):
                continue
            acc = None
            for wt, A in items:
                term = sp.kron(sp.csr_matrix(A), model.word_operator(wt), format="csr")
                acc = term if acc is None else acc + term
            ops[p] = acc
        F._cache[key] = (model, ops)
    return F._cache[key]


def model_operator(F: FormalSeries, r_vec, caps: Sequence[int] | None = None) -> sp.csr_matrix:
    """``F(rW) = sum A x r^p W_alpha`` on the truncated model."""
    rs = _radii(F, r_vec)
    caps = default_model_caps(F) if caps is None else tuple(caps)
    model, ops = _level_operators(F, caps)
    out = sp.csr_matrix((F.coeff_dim * model.dim,) * 2, dtype=complex)
    for p, op in ops.items():
        out = out + _rpow(rs, p) * op
    return out


def model_norm(F: FormalSeries, r_vec, caps: Sequence[int] | None = None) -> NormBracket:
    """Bracket for ``||F(rW)||`` over the stored terms.

    ``lower`` is the norm of the compression to the truncated model;
    ``upper`` adds the exact homogeneous norms level by level.
    """
    caps = default_model_caps(F) if caps is None else tuple(caps)
    lower = operator_norm(model_operator(F, r_vec, caps))
    upper = model_upper(F, r_vec)
    return NormBracket(min(lower, upper), upper, caps)


def sup_norm_surrogate(F: FormalSeries, grid: Sequence[float] = SUP_GRID) -> float:
    """``max_r upper(||F(rW)||)`` over ``r`` near 1, standing in for ``||F||_inf``."""
    return max(model_upper(F, r) for r in grid)


# -- evaluation -------------------------------------------------------------------

@dataclass
class Evaluation:
    value: np.ndarray
    tail_estimate: float
    minkowski: float | None
    level_bounds: list[float]

    def to_json(self) -> dict:
        from .domain import matrix_to_json

        return {
            "value": matrix_to_json(self.value),
            "norm": operator_norm(self.value),
            "tail_estimate": self.tail_estimate,
            "minkowski": self.minkowski,
            "level_bounds": self.level_bounds,
        }


def _level_bounds(F: FormalSeries, s: float) -> list[float]:
    """``t_m = sum_{|p|=m} s^m hom(F, p)`` bounds the total-degree-``m`` part at ``X`` in ``s D_q^-``."""
    M = F.total_degree
    t = [0.0] * (M + 1)
    for p in F.levels():
        t[sum(p)] += s ** sum(p) * homogeneous_norm(F, p)
    return t


def extrapolated_tail(t: Sequence[float]) -> float:
    """Geometric extrapolation of ``sum_{m > M} t_m`` from the trailing levels."""
    M = len(t) - 1
    if t[M] == 0.0:
        return 0.0
    w = max(2, M // 4)
    ratios = [t[m] / t[m - 1] for m in range(max(1, M - w + 1), M + 1) if t[m - 1] > 0.0]
    if not ratios:
        return math.inf
    rho = max(ratios)
    if rho >= 1.0:
        return math.inf
    return t[M] * rho / (1.0 - rho)


def evaluate(F: FormalSeries, X: OperatorTuple, tail_tol: float = 1e-8, minkowski: float | None = None) -> Evaluation:
    """``F(X) = sum A x X_alpha`` summed by total degree.

    For a truncated series the unseen tail is estimated from the von Neumann
    level bounds at ``s = m(X)``; exceeding ``tail_tol`` raises
    :class:`CertificationError`.
    """
    X.matching(F.q)
    d = X.dim
    dK = F.coeff_dim
    out = np.zeros((dK * d, dK * d), dtype=complex)
    for p, items in F.levels().items():
        for wt, A in items:
            Xa = X.word_tuple(wt)
            out += np.kron(A, Xa) if dK > 1 else A[0, 0] * Xa
    tail = 0.0
    bounds: list[float] = []
    s = minkowski
    if F.truncated:
        if s is None:
            s = minkowski_functional(F.q, X)
        bounds = _level_bounds(F, s)
        tail = extrapolated_tail(bounds)
        if not tail <= tail_tol:
            raise CertificationError(f"series not certified convergent at X (tail estimate {tail:.3e} > {tail_tol:.3e})")
    return Evaluation(out, tail, s, bounds)


# -- Abel / Hadamard / Cauchy / Liouville -----------------------------------------

def scaled_gram_norms(F: FormalSeries, r_vec, P_max: int) -> list[float]:
    """``V_m = max_{|p|=m} ||r^{2p} sum A*A/b||`` for ``m = 0..P_max``."""
    rs = _radii(F, r_vec)
    V = []
    for m in range(P_max + 1):
        best = 0.0
        for p in compositions(m, F.k):
            best = max(best, (_rpow(rs, p) * homogeneous_norm(F, p)) ** 2)
        V.append(best)
    return V


@dataclass
class AbelReport:
    bounded: bool
    sup_value: float
    values: list[float]
    window: int

    def to_json(self) -> dict:
        return {"bounded": self.bounded, "sup_value": self.sup_value, "window": self.window, "values": self.values,
                "note": "finite-window diagnostic"}


def growth_trend(values: Sequence[float], window: int, rel: float = 1e-9) -> bool:
    tail = list(values[-(window + 1):])
    if len(tail) < 2 or tail[-1] <= 0.0:
        return False
    nondecreasing = all(b >= a for a, b in zip(tail, tail[1:]))
    return nondecreasing and tail[-1] > tail[0] * (1.0 + rel)


def abel_bounded_test(F: FormalSeries, r_vec, P_max: int, window: int | None = None) -> AbelReport:
    """Is ``{||r^{2p} sum A*A / b||}`` bounded, judged on ``|p| <= P_max``?"""
    V = scaled_gram_norms(F, r_vec, P_max)
    w = max(2, P_max // 4) if window is None else window
    return AbelReport(not growth_trend(V, w), max(V), V, w)


def domain_membership_omega(F: FormalSeries, r_vec, P_max: int) -> AbelReport:
    """Membership of the polyradius in the set of bounded polyradii (finite window)."""
    return abel_bounded_test(F, r_vec, P_max)


def log_convex_mix(F: FormalSeries, r_vec, s_vec, t: float, P_max: int) -> dict:
    rs, ss = _radii(F, r_vec), _radii(F, s_vec)
    mix = tuple(a**t * b ** (1.0 - t) for a, b in zip(rs, ss))
    a, b, c = (domain_membership_omega(F, v, P_max) for v in (rs, ss, mix))
    return {"r": list(rs), "s": list(ss), "t": t, "mix": list(mix),
            "r_in": a.bounded, "s_in": b.bounded, "mix_in": c.bounded,
            "consistent": (not (a.bounded and b.bounded)) or c.bounded}


@dataclass
class RadiusReport:
    gamma: float
    lower_observed: float
    roots: list[float]
    window: int

    def to_json(self) -> dict:
        return {"gamma_estimate": self.gamma, "lower_observed": self.lower_observed, "window": self.window,
                "roots": self.roots, "note": "limsup estimated by trailing-window max"}


def polydomain_radius(F: FormalSeries, P_max: int, window: int | None = None) -> RadiusReport:
    """Hadamard-type radius ``1/gamma = limsup ||sum A*A/b||^{1/(2|p|)}``, windowed."""
    w = P_max // 2 if window is None else window
    if not 2 <= w <= P_max:
        raise ValidationError("need 2 <= window <= P_max")
    roots = [0.0]
    for m in range(1, P_max + 1):
        best = 0.0
        for p in compositions(m, F.k):
            h = homogeneous_norm(F, p)
            if h > 0.0:
                best = max(best, h ** (1.0 / m))
        roots.append(best)
    top = max(roots[P_max - w:])
    overall = max(roots[1:]) if P_max >= 1 else 0.0
    gamma = math.inf if top == 0.0 else 1.0 / top
    lower = math.inf if overall == 0.0 else 1.0 / overall
    return RadiusReport(gamma, lower, roots, w)


def cauchy_check(F: FormalSeries, r_vec, caps: Sequence[int] | None = None) -> dict:
    """Slack in ``hom(F, p) <= M(r) / r^p`` for every stored level, ``M`` from the bracket's upper end."""
    rs = _radii(F, r_vec)
    if any(r <= 0 for r in rs):
        raise ValidationError("Cauchy inequalities need r_i > 0")
    M = model_norm(F, rs, caps)
    rows = []
    for p in F.levels():
        h = homogeneous_norm(F, p)
        bound = M.upper / _rpow(rs, p)
        rows.append({"p": list(p), "homogeneous_norm": h, "bound": bound, "slack": bound - h})
    worst = min((r["slack"] for r in rows), default=0.0)
    return {"M": M.to_json(), "levels": rows, "min_slack": worst, "violations": [r for r in rows if r["slack"] < -1e-9]}


def liouville_degree_bound(F: FormalSeries, m_vec: Sequence[int], C: float, r_grid: Sequence[float]) -> dict:
    """Cauchy bounds ``hom(F, p) <= C r^{m - p}`` along a growing radius grid.

    Levels with some ``p_s > m_s`` are forced toward zero; any level whose
    scaled norm exceeds ``C`` somewhere on the grid is a violation of the
    growth hypothesis.
    """
    if any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValidationError("r_grid must be increasing")
    m_vec = tuple(m_vec)
    if len(m_vec) != F.k:
        raise ValidationError(f"m needs {F.k} entries")
    r_max = r_grid[-1]
    forced, violations = [], []
    for p in F.levels():
        if all(pi <= mi for pi, mi in zip(p, m_vec)):
            continue
        h = homogeneous_norm(F, p)
        exps = [pi - mi for pi, mi in zip(p, m_vec)]
        bound = C / math.prod(r_max**e for e in exps)
        forced.append({"p": list(p), "homogeneous_norm": h, "certified_bound": bound})
        for r in r_grid:
            scaled = h * math.prod(r**e for e in exps)
            if scaled > C * (1.0 + 1e-12):
                violations.append({"p": list(p), "r": r, "scaled_norm": scaled})
                break
    return {"m": list(m_vec), "C": C, "r_max": r_max, "forced": forced, "violations": violations,
            "certified_degree_box": list(m_vec) if not violations else None}


def schwarz_check(F: FormalSeries, X: OperatorTuple, caps: Sequence[int] | None = None,
                  tail_tol: float = 1e-8) -> dict:
    """``||F(X)|| <= m(X)`` for ``F(0) = 0`` and sup-norm surrogate at most 1."""
    if operator_norm(F.constant_term()) > 1e-12:
        raise ValidationError("Schwarz lemma needs F(0) = 0")
    sup = sup_norm_surrogate(F)
    if sup > 1.0 + 1e-9:
        raise ValidationError(f"sup-norm surrogate {sup:.6g} exceeds 1")
    m = minkowski_functional(F.q, X)
    if m >= 1.0:
        raise ValidationError(f"X is not inside the open polydomain (m(X) = {m:.6g})")
    ev = evaluate(F, X, tail_tol, minkowski=m)
    lhs = operator_norm(ev.value)
    return {"lhs": lhs, "rhs": m, "slack": m - lhs, "tail_estimate": ev.tail_estimate, "sup_surrogate": sup,
            "sup_grid": list(SUP_GRID)}


# -- JSON -------------------------------------------------------------------------

def series_from_json(obj, q: PolyTuple | None = None) -> FormalSeries:
    from .domain import matrix_from_json

    if not isinstance(obj, dict):
        raise ValidationError("series must be a JSON object")
    try:
        n_vec = [int(v) for v in obj["n"]]
    except (KeyError, TypeError, ValueError):
        raise ValidationError("series needs an integer array 'n'") from None
    k = obj.get("k", len(n_vec))
    if k != len(n_vec):
        raise ValidationError(f"'k' is {k} but 'n' has {len(n_vec)} entries")
    if q is None and "q" in obj:
        q = poly_tuple_from_json(obj["q"])
    if q is None:
        q = PolyTuple(tuple(ball_polynomial(n) for n in n_vec))
    if list(q.n_vec) != n_vec:
        raise ValidationError(f"series alphabet sizes {n_vec} do not match q {list(q.n_vec)}")
    dK = int(obj.get("coeff_dim", 1))
    terms = {}
    for idx, term in enumerate(obj.get("terms", [])):
        if not isinstance(term, dict) or "words" not in term:
            raise ValidationError(f"terms[{idx}] needs 'words'")
        try:
            wt = word_tuple_from_json(term["words"], n_vec)
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"terms[{idx}].words: {exc}") from None
        if "block" in term:
            A = matrix_from_json(term["block"], f"terms[{idx}].block", dK)
        elif "coeff" in term and dK == 1:
            c = term["coeff"]
            A = np.array([[complex(*c) if isinstance(c, list) else complex(c)]])
        else:
            raise ValidationError(f"terms[{idx}] needs 'block' (or 'coeff' when coeff_dim is 1)")
        if wt in terms:
            raise ValidationError(f"terms[{idx}] repeats word tuple {term['words']}")
        terms[wt] = A
    return FormalSeries(q, terms, dK, bool(obj.get("truncated", False)))


def series_to_json(F: FormalSeries, include_q: bool = True) -> dict:
    out = {"k": F.k, "n": list(F.q.n_vec), "coeff_dim": F.coeff_dim, "truncated": F.truncated,
           "terms": [{"words": [list(w) for w in wt], "block": [[float(z.real), float(z.imag)] for z in A.reshape(-1)]}
                     for p, items in F.levels().items() for wt, A in items]}
    if include_q:
        out["q"] = poly_tuple_to_json(F.q)
    return out
