"""Metric structure on free holomorphic functions and the convergence theorems.

``d_r(F, G) = ||F(rW) - G(rW)||`` is only bracketable at finite truncation,
so the metric ``rho`` is reported as a midpoint value with an explicit
uncertainty.  Weierstrass, Montel and Vitali are exercised on finite
sequences over finite coefficient windows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import minkowski_functional, random_operator_tuple
from .errors import ValidationError
from .fock import TruncatedModel, operator_norm
from .series import FormalSeries, NormBracket, evaluate, growth_trend, model_norm, model_upper


class NotLocallyBounded(ValidationError):
    """Per-radius suprema exceed the ceiling while still growing."""


@dataclass(frozen=True)
class MetricConfig:
    """``r_m = 1 - 2^{-m}``, weights ``2^{-m}``, summed for ``m = 1..M_terms``."""

    M_terms: int = 20

    def __post_init__(self):
        if self.M_terms < 1:
            raise ValidationError("M_terms must be >= 1")

    def radius(self, m: int) -> float:
        return 1.0 - 2.0**-m

    @property
    def radii(self) -> list[float]:
        return [self.radius(m) for m in range(1, self.M_terms + 1)]

    @property
    def remainder(self) -> float:
        return 2.0**-self.M_terms

    def to_json(self) -> dict:
        return {"r_rule": "r_m = 1 - 2^-m", "weights": "2^-m", "M_terms": self.M_terms, "remainder": self.remainder}


def _check_radius(r: float) -> None:
    if not 0.0 < r < 1.0:
        raise ValidationError(f"radius must lie in (0, 1), got {r}")


def d_r(F: FormalSeries, G: FormalSeries, r: float, caps: Sequence[int] | None = None) -> NormBracket:
    _check_radius(r)
    F.check_compatible(G)
    return model_norm(F - G, r, caps)


def _saturate(d: float) -> float:
    return d / (1.0 + d) if math.isfinite(d) else 1.0


@dataclass
class RhoResult:
    value: float
    uncertainty: float
    terms: list[dict]
    config: MetricConfig

    def to_json(self) -> dict:
        return {"value": self.value, "uncertainty": self.uncertainty, "config": self.config.to_json(),
                "terms": self.terms}


def rho_metric(F: FormalSeries, G: FormalSeries, config: MetricConfig | None = None,
               caps: Sequence[int] | None = None) -> RhoResult:
    """``sum 2^{-m} d/(1+d)`` at bracket midpoints.

    The uncertainty adds the spread of ``d/(1+d)`` across each bracket and the
    dropped tail ``2^{-M}``.
    """
    config = config or MetricConfig()
    F.check_compatible(G)
    D = F - G
    value, unc, terms = 0.0, config.remainder, []
    for m, r in enumerate(config.radii, start=1):
        br = model_norm(D, r, caps)
        w = 2.0**-m
        value += w * _saturate(br.midpoint)
        unc += w * (_saturate(br.upper) - _saturate(br.lower))
        terms.append({"m": m, "r": r, "lower": br.lower, "upper": br.upper})
    return RhoResult(value, unc, terms, config)


# -- sequences --------------------------------------------------------------------

def _check_sequence(seq: Sequence[FormalSeries]) -> None:
    if not seq:
        raise ValidationError("sequence is empty")
    for G in seq[1:]:
        seq[0].check_compatible(G)


def _tail_spread(seq: Sequence[FormalSeries], r: float, window: int, caps) -> list[float]:
    """Upper brackets of ``d_r(G_j, G_last)`` over the trailing window."""
    last = seq[-1]
    return [model_upper(G - last, r) if caps is None else model_norm(G - last, r, caps).upper
            for G in seq[-(window + 1):-1]]


def _default_window(n: int) -> int:
    return max(1, min(n - 1, max(2, n // 4)))


@dataclass
class ConvergenceReport:
    convergent: bool
    traces: dict[float, list[float]]
    window: int
    coeff_window: int | None = None
    limit: FormalSeries | None = None
    limit_residuals: dict[float, list[float]] = field(default_factory=dict)
    coefficient_change: float = 0.0
    status: str = ""
    first_violation: float | None = None

    def to_json(self) -> dict:
        from .series import series_to_json

        out = {
            "convergent": self.convergent,
            "status": self.status or ("convergent" if self.convergent else "divergent"),
            "window": self.window,
            "coeff_window": self.coeff_window,
            "coefficient_change": self.coefficient_change,
            "first_violation_r": self.first_violation,
            "cauchy_traces": [{"r": r, "upper": v} for r, v in self.traces.items()],
            "limit_residuals": [{"r": r, "upper": v} for r, v in self.limit_residuals.items()],
        }
        if self.limit is not None:
            out["limit"] = series_to_json(self.limit, include_q=False)
        return out


def _windowed(F: FormalSeries, coeff_window: int | None) -> FormalSeries:
    if coeff_window is None:
        return F
    return F.partial_sum(coeff_window)


def _max_coefficient_change(A: FormalSeries, B: FormalSeries) -> float:
    D = A - B
    return max((float(np.max(np.abs(M))) for M in D.terms.values()), default=0.0)


def weierstrass_limit(seq: Sequence[FormalSeries], r_grid: Sequence[float], tol: float = 1e-8,
                      coeff_window: int | None = None, caps: Sequence[int] | None = None) -> ConvergenceReport:
    """Cauchy test on every grid radius and recovery of the coefficientwise limit.

    The candidate limit is the last element restricted to the coefficient
    window; convergence additionally requires the windowed coefficients to
    have settled within ``tol`` and ``d_r(G_m, F)`` to end below ``tol``.
    """
    _check_sequence(seq)
    for r in r_grid:
        _check_radius(r)
    w = _default_window(len(seq))
    traces = {float(r): _tail_spread(seq, r, w, caps) for r in r_grid}
    cauchy = all(max(v, default=0.0) <= tol for v in traces.values())
    limit = _windowed(seq[-1], coeff_window)
    change = max((_max_coefficient_change(_windowed(G, coeff_window), limit) for G in seq[-(w + 1):-1]), default=0.0)
    residuals = {}
    for r in r_grid:
        residuals[float(r)] = [model_upper(_windowed(G, coeff_window) - limit, r) for G in seq]
    settled = change <= tol and all(v[-1] <= tol for v in residuals.values())
    ok = cauchy and settled
    return ConvergenceReport(ok, traces, w, coeff_window, limit if ok else None, residuals, change)


def locally_bounded_check(family: Sequence[FormalSeries], r_grid: Sequence[float],
                          caps: Sequence[int] | None = None) -> list[dict]:
    """Per-radius supremum over the family of the model-norm upper brackets."""
    rows = []
    for r in r_grid:
        _check_radius(r)
        row = {"r": float(r), "sup_upper": max((model_upper(F, r) for F in family), default=0.0)}
        if caps is not None:
            row["sup_lower"] = max((model_norm(F, r, caps).lower for F in family), default=0.0)
        rows.append(row)
    return rows


def _unbounded_radius(seq: Sequence[FormalSeries], r_grid: Sequence[float], ceiling: float) -> float | None:
    for r in r_grid:
        vals = [model_upper(F, r) for F in seq]
        if max(vals, default=0.0) > ceiling and growth_trend(vals, _default_window(len(vals)) if len(vals) > 1 else 1):
            return float(r)
    return None


@dataclass
class MontelResult:
    indices: list[int]
    limit: FormalSeries
    intervals: list[dict]
    decay: dict[float, list[float]]
    sups: list[dict]

    @property
    def succeeded(self) -> bool:
        return bool(self.indices) and all(iv["width"] <= iv["tol"] or iv["count"] == 1 for iv in self.intervals)

    def to_json(self) -> dict:
        from .series import series_to_json

        return {"succeeded": self.succeeded, "indices": self.indices, "limit": series_to_json(self.limit, include_q=False),
                "locally_bounded": self.sups,
                "decay": [{"r": r, "upper": v} for r, v in self.decay.items()],
                "intervals": self.intervals,
                "note": "finite coefficient window, coordinatewise bisection"}


def montel_extract(seq: Sequence[FormalSeries], coeff_window: int, r_grid: Sequence[float], tol: float = 1e-3,
                   ceiling: float = 1e6) -> MontelResult:
    """Bolzano-Weierstrass on the windowed coefficients, one real coordinate at a time.

    Each coordinate is bisected, always keeping the half holding more of the
    surviving indices (ties go to the upper half), until the surviving values fit in an interval of
    width ``tol``.  The limit candidate is the last surviving element.
    """
    _check_sequence(seq)
    bad = _unbounded_radius(seq, r_grid, ceiling)
    if bad is not None:
        raise NotLocallyBounded(f"not locally bounded: sup at r = {bad} exceeds {ceiling:g} and keeps growing")
    sups = locally_bounded_check(seq, r_grid)
    windows = [seq[j].window(coeff_window) for j in range(len(seq))]
    keys = list(windows[0])
    dK = seq[0].coeff_dim
    idx = list(range(len(seq)))
    intervals = []
    for wt in keys:
        for a in range(dK):
            for b in range(dK):
                for part in ("re", "im"):
                    vals = {j: getattr(windows[j][wt][a, b], "real" if part == "re" else "imag") for j in idx}
                    lo, hi = min(vals.values()), max(vals.values())
                    while hi - lo > tol and len(idx) > 1:
                        mid = 0.5 * (lo + hi)
                        left = [j for j in idx if vals[j] <= mid]
                        right = [j for j in idx if vals[j] > mid]
                        idx = right if len(right) >= len(left) else left
                        lo, hi = min(vals[j] for j in idx), max(vals[j] for j in idx)
                    if hi - lo > 0.0 or len(idx) < len(seq):
                        intervals.append({"words": [list(w) for w in wt], "entry": [a, b], "part": part,
                                          "lo": lo, "hi": hi, "width": hi - lo, "tol": tol, "count": len(idx)})
    limit = seq[idx[-1]].partial_sum(coeff_window)
    decay = {float(r): [model_upper(seq[j].partial_sum(coeff_window) - limit, r) for j in idx] for r in r_grid}
    return MontelResult(idx, limit, intervals, decay, sups)


def vitali_check(seq: Sequence[FormalSeries], gamma_point: float, r_grid: Sequence[float], tol: float = 1e-8,
                 ceiling: float = 1e6) -> ConvergenceReport:
    """Local boundedness plus Cauchy at ``gamma`` should give Cauchy at every grid radius.

    Statuses: ``not-locally-bounded`` and ``not-cauchy-at-gamma`` for failed
    hypotheses, then ``convergent`` or ``violation`` (with the first
    offending radius).
    """
    _check_sequence(seq)
    _check_radius(gamma_point)
    for r in r_grid:
        _check_radius(r)
    w = _default_window(len(seq))
    if _unbounded_radius(seq, r_grid, ceiling) is not None:
        return ConvergenceReport(False, {}, w, status="not-locally-bounded")
    at_gamma = _tail_spread(seq, gamma_point, w, None)
    if max(at_gamma, default=0.0) > tol:
        return ConvergenceReport(False, {float(gamma_point): at_gamma}, w, status="not-cauchy-at-gamma")
    traces = {float(gamma_point): at_gamma}
    first = None
    for r in r_grid:
        spread = _tail_spread(seq, r, w, None)
        traces[float(r)] = spread
        if first is None and max(spread, default=0.0) > tol:
            first = float(r)
    ok = first is None
    return ConvergenceReport(ok, traces, w, status="convergent" if ok else "violation", first_violation=first)


# -- maximum principle ------------------------------------------------------------

def max_principle_probe(F: FormalSeries, r: float, caps: Sequence[int] | None = None, n_samples: int = 200,
                        seed: int = 0, max_factor_dim: int = 3, tail_tol: float = 1e-8) -> dict:
    """Compare ``||F(X)||`` on seeded samples of ``r D_q^-`` against the bracket for ``||F(rW)||``.

    Samples are random cross-commuting tuples scaled to ``m(X) = r u`` with
    ``u`` uniform in ``(0, 1]``.  The truncated ``rW`` is a deterministic
    witness whose value is the lower end of the bracket.
    """
    _check_radius(r)
    bracket = model_norm(F, r, caps)
    model = TruncatedModel(F.q, bracket.caps)
    witness = operator_norm(evaluate(F, model.operator_tuple(r), tail_tol, minkowski=r).value)
    rng = np.random.default_rng(seed)
    sampled = []
    for _ in range(n_samples):
        dims = [int(v) for v in rng.integers(1, max_factor_dim + 1, size=F.k)]
        X = random_operator_tuple(F.q.n_vec, dims, rng)
        u = 1.0 - rng.random()
        m = minkowski_functional(F.q, X)
        if m == 0.0:
            continue
        X = X.scaled(r * u / m)
        sampled.append(operator_norm(evaluate(F, X, tail_tol, minkowski=r * u).value))
    sampled_max = max(sampled, default=0.0)
    return {
        "r": r,
        "n_samples": n_samples,
        "seed": seed,
        "sampled_max": sampled_max if sampled else None,
        "model_norm_bracket": bracket.to_json(),
        "witness": witness,
        "samples_within_upper": sampled_max <= bracket.upper + 1e-8,
        "witness_attains_lower": witness >= bracket.lower - 1e-10,
    }
