"""``ncpolydom`` command line: one subcommand per library operation, JSON in and out.

Exit status is 0 on success, 1 on invalid input and 2 when a result was
computed but could not be certified (for instance a series tail above
``--tail-tol``).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from contextlib import nullcontext
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import analysis, berezin, domain, fock, series
from .errors import CertificationError, ValidationError
from .polycoeff import PolyTuple, b_table, poly_tuple_from_json
from .serialize import dumps


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"usage: {message}")


class _Inputs:
    """Loads JSON arguments (inline text or file paths) and records their digests."""

    def __init__(self):
        self.seen: dict[str, dict] = {}

    def load(self, name: str, value: str):
        text = value if value.lstrip()[:1] in ("{", "[") else None
        source = "inline"
        if text is None:
            path = Path(value)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ValidationError(f"--{name}: cannot read {value}: {exc.strerror}") from None
            source = value
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"--{name}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        self.seen[name] = {"source": source, "sha256": hashlib.sha256(text.encode()).hexdigest()}
        return obj


def _ints(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from None
    return vals


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None
    if not all(np.isfinite(vals)):
        raise ValidationError(f"non-finite value in {text!r}")
    return vals


def _caps(text: str | None, k: int) -> tuple[int, ...] | None:
    if text is None:
        return None
    vals = _ints(text)
    if len(vals) == 1:
        vals = vals * k
    if len(vals) != k or any(v < 0 for v in vals):
        raise ValidationError(f"--caps needs 1 or {k} nonnegative integers")
    return tuple(vals)


def _radius(text: str, k: int):
    vals = _floats(text)
    if len(vals) == 1:
        return vals[0]
    if len(vals) != k:
        raise ValidationError(f"--r needs 1 or {k} values")
    return tuple(vals)


def _positive(name: str, v):
    if v is not None and not v > 0:
        raise ValidationError(f"--{name} must be > 0")
    return v


# -- loaders -----------------------------------------------------------------------

def _q(args, inputs: _Inputs, required: bool = True) -> PolyTuple | None:
    if getattr(args, "q", None) is None:
        if required:
            raise ValidationError("--q is required")
        return None
    return poly_tuple_from_json(inputs.load("q", args.q))


def _x(args, inputs: _Inputs) -> domain.OperatorTuple:
    return domain.operator_tuple_from_json(inputs.load("x", args.x))


def _series(args, inputs: _Inputs, name: str = "series") -> series.FormalSeries:
    q = _q(args, inputs, required=False)
    return series.series_from_json(inputs.load(name, getattr(args, name)), q)


def _sequence(args, inputs: _Inputs) -> list[series.FormalSeries]:
    obj = inputs.load("seq", args.seq)
    q = _q(args, inputs, required=False)
    if isinstance(obj, dict):
        if q is None and "q" in obj:
            q = poly_tuple_from_json(obj["q"])
        obj = obj.get("sequence")
    if not isinstance(obj, list) or not obj:
        raise ValidationError("--seq must be a non-empty array of series (or an object with 'sequence')")
    out = []
    for i, item in enumerate(obj):
        try:
            out.append(series.series_from_json(item, q))
        except ValidationError as exc:
            raise ValidationError(f"sequence[{i}]: {exc}") from None
    return out


# -- commands ----------------------------------------------------------------------

def cmd_bcoeffs(args, inputs):
    q = _q(args, inputs)
    if args.max < 0:
        raise ValidationError("--max must be >= 0")
    out = {"polynomials": []}
    for qi in q:
        single = PolyTuple((qi,))
        rows = b_table(single, [args.max])
        entry = {"n": qi.n, "table": [{"word": list(wt[0]), "b": float(v)} for wt, v in rows.items()]}
        if qi.n == 1:
            entry["b"] = [float(qi.b((1,) * m)) for m in range(args.max + 1)]
        out["polynomials"].append(entry)
    if q.k == 1 and q[0].n == 1:
        out["b"] = out["polynomials"][0]["b"]
    return out


def cmd_model(args, inputs):
    q = _q(args, inputs)
    model = fock.TruncatedModel(q, _caps(args.caps, q.k))
    D = fock.universal_defect(model)
    P = model.vacuum_projection()
    rows = [fock.operator_norm(fock.row_defect(model, i)) for i in range(1, q.k + 1)]
    out = {"caps": list(model.caps), "dim": model.dim, "factor_dims": list(model.dims),
           "defect_minus_vacuum_projection": fock.operator_norm(D - P),
           "row_defect_norms": rows}
    if args.dump:
        out["operators"] = [{"i": i, "j": j, **fock.operator_to_triplets(model.ambient(i, j))}
                            for i in range(1, q.k + 1) for j in range(1, q[i - 1].n + 1)]
    return out


def cmd_membership(args, inputs):
    q, X = _q(args, inputs), _x(args, inputs)
    rep = domain.membership(q, X, args.mode, _positive("eps-psd", args.eps_psd))
    out = rep.to_json()
    out["accepted"] = rep.accepts(args.mode)
    return out


def cmd_minkowski(args, inputs):
    q, X = _q(args, inputs), _x(args, inputs)
    tol = _positive("tol-bisect", args.tol_bisect)
    m = domain.minkowski_functional(q, X, tol)
    return {"minkowski": m, "bracket": {"lower": m * (1.0 - tol), "upper": m}, "tol_bisect": tol}


def cmd_pure(args, inputs):
    q, X = _q(args, inputs), _x(args, inputs)
    return domain.is_pure(q, X, args.mmax, _positive("tol", args.tol)).to_json()


def cmd_berezin(args, inputs):
    q, X = _q(args, inputs), _x(args, inputs)
    K = berezin.build_kernel(q, X, _caps(args.caps, q.k), _positive("eps-psd", args.eps_psd))
    out = {"caps": list(K.caps), "defect_rank": K.defect_rank, "rows": int(K.matrix.shape[0]),
           "isometry_residual": berezin.verify_isometry(K),
           "intertwining_residual": berezin.verify_intertwining(K),
           "tail_bound": K.tail_bound, "intertwining_bound": berezin.intertwining_bound(K)}
    if args.expr is not None:
        g = berezin.expression_from_json(inputs.load("expr", args.expr), q.n_vec)
        closed = berezin.berezin_transform(q, X, g)
        out["transform"] = {"value": domain.matrix_to_json(closed),
                            "kernel_discrepancy": fock.operator_norm(berezin.kernel_transform(K, g) - closed)}
    return out


def cmd_homnorm(args, inputs):
    F = _series(args, inputs)
    p = _ints(args.p)
    if len(p) != F.k or any(v < 0 for v in p):
        raise ValidationError(f"--p needs {F.k} nonnegative integers")
    return {"p": p, "homogeneous_norm": series.homogeneous_norm(F, p), "exact": True, "residual": 0.0}


def cmd_modelnorm(args, inputs):
    F = _series(args, inputs)
    r = _radius(args.r, F.k)
    br = series.model_norm(F, r, _caps(args.caps, F.k))
    return {"r": r, "bracket": br.to_json(), "truncated_series": F.truncated}


def cmd_eval(args, inputs):
    F, X = _series(args, inputs), _x(args, inputs)
    return series.evaluate(F, X, _positive("tail-tol", args.tail_tol)).to_json()


def cmd_abel(args, inputs):
    F = _series(args, inputs)
    return series.abel_bounded_test(F, _radius(args.r, F.k), args.pmax, args.window).to_json()


def cmd_radius(args, inputs):
    F = _series(args, inputs)
    return series.polydomain_radius(F, args.pmax, args.window).to_json()


def cmd_cauchy(args, inputs):
    F = _series(args, inputs)
    return series.cauchy_check(F, _radius(args.r, F.k), _caps(args.caps, F.k))


def cmd_liouville(args, inputs):
    F = _series(args, inputs)
    m = _ints(args.m)
    if len(m) == 1:
        m = m * F.k
    return series.liouville_degree_bound(F, m, args.C, _floats(args.r_grid))


def cmd_omega(args, inputs):
    F = _series(args, inputs)
    r = _radius(args.r, F.k)
    out = series.domain_membership_omega(F, r, args.pmax).to_json()
    if args.s is not None:
        out["log_convex_mix"] = series.log_convex_mix(F, r, _radius(args.s, F.k), args.t, args.pmax)
    return out


def cmd_schwarz(args, inputs):
    F, X = _series(args, inputs), _x(args, inputs)
    return series.schwarz_check(F, X, _caps(args.caps, F.k), _positive("tail-tol", args.tail_tol))


def _pair(args, inputs):
    q = _q(args, inputs, required=False)
    F = series.series_from_json(inputs.load("f", args.f), q)
    G = series.series_from_json(inputs.load("g", args.g), q)
    return F, G


def cmd_dr(args, inputs):
    F, G = _pair(args, inputs)
    return {"r": args.r, "bracket": analysis.d_r(F, G, args.r, _caps(args.caps, F.k)).to_json()}


def cmd_metric(args, inputs):
    F, G = _pair(args, inputs)
    return analysis.rho_metric(F, G, analysis.MetricConfig(args.terms), _caps(args.caps, F.k)).to_json()


def cmd_weierstrass(args, inputs):
    seq = _sequence(args, inputs)
    return analysis.weierstrass_limit(seq, _floats(args.r_grid), _positive("tol", args.tol), args.window).to_json()


def cmd_montel(args, inputs):
    seq = _sequence(args, inputs)
    return analysis.montel_extract(seq, args.window, _floats(args.r_grid), _positive("tol", args.tol),
                                   args.ceiling).to_json()


def cmd_vitali(args, inputs):
    seq = _sequence(args, inputs)
    return analysis.vitali_check(seq, args.gamma, _floats(args.r_grid), _positive("tol", args.tol),
                                 args.ceiling).to_json()


def cmd_maxprobe(args, inputs):
    F = _series(args, inputs)
    if args.samples < 0:
        raise ValidationError("--samples must be >= 0")
    return analysis.max_principle_probe(F, args.r, _caps(args.caps, F.k), args.samples, args.seed,
                                        tail_tol=_positive("tail-tol", args.tail_tol))


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ncpolydom", description="Numerical toolkit for noncommutative power series over operator polydomains.")
    parser.add_argument("--version", action="version", version=f"ncpolydom {__version__}")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_, *flags):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        p.add_argument("--out", default=argparse.SUPPRESS, help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        for flag in flags:
            flag(p)
        return p

    def q(req=True):
        return lambda p: p.add_argument("--q", required=req, help="polynomial tuple JSON (inline or path)")

    def x(p):
        p.add_argument("--x", required=True, help="operator tuple JSON")

    def ser(p):
        p.add_argument("--series", required=True, help="series JSON")

    def caps(p):
        p.add_argument("--caps", help="truncation caps, one value or one per factor")

    def rad(default=None):
        return lambda p: p.add_argument("--r", required=default is None, default=default,
                                        help="radius, scalar or comma-separated polyradius")

    def eps(p):
        p.add_argument("--eps-psd", type=float, default=None)

    def tail(p):
        p.add_argument("--tail-tol", type=float, default=1e-8)

    def pmax(default=60):
        return lambda p: p.add_argument("--pmax", type=int, default=default)

    def window(p):
        p.add_argument("--window", type=int, default=None)

    def grid(default):
        return lambda p: p.add_argument("--r-grid", default=default)

    def seq(p):
        p.add_argument("--seq", required=True, help="array of series JSON, or {'q':..., 'sequence': [...]}")

    def tol(default):
        return lambda p: p.add_argument("--tol", type=float, default=default)

    def pair(p):
        p.add_argument("--f", required=True)
        p.add_argument("--g", required=True)

    add("bcoeffs", cmd_bcoeffs, "factorization coefficients b", q(),
        lambda p: p.add_argument("--max", type=int, required=True))
    add("model", cmd_model, "truncated universal model", q(), caps,
        lambda p: p.add_argument("--dump", action="store_true", help="include sparse operators"))
    add("membership", cmd_membership, "polydomain membership", q(), x, eps,
        lambda p: p.add_argument("--mode", choices=("open", "closed"), default="open"))
    add("minkowski", cmd_minkowski, "Minkowski functional", q(), x,
        lambda p: p.add_argument("--tol-bisect", type=float, default=1e-12))
    add("pure", cmd_pure, "purity test", q(), x, tol(1e-12),
        lambda p: p.add_argument("--mmax", type=int, default=200))
    add("berezin", cmd_berezin, "Berezin kernel checks", q(), x, caps, eps,
        lambda p: p.add_argument("--expr", help="expression [{coeff, alpha, beta}] to transform"))
    add("homnorm", cmd_homnorm, "homogeneous norm", q(False), ser,
        lambda p: p.add_argument("--p", required=True, help="degree profile, comma-separated"))
    add("modelnorm", cmd_modelnorm, "bracket for ||F(rW)||", q(False), ser, rad(), caps)
    add("eval", cmd_eval, "evaluate F(X)", q(False), ser, x, tail)
    add("abel", cmd_abel, "Abel boundedness test", q(False), ser, rad(), pmax(), window)
    add("radius", cmd_radius, "Hadamard radius estimate", q(False), ser, pmax(), window)
    add("cauchy", cmd_cauchy, "Cauchy inequalities", q(False), ser, rad(), caps)
    add("liouville", cmd_liouville, "Liouville degree bound", q(False), ser, grid("1,10,100,1000"),
        lambda p: p.add_argument("--m", required=True, help="degree box, comma-separated"),
        lambda p: p.add_argument("--C", type=float, required=True))
    add("omega", cmd_omega, "bounded-polyradius membership", q(False), ser, rad(), pmax(),
        lambda p: p.add_argument("--s", help="second polyradius for the log-convex mix"),
        lambda p: p.add_argument("--t", type=float, default=0.5))
    add("schwarz", cmd_schwarz, "Schwarz lemma check", q(False), ser, x, caps, tail)
    add("dr", cmd_dr, "d_r distance bracket", q(False), pair, caps,
        lambda p: p.add_argument("--r", type=float, required=True))
    add("metric", cmd_metric, "rho metric", q(False), pair, caps,
        lambda p: p.add_argument("--terms", type=int, default=20))
    add("weierstrass", cmd_weierstrass, "limit of a sequence", q(False), seq, grid("0.5,0.9"), tol(1e-8),
        lambda p: p.add_argument("--window", type=int, default=None, help="coefficient window (total degree)"))
    add("montel", cmd_montel, "convergent subsequence", q(False), seq, grid("0.5,0.9"), tol(1e-3),
        lambda p: p.add_argument("--window", type=int, required=True, help="coefficient window (total degree)"),
        lambda p: p.add_argument("--ceiling", type=float, default=1e6))
    add("vitali", cmd_vitali, "Vitali scenario", q(False), seq, tol(1e-8),
        grid(",".join(f"{i / 10:g}" for i in range(1, 10))),
        lambda p: p.add_argument("--gamma", type=float, default=0.5),
        lambda p: p.add_argument("--ceiling", type=float, default=1e6))
    add("maxprobe", cmd_maxprobe, "maximum principle probe", q(False), ser, caps, tail,
        lambda p: p.add_argument("--r", type=float, required=True),
        lambda p: p.add_argument("--samples", type=int, default=200))
    return parser


def _config(args) -> dict:
    skip = {"fn", "command", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _threads():
    raw = os.environ.get("NCPOLYDOM_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"NCPOLYDOM_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError("NCPOLYDOM_THREADS must be >= 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run(argv: Sequence[str] | None = None) -> tuple[int, dict]:
    """Parse ``argv``, run the command and return ``(exit_status, report)``."""
    status, report, _ = _run(argv)
    return status, report


def _run(argv):
    inputs = _Inputs()
    args = None
    try:
        args = build_parser().parse_args(argv)
        with _threads():
            results = args.fn(args, inputs)
        status, body = 0, {"results": results}
    except ValidationError as exc:
        status, body = 1, {"error": {"kind": "validation", "message": str(exc)}}
    except CertificationError as exc:
        status, body = 2, {"error": {"kind": "certification", "message": str(exc)}}
    report = {
        "command": getattr(args, "command", None),
        "status": status,
        "inputs": inputs.seen,
        "config": _config(args) if args is not None else {},
        **body,
        "provenance": {"library": "ncpolydom", "version": __version__,
                       "seed": getattr(args, "seed", 0) if args is not None else 0},
    }
    return status, report, getattr(args, "out", None)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        status, report, out = _run(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    text = dumps(report)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    if status:
        sys.stderr.write(f"ncpolydom: {report['error']['message']}\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
