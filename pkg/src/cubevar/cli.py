"""Command-line front end: ``cubevar <command> [flags]``.

Every command writes one record per line, JSON (default) or CSV.  Floats are
printed with 17 significant digits so runs can be compared byte for byte;
wall-clock time is only recorded with ``--timing``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any

from .errors import DomainError, InvariantError, PreconditionError, ResourceError
from .exact import exact_cov_tilde, exact_cov_W
from .limits import (
    Degenerate,
    IntegralConstant,
    ModK,
    RationalConstant,
    RhoFunction,
    cum_cov,
    gamma,
    rho_value,
    sigma_matrix,
)
from .series import CertifiedValue, TruncationBudget, f_L, kappa_sq
from .simulate import McConfig, mc_cov

__all__ = ["OutputRecord", "build_parser", "main", "to_json", "from_json", "to_csv_rows"]

CSV_HEADER = ["command", "inputs", "value", "error_bound", "metadata"]


@dataclass
class OutputRecord:
    command: str
    inputs: dict[str, Any]
    value: float
    error_bound: float | None
    metadata: dict[str, Any] = field(default_factory=dict)


def _fmt(x: float) -> str:
    text = "%.17g" % x
    return text if any(c in text for c in ".en") else text + ".0"


def _encode(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return _fmt(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    return json.dumps(obj)


def to_json(rec: OutputRecord) -> str:
    return _encode(asdict(rec))


def from_json(line: str) -> OutputRecord:
    return OutputRecord(**json.loads(line))


def to_csv_rows(records: list[OutputRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        err = "" if r.error_bound is None else _encode(float(r.error_bound))
        writer.writerow([r.command, _encode(r.inputs), _encode(float(r.value)), err, _encode(r.metadata)])
    return buf.getvalue()


def _budget(args) -> TruncationBudget:
    return TruncationBudget(tol=args.tol)


def _regime(args):
    name = args.regime
    if name == "degenerate":
        return Degenerate()
    if name == "rational":
        return RationalConstant(args.p, args.q)
    if name == "integral":
        return IntegralConstant(_need(args.L, "--L"))
    if name == "mod-k":
        return ModK(_need(args.L, "--L"), args.k)
    raise PreconditionError(f"unknown regime {name!r}")


def _need(value, flag):
    if value is None:
        raise PreconditionError(f"{flag} is required for this regime")
    return value


def _regime_inputs(args) -> dict:
    out = {"regime": args.regime}
    if args.regime == "rational":
        out.update(p=args.p, q=args.q)
    elif args.regime in ("integral", "mod-k"):
        out["L"] = args.L
    if args.regime == "mod-k":
        out["k"] = args.k
    return out


def _certified(command: str, inputs: dict, cv: CertifiedValue, **meta) -> OutputRecord:
    md = {"cutoff": cv.cutoff_used, "heuristic_error": cv.heuristic_error}
    md.update(meta)
    return OutputRecord(command, inputs, cv.value, cv.error_bound, md)


# ---------------------------------------------------------------------------
# commands


def cmd_kappa(args) -> list[OutputRecord]:
    budget = _budget(args)
    direct = kappa_sq(budget)
    via_f = f_L(1.0, 0.0, budget).scaled(0.75)
    inputs = {"tol": args.tol}
    return [
        _certified("kappa", inputs, direct, method="direct_series"),
        _certified("kappa", inputs, via_f, method="three_quarters_f1_at_0"),
    ]


def cmd_f(args) -> list[OutputRecord]:
    cv = f_L(args.L, args.x, _budget(args))
    return [_certified("f", {"L": args.L, "x": args.x, "tol": args.tol}, cv)]


def cmd_rho(args) -> list[OutputRecord]:
    rf = RhoFunction(_regime(args), _budget(args))
    inputs = {**_regime_inputs(args), "t": args.t, "tol": args.tol}
    return [_certified("rho", inputs, rho_value(rf, args.t))]


def cmd_gamma(args) -> list[OutputRecord]:
    rf = RhoFunction(_regime(args), _budget(args))
    inputs = {**_regime_inputs(args), "t": args.t, "tol": args.tol}
    return [_certified("gamma", inputs, gamma(rf, args.t))]


def cmd_sigma(args) -> list[OutputRecord]:
    budget = _budget(args)
    rf = RhoFunction(_regime(args), budget)
    rho = rho_value(rf, args.t)
    k2 = kappa_sq(budget)
    sig = sigma_matrix(rho.value, k2.value)
    inputs = {**_regime_inputs(args), "t": args.t, "tol": args.tol}
    r = rho.value / k2.value
    # first-order bound on r = rho / kappa^2 from the two certificates
    err = (rho.error_bound + abs(r) * k2.error_bound) / (k2.value - k2.error_bound)
    meta = {"rho": rho.value, "kappa_sq": k2.value, "sigma": sig.tolist(), "cutoff": rho.cutoff_used}
    return [OutputRecord("sigma", inputs, r, err, meta)]


def cmd_exact(args) -> list[OutputRecord]:
    fn = exact_cov_tilde if args.tilde else exact_cov_W
    res = fn(args.a, args.b, args.s, args.t, args.band, threads=args.threads)
    inputs = {"a": args.a, "b": args.b, "s": args.s, "t": args.t, "band": args.band, "tilde": args.tilde}
    mode = "full" if args.band is None else "banded"
    return [OutputRecord("exact", inputs, res.value, res.certified_remainder, {"mode": mode})]


def cmd_mc(args) -> list[OutputRecord]:
    if args.seed is None:
        raise PreconditionError("mc requires an explicit --seed")
    cfg = McConfig(args.paths, args.seed, args.strategy, args.threads)
    est = mc_cov(args.a, args.b, args.s, args.t, cfg, tilde=args.tilde)
    inputs = {"a": args.a, "b": args.b, "s": args.s, "t": args.t, "tilde": args.tilde}
    meta = {"std_error": est.std_error, "paths": est.paths_used, "seed": args.seed, "strategy": args.strategy}
    return [OutputRecord("mc", inputs, est.mean, None, meta)]


def _gamma_record(label: str, regime, t: float, budget: TruncationBudget, **inputs) -> OutputRecord:
    cv = gamma(RhoFunction(regime, budget), t)
    return _certified("examples", {"example": label, "t": t, **inputs}, cv, quantity="gamma")


def cmd_examples(args) -> list[OutputRecord]:
    budget = _budget(args)
    which = args.which
    out: list[OutputRecord] = []
    if which in ("4.1", "all"):
        for L in (2, 5):
            out.append(_gamma_record("4.1", RationalConstant(L, 1), 1.0, budget, L=L))
    if which in ("4.2", "all"):
        out.append(_gamma_record("4.2", ModK(1, 1), 0.8, budget, L=1, k=1))
    if which in ("4.3", "all"):
        for L in (1, 2):
            out.append(_gamma_record("4.3", IntegralConstant(L), 1.0, budget, L=L))
    if which in ("4.4", "all"):
        t, k = args.t, args.k
        odd = cum_cov(RhoFunction(ModK(1, 2 * k), budget), t)
        even = cum_cov(RhoFunction(ModK(1, k), budget), t)
        base = {"example": "4.4", "t": t, "k": k}
        out.append(_certified("examples", {**base, "subsequence": "odd"}, odd, quantity="cum_cov"))
        out.append(_certified("examples", {**base, "subsequence": "even"}, even, quantity="cum_cov"))
        diff = CertifiedValue(
            odd.value - even.value,
            odd.error_bound + even.error_bound,
            max(odd.cutoff_used, even.cutoff_used),
            odd.heuristic_error + even.heuristic_error,
        )
        out.append(_certified("examples", {**base, "subsequence": "odd-even"}, diff, quantity="difference"))
    if which in ("4.5", "all"):
        n = args.n
        for label, a, b in (("squares", n * n, (n + 1) ** 2), ("two-three", 2 * n, 3 * n + 1)):
            for t in (0.5, 1.0):
                res = exact_cov_tilde(a, b, t, t, threads=args.threads)
                out.append(OutputRecord(
                    "examples",
                    {"example": "4.5", "sequence": label, "n": n, "a": a, "b": b, "t": t},
                    res.value, res.certified_remainder, {"quantity": "exact_cov_tilde"},
                ))
    return out


# ---------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol", type=float, default=1e-8, help="absolute truncation / quadrature tolerance")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--paths", type=int, default=10000)
    p.add_argument("--band", type=int, default=None, help="band half-width M (exact command)")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="add runtime_s to metadata")
    return p


def _add_regime(p: argparse.ArgumentParser) -> None:
    p.add_argument("--regime", choices=("degenerate", "rational", "integral", "mod-k"), required=True)
    p.add_argument("--L", type=float)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--t", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="cubevar", description="Cubic variation covariances of fBm with H = 1/6.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("kappa", parents=[common], help="kappa^2 two ways").set_defaults(func=cmd_kappa)

    p = sub.add_parser("f", parents=[common], help="f_L(x)")
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.set_defaults(func=cmd_f)

    for name, func in (("rho", cmd_rho), ("gamma", cmd_gamma), ("sigma", cmd_sigma)):
        p = sub.add_parser(name, parents=[common])
        _add_regime(p)
        p.set_defaults(func=func)

    for name, func in (("exact", cmd_exact), ("mc", cmd_mc)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--a", type=int, required=True)
        p.add_argument("--b", type=int, required=True)
        p.add_argument("--s", type=float, default=1.0)
        p.add_argument("--t", type=float, default=1.0)
        p.add_argument("--tilde", action="store_true", help="third-chaos part only")
        if name == "mc":
            p.add_argument("--strategy", choices=("lcm", "union"), default="lcm")
        p.set_defaults(func=func)

    p = sub.add_parser("examples", parents=[common], help="reproduce the worked examples")
    p.add_argument("--which", choices=("4.1", "4.2", "4.3", "4.4", "4.5", "all"), default="all")
    p.add_argument("--t", type=float, default=1.0, help="time for 4.4")
    p.add_argument("--k", type=int, default=1, help="k for 4.4")
    p.add_argument("--n", type=int, default=32, help="n for 4.5")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        records = args.func(args)
    except (PreconditionError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4
    if args.timing:
        elapsed = time.perf_counter() - start
        for r in records:
            r.metadata["runtime_s"] = elapsed
    if args.format == "csv":
        sys.stdout.write(to_csv_rows(records))
    else:
        for r in records:
            sys.stdout.write(to_json(r) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
