"""Command-line entry point: ``hedge``, ``decompose``, ``audit`` and ``figure1``.

Exit codes: 0 on success, 2 on invalid input, 3 when a checked contract fails.
Every float is written with 17 significant digits so that outputs are
byte-identical across runs.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable, Sequence

import numpy as np

from . import crr, identities, inequalities, malliavin
from .chaos import ChaosExpansion, walsh_decompose, walsh_reconstruct
from .errors import BernoulliError, DegenerateGradient, NonPositiveInput
from .space import (
    ProcessRV,
    RandomVariable,
    expectation,
    integral,
    load_space,
    variance,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONTRACT = 3
DEFAULT_TOLERANCE = 1e-10
# decompose drops coefficients below this fraction of max(1, ||F||_inf)
PRUNE_RTOL = 1e-12
SUITES = ("clark", "adjoint", "isometry", "semigroup", "covariance", "lsi", "deviation", "sandwich")
SEMIGROUP_TIMES = (0.1, 1.0, 10.0)
KERNEL_MAX_N = 10


class InputError(Exception):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats rendered by :func:`fmt`; keys keep insertion order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if math.isfinite(x) else json.dumps(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _read_rv(space, path: str) -> RandomVariable:
    values = _read_json(path)
    if not isinstance(values, list):
        raise InputError(f"{path} must hold a JSON array of {space.size} numbers")
    if len(values) != space.size:
        raise InputError(f"{path} holds {len(values)} values, the space needs {space.size}")
    try:
        return RandomVariable(space, [float(v) for v in values])
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- hedge


def _prefix(omega: int, n: int) -> str:
    return "".join("+" if (omega >> k) & 1 else "-" for k in range(n + 1))


def cmd_hedge(args) -> int:
    try:
        model = crr.load_model(args.model)
    except OSError as exc:
        raise InputError(f"cannot read {args.model}: {exc}") from exc
    if args.payoff in ("call", "put"):
        if args.strike is None:
            raise InputError("--strike is required for call and put payoffs")
        F = crr.payoff_builder(model, args.payoff, args.strike)
    else:
        F = _read_rv(model.space, args.payoff)
    strategy = crr.hedge(model, F)
    rows = [(-1, "", model.S0, float(strategy.value[0].values[0]), strategy.eta_init, strategy.zeta_init)]
    for n in range(model.N + 1):
        S = crr.stock_price(model, n).values
        V = strategy.V(n).values
        eta, zeta = strategy.eta.table[n], strategy.zeta.table[n]
        for omega in range(1 << (n + 1)):
            rows.append((n, _prefix(omega, n), float(S[omega]), float(V[omega]), float(eta[omega]), float(zeta[omega])))
    if args.out:
        _write_text(args.out, _csv_text(["n", "prefix", "S", "V", "eta", "zeta"], rows))
    rep = crr.replication_error(model, strategy, F)
    sf = crr.self_financing_error(model, strategy)
    summary = {
        "price": crr.price_claim(model, F),
        "replication_error": rep,
        "self_financing_error": sf,
    }
    _write_text(args.summary, dumps(summary) + "\n")
    tol = args.tolerance * max(1.0, F.sup_norm())
    return EXIT_OK if rep <= tol and sf <= tol else EXIT_CONTRACT


# ------------------------------------------------------------ decompose


def cmd_decompose(args) -> int:
    space = load_space(args.space)
    if args.reconstruct:
        try:
            e = ChaosExpansion.from_json(space, _read_json(args.rv))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        values = walsh_reconstruct(e).values
        _write_text(args.out, dumps([float(v) for v in values]) + "\n")
        return EXIT_OK
    F = _read_rv(space, args.rv)
    atol = PRUNE_RTOL * max(1.0, F.sup_norm())
    _write_text(args.out, dumps(walsh_decompose(F).to_json(atol)) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- audit


def _record(name: str, lhs, rhs, residual, tolerance, error: str | None = None) -> dict:
    rec = {
        "name": name,
        "lhs": lhs,
        "rhs": rhs,
        "residual": residual,
        "tolerance": tolerance,
        "pass": error is None and abs(residual) <= tolerance,
    }
    if error is not None:
        rec["error"] = error
    return rec


def _equal(name: str, lhs: float, rhs: float, tol: float) -> dict:
    return _record(name, lhs, rhs, lhs - rhs, tol * max(1.0, abs(lhs), abs(rhs)))


def _pointwise(name: str, a: RandomVariable, b: RandomVariable, tol: float) -> dict:
    diff = np.abs(a.values - b.values)
    i = int(np.argmax(diff))
    scale = max(1.0, a.sup_norm(), b.sup_norm())
    return _record(name, float(a.values[i]), float(b.values[i]), float(diff[i]), tol * scale)


def _at_most(name: str, lhs: float, rhs: float, tol: float) -> dict:
    """``lhs <= rhs``: the residual is the violation, zero when it holds."""
    return _record(name, lhs, rhs, max(0.0, lhs - rhs), tol * max(1.0, abs(lhs), abs(rhs)))


def _suite_clark(F, G, tol):
    c = identities.clark(F)
    out = [_pointwise("clark.reconstruction", F, c.reconstruct(), tol)]
    energy = expectation(RandomVariable(F.space, np.sum(c.integrand.table**2, axis=0)))
    out.append(_equal("clark.energy", expectation(F * F), c.mean**2 + energy, tol))
    var, grad = identities.poincare_sides(F)
    out.append(_at_most("clark.poincare", var, grad, tol))
    return out


def _constant_process(G: RandomVariable) -> ProcessRV:
    return ProcessRV(G.space, [G] * G.space.n_bits)


def _suite_adjoint(F, G, tol):
    u = _constant_process(G)
    grad = malliavin.gradient_all(F).table
    lhs = expectation(RandomVariable(F.space, np.sum(grad * u.table, axis=0)))
    d = malliavin.divergence(u)
    out = [_equal("adjoint.duality", lhs, expectation(F * d), tol)]
    out.append(_pointwise("adjoint.pointwise_divergence", d, malliavin.divergence_pointwise(u), tol))
    return out


def _suite_isometry(F, G, tol):
    u = identities.clark(F).integrand
    J = integral(u)
    energy = expectation(RandomVariable(F.space, np.sum(u.table**2, axis=0)))
    out = [_equal("isometry.ito", expectation(J * J), energy, tol)]
    lhs, rhs = malliavin.skorohod_isometry_sides(_constant_process(G))
    out.append(_equal("isometry.skorohod", lhs, rhs, tol))
    return out


def _suite_semigroup(F, G, tol):
    out = []
    if F.space.N <= KERNEL_MAX_N:
        for t in SEMIGROUP_TIMES:
            out.append(
                _pointwise(f"semigroup.kernel_t={fmt(t)}", malliavin.semigroup(F, t), malliavin.semigroup_kernel(F, t), tol)
            )
    grad = malliavin.gradient_all(F).as_process()
    lhs, rhs = malliavin.semigroup_process_contraction_check(grad, 1.0)
    out.append(_at_most("semigroup.contraction", lhs, rhs, tol))
    out.append(_pointwise("semigroup.ou_is_div_grad", malliavin.ou_operator(F), malliavin.divergence(grad), tol))
    return out


def _suite_covariance(F, G, tol):
    direct = identities.covariance_direct(F, G)
    out = [
        _equal("covariance.clark", direct, identities.covariance_clark(F, G), tol),
        _equal("covariance.semigroup", direct, identities.covariance_semigroup(F, G), tol),
    ]
    for n in range(4):
        out.append(_equal(f"covariance.iterated_n={n}", direct, identities.covariance_iterated(F, G, n), tol))
    return out


def _suite_lsi(F, G, tol):
    try:
        rep = inequalities.lsi_report(F)
    except NonPositiveInput as exc:
        return [_record("lsi", None, None, None, tol, error=f"NonPositiveInput: {exc}")]
    e = rep.entropy
    return [
        _at_most("lsi.entropy_nonnegative", 0.0, e, tol),
        _at_most("lsi.modified", e, rep.rhs_modified, tol),
        _at_most("lsi.l1", e, rep.rhs_l1, tol),
        _at_most("lsi.optimal", e, rep.rhs_optimal, tol),
        _at_most("lsi.sharp", e, rep.rhs_sharp, tol),
        _at_most("lsi.sharp_below_optimal", rep.rhs_sharp, rep.rhs_optimal, tol),
        _at_most("lsi.sharp_below_modified", rep.rhs_sharp, rep.rhs_modified, tol),
    ]


def _suite_deviation(F, G, tol):
    top = float(np.max(F.values)) - expectation(F)
    xs = np.linspace(0.0, max(top, 0.0), 20)
    out = []
    for kind in ("poisson", "gaussian"):
        try:
            rep = inequalities.deviation_report(F, xs, kind)
        except DegenerateGradient as exc:
            out.append(_record(f"deviation.{kind}", None, None, None, tol, error=f"DegenerateGradient: {exc}"))
            continue
        worst = max(range(len(xs)), key=lambda i: rep.exact[i] - rep.bound[i])
        out.append(_at_most(f"deviation.{kind}", rep.exact[worst], rep.bound[worst], tol))
    return out


def _suite_sandwich(F, G, tol):
    var = variance(F)
    out = []
    for n in (1, 2, 3):
        lower, upper = identities.variance_sandwich(F, n)
        out.append(_at_most(f"sandwich.lower_n={n}", lower, var, tol))
        out.append(_at_most(f"sandwich.upper_n={n}", var, upper, tol))
    return out


SUITE_RUNNERS: dict[str, Callable] = {
    "clark": _suite_clark,
    "adjoint": _suite_adjoint,
    "isometry": _suite_isometry,
    "semigroup": _suite_semigroup,
    "covariance": _suite_covariance,
    "lsi": _suite_lsi,
    "deviation": _suite_deviation,
    "sandwich": _suite_sandwich,
}


def run_audit(F: RandomVariable, G: RandomVariable, suites: Sequence[str], tol: float) -> dict:
    records = []
    for name in suites:
        records.extend(SUITE_RUNNERS[name](F, G, tol))
    passed = sum(1 for r in records if r["pass"])
    return {"records": records, "summary": {"total": len(records), "passed": passed, "failed": len(records) - passed}}


def cmd_audit(args) -> int:
    space = load_space(args.space)
    rvs = args.rv or []
    if not 1 <= len(rvs) <= 2:
        raise InputError("audit takes one or two --rv files")
    F = _read_rv(space, rvs[0])
    G = _read_rv(space, rvs[1]) if len(rvs) == 2 else F
    suites = list(dict.fromkeys(args.suite)) if args.suite else list(SUITES)
    report = run_audit(F, G, suites, args.tolerance)
    _write_text(args.out, dumps(report) + "\n")
    return EXIT_OK if report["summary"]["failed"] == 0 else EXIT_CONTRACT


# -------------------------------------------------------------- figure1


FIGURE1_COLUMNS = ("p", "entropy", "rhs_modified", "rhs_l1", "rhs_optimal", "rhs_sharp")


def cmd_figure1(args) -> int:
    rows = inequalities.figure1_rows()
    table = [
        (p, r.entropy, r.rhs_modified, r.rhs_l1, r.rhs_optimal, r.rhs_sharp) for p, r in rows
    ]
    _write_text(args.out, _csv_text(FIGURE1_COLUMNS, table))
    ok = all(r.ordering_holds() for _, r in rows)
    return EXIT_OK if ok else EXIT_CONTRACT


# ------------------------------------------------------------ deviation


DEVIATION_POINTS = 20


def cmd_deviation(args) -> int:
    space = load_space(args.space)
    F = _read_rv(space, args.rv)
    top = max(float(np.max(F.values)) - expectation(F), 0.0)
    xs = np.linspace(0.0, top, args.points)
    try:
        rep = inequalities.deviation_report(F, xs, args.kind)
    except DegenerateGradient as exc:
        raise InputError(str(exc)) from exc
    _write_text(args.out, _csv_text(("x", "bound", "exact"), zip(rep.x, rep.bound, rep.exact)))
    return EXIT_OK if rep.dominates() else EXIT_CONTRACT


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discrete-malliavin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    h = sub.add_parser("hedge", help="replicate a claim in a binomial market")
    h.add_argument("--model", required=True, help="model JSON {N, r, a, b, S0, A0}")
    h.add_argument("--payoff", required=True, help="'call', 'put', or a JSON file of 2^(N+1) values")
    h.add_argument("--strike", type=float, help="strike for call and put payoffs")
    h.add_argument("--out", help="hedge CSV path")
    h.add_argument("--summary", help="summary JSON path (default: stdout)")
    h.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    h.set_defaults(func=cmd_hedge)

    d = sub.add_parser("decompose", help="Walsh/chaos coefficients of a random variable")
    d.add_argument("--space", required=True, help="space JSON {N, p}")
    d.add_argument("--rv", required=True, help="JSON array of values, or a chaos JSON with --reconstruct")
    d.add_argument("--reconstruct", action="store_true", help="read coefficients and print values")
    d.add_argument("--out", help="output path (default: stdout)")
    d.set_defaults(func=cmd_decompose)

    a = sub.add_parser("audit", help="check identities and inequalities by enumeration")
    a.add_argument("--space", required=True)
    a.add_argument("--rv", action="append", help="random variable file; give twice for a pair (F, G)")
    a.add_argument("--suite", action="append", choices=SUITES, help="suite to run (repeatable, default all)")
    a.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    a.add_argument("--out", help="report path (default: stdout)")
    a.set_defaults(func=cmd_audit)

    f = sub.add_parser("figure1", help="entropy and its upper bounds for a two-point function")
    f.add_argument("--out", help="CSV path (default: stdout)")
    f.set_defaults(func=cmd_figure1)

    v = sub.add_parser("deviation", help="tail bound against the exact tail on an x-grid")
    v.add_argument("--space", required=True)
    v.add_argument("--rv", required=True)
    v.add_argument("--kind", choices=("poisson", "gaussian"), default="poisson")
    v.add_argument("--points", type=int, default=DEVIATION_POINTS)
    v.add_argument("--out", help="CSV path (default: stdout)")
    v.set_defaults(func=cmd_deviation)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, BernoulliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
