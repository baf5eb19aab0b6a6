"""Command-line front end.

Exit status: 0 on success, 1 when a mathematical check fails (the report
says which), 2 on unreadable or invalid input.

``--format structured`` emits one JSON object with sorted keys and a
``"format": "eqloc/1"`` tag.  Every class and rational is a string in the
text syntax accepted by the parsers, so the output contains no floats.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from typing import Any, Sequence

from .charring import (
    DEFAULT_DEGREE,
    NotDivisible,
    ParseError,
    format_laurent,
    format_localized,
)
from .fan import PIVOT_POLICIES, Cone, Fan, FanError, NotCartier, TDivisor, format_fan, load_fan, resolve
from .localize import (
    NonIntegralResult,
    NotPiecewiseExponential,
    SingularPairing,
    adams_pullback_check,
    brion_oracle,
    dual_basis,
    euler_char,
    gkm_check,
    integrate,
    parse_cone_ref,
    parse_tuple,
    pexp_check,
)
from .multiplicity import DegenerateFixedPoint, em_chow, em_orbit_closure
from .rr import GRR_DEGREE, RRCheck, RRReport, verify_adams_rr_point, verify_grr_pushforward, verify_todd_identity
from .spherical import (
    HalfWeightNotIntegral,
    NotMember,
    SurfaceKind,
    abbv_sum,
    check_relations,
    check_skeleton,
    membership,
    parse_labelled_tuple,
    parse_skeleton,
    surface_data,
)

FORMAT_TAG = "eqloc/1"
MATH_ERRORS = (NotDivisible, NonIntegralResult, NotMember, SingularPairing, NotPiecewiseExponential)
INPUT_ERRORS = (OSError, ParseError, FanError, NotCartier, HalfWeightNotIntegral, DegenerateFixedPoint, KeyError, ValueError)


class Failure(Exception):
    """A check ran and did not pass; carries the report to print."""

    def __init__(self, report: dict, lines: list[str]):
        super().__init__(report.get("reason", "check failed"))
        self.report = report
        self.lines = lines


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _cone_label(c: Cone | Sequence[int]) -> str:
    idx = c.index if isinstance(c, Cone) else c
    return "{" + ",".join(str(i) for i in idx) + "}"


def _divisor(fan: Fan, name: str) -> TDivisor:
    if name not in fan.divisors:
        known = ", ".join(sorted(fan.divisors)) or "none"
        raise KeyError(f"no divisor {name!r} in the fan file (known: {known})")
    return fan.divisors[name]


_CONE_TOKEN = re.compile(r"\{[^}]*\}|[^,\s]+")


def _cone_list(fan: Fan, text: str) -> list[Cone]:
    return [parse_cone_ref(fan, tok) for tok in _CONE_TOKEN.findall(text)]


def _rr_lines(rep: RRReport) -> tuple[list[dict], list[str]]:
    rows, lines = [], []
    for c in rep.checks:
        rows.append({"label": c.label, "ok": c.ok, "degree": c.degree, "first_difference": c.first_difference})
        tail = "" if c.ok else f"  first difference: {c.first_difference}"
        lines.append(f"  {rep.kind:5s} {c.label}: {'pass' if c.ok else 'FAIL'}{tail}")
    return rows, lines


# --------------------------------------------------------------------------
# subcommands: each returns (report, text lines) or raises Failure
# --------------------------------------------------------------------------


def cmd_emult(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    cones = [parse_cone_ref(fan, args.cone)] if args.cone is not None else fan.cones
    maxl = [_cone_label(c) for c in fan.maximal]
    rows, lines = [], [f"fixed points: {' '.join(maxl)}"]
    for tau in cones:
        name = "X" if not tau.index else f"V{_cone_label(tau)}"
        ks = em_orbit_closure(fan, tau, args.policy)
        row: dict[str, Any] = {"cone": list(tau.index), "id": fan.cone_id(tau), "name": name}
        row["em_K"] = [format_localized(x) for x in ks]
        lines.append(f"em^K({name})")
        lines += [f"  {p}: {s}" for p, s in zip(maxl, row["em_K"])]
        if not tau.index:
            row["em_A"] = [str(em_chow(x, args.degree)) for x in ks]
            lines.append(f"em^A({name})")
            lines += [f"  {p}: {s}" for p, s in zip(maxl, row["em_A"])]
        rows.append(row)
    return {"fixed_points": maxl, "rows": rows}, lines


def cmd_euler(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    D = _divisor(fan, args.divisor)
    chi = format_laurent(euler_char(fan, D))
    rep: dict[str, Any] = {"divisor": D.name, "euler_characteristic": chi}
    lines = [chi]
    if args.oracle:
        ref = format_laurent(brion_oracle(fan, D))
        agree = ref == chi
        rep["oracle"] = {"lattice_point_sum": ref, "agree": agree}
        lines += ["oracle (lattice points of the divisor polytope):", ref, f"agree: {'yes' if agree else 'NO'}"]
        if not agree:
            rep["reason"] = "euler characteristic differs from the lattice-point sum"
            raise Failure(rep, lines)
    return rep, lines


def cmd_integrate(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    f = parse_tuple(_read(args.tuple), fan)
    try:
        val = format_laurent(integrate(fan, f))
    except NonIntegralResult as err:
        s = format_localized(err.value)
        raise Failure(
            {"reason": "integral is not in R(T)", "localized_sum": s, "denominator": [list(w) for w in err.value.denominator]},
            [f"not integral: {s}"],
        ) from None
    return {"integral": val}, [val]


def _check_report(kind: str, res, describe) -> tuple[dict, list[str]]:
    viol = [describe(v) for v in res.violations]
    rep = {"check": kind, "ok": res.ok, "violations": viol}
    lines = [f"{kind}: {'pass' if res.ok else 'FAIL'}"] + [f"  {v}" for v in viol]
    if not res.ok:
        rep["reason"] = f"{kind} violated"
        raise Failure(rep, lines)
    return rep, lines


def cmd_gkm(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    f = parse_tuple(_read(args.tuple), fan)

    def describe(v):
        w, rem = v
        return (
            f"wall {_cone_label(w.cone)} between fixed points {w.left} and {w.right}: "
            f"not divisible by 1 - e^{{-chi}}, chi = {list(w.weight)}, remainder {format_laurent(rem)}"
        )

    return _check_report("gkm", gkm_check(fan, f), describe)


def cmd_pexp(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    f = parse_tuple(_read(args.tuple), fan)

    def describe(v):
        a, b, tau = v
        return f"fixed points {a} and {b} disagree on the face {_cone_label(tau)}"

    return _check_report("pexp", pexp_check(fan, f), describe)


def cmd_dual_basis(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    cones = _cone_list(fan, args.cones)
    db = dual_basis(fan, cones)
    labels = [_cone_label(c) for c in cones]
    maxl = [_cone_label(c) for c in fan.maximal]
    rep = {
        "basis": labels,
        "fixed_points": maxl,
        "duals": [[format_laurent(x) for x in d.entries] for d in db.duals],
        "image": [[format_laurent(x) for x in row] for row in db.image],
        "determinant": format_laurent(db.determinant),
        "determinant_up_to_sign": format_laurent(db.determinant_up_to_sign),
    }
    lines = []
    for i, lab in enumerate(labels):
        lines.append(f"dual of O_V{lab}:")
        lines += [f"  at {p}: {s}" for p, s in zip(maxl, rep["duals"][i])]
        terms = " + ".join(f"({s})[O_V{l}]" for s, l in zip(rep["image"][i], labels) if s != "0")
        lines.append(f"  image: {terms or '0'}")
    lines.append(f"determinant: {rep['determinant']}")
    lines.append(f"determinant (sign normalized): {rep['determinant_up_to_sign']}")
    return rep, lines


def cmd_rr(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    reports: list[RRReport] = []
    degree = args.degree if args.degree is not None else DEFAULT_DEGREE
    for c in fan.maximal:
        reports.append(verify_todd_identity(fan, c, degree))
    if args.adams is not None:
        for c in fan.maximal:
            reports.append(verify_adams_rr_point(fan, c, args.adams))
    if args.divisor is not None:
        D = _divisor(fan, args.divisor)
        reports.append(verify_grr_pushforward(fan, D, args.degree if args.degree is not None else GRR_DEGREE))
    return _rr_result(reports)


def _rr_result(reports: list[RRReport]) -> tuple[dict, list[str]]:
    rows, lines = [], []
    for r in reports:
        rr, ll = _rr_lines(r)
        rows += [dict(x, kind=r.kind) for x in rr]
        lines += ll
    ok = all(r.ok for r in reports)
    rep = {"ok": ok, "checks": rows}
    lines.append("all checks pass" if ok else "RR mismatch")
    if not ok:
        rep["reason"] = "Riemann-Roch mismatch"
        raise Failure(rep, lines)
    return rep, lines


def cmd_adams(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    js = [args.adams] if args.adams is not None else [1, 2, 3, 5]
    reports = [verify_adams_rr_point(fan, c, j) for j in js for c in fan.maximal]
    if args.tuple is not None:
        f = parse_tuple(_read(args.tuple), fan)
        for j in js:
            res = adams_pullback_check(fan, j, f)
            rep = RRReport("pullback")
            first = None if res.ok else _pullback_violation(res.violations[0])
            rep.checks.append(RRCheck(f"psi^{j} of the tuple", res.ok, first_difference=first))
            reports.append(rep)
    return _rr_result(reports)


def _pullback_violation(v) -> str:
    if v[0] == "integral":
        return f"integral not in R(T): {format_localized(v[1])}"
    a, b, tau = v
    return f"fixed points {a} and {b} disagree on the face {_cone_label(tau)}"


def cmd_spherical(args) -> tuple[dict, list[str]]:
    if (args.kind is None) == (args.skeleton is None):
        raise ValueError("give exactly one of --kind and --skeleton")
    text = _read(args.tuple)
    if args.kind is not None:
        kind = SurfaceKind.parse(args.kind)
        names = ["t"]
        f = parse_labelled_tuple(text, 1, names)
        res = check_relations(kind, f, subring=args.subring)
        pts = surface_data(kind).fixed_points
        rep: dict[str, Any] = {"kind": str(kind), "fixed_points": list(pts)}
    else:
        sk = parse_skeleton(_read(args.skeleton))
        names = None
        f = parse_labelled_tuple(text, sk.rank)
        res = check_skeleton(sk, f)
        rep = {"skeleton": {"rank": sk.rank, "points": sk.points, "curves": len(sk.curves), "surfaces": len(sk.surfaces)}}
    viol = [{"relation": r.name, "remainder": None if rem is None else format_laurent(rem, names)} for r, rem in res.violations]
    rep["relations_ok"] = res.ok
    rep["violations"] = viol
    lines = [f"relations: {'pass' if res.ok else 'FAIL'}"]
    lines += [f"  violated: {v['relation']}" + (f" (remainder {v['remainder']})" if v["remainder"] else "") for v in viol]
    failed = not res.ok
    if args.kind is not None:
        try:
            coeffs = [format_laurent(c, names) for c in membership(kind, f, subring=args.subring)]
            rep["membership"] = {"member": True, "coefficients": coeffs}
            lines.append("membership: coefficients " + ", ".join(coeffs))
        except NotMember as err:
            rep["membership"] = {"member": False, "stuck_at": err.pivot}
            lines.append(f"membership: not a member (stuck at {err.pivot or 'residual'})")
            failed = True
        if not failed:
            s = abbv_sum(kind, f)
            rep["abbv_sum"] = format_localized(s, names)
            lines.append(f"localization sum: {rep['abbv_sum']}")
    if failed:
        rep["reason"] = "tuple is not in the image"
        raise Failure(rep, lines)
    return rep, lines


def cmd_resolve(args) -> tuple[dict, list[str]]:
    fan = load_fan(args.fan)
    res = resolve(fan, args.policy)
    out = Fan(res.fan.rank, res.fan.rays, res.fan.maximal_index)
    steps = []
    lines = [f"# stellar steps: {len(res.steps)}, policy {args.policy}"]
    for s in res.steps:
        parts = [f"{_cone_label(c)} (multiplicity {m} -> {children})" for c, m, children in s.subdivided]
        steps.append({"ray": list(s.new_ray), "subdivided": [[list(c), m, ch] for c, m, ch in s.subdivided]})
        lines.append(f"# add ray {list(s.new_ray)}: " + "; ".join(parts))
    text = format_fan(out)
    lines += text.rstrip("\n").splitlines()
    rep = {"policy": args.policy, "steps": steps, "fan": text, "fiber": res.fiber, "smooth": out.is_smooth()}
    return rep, lines


def cmd_corpus(args) -> tuple[dict, list[str]]:
    from . import suite

    numbers = sorted({int(x) for x in args.criteria.split(",")}) if args.criteria else None
    if numbers and any(k not in suite.TITLES for k in numbers):
        raise ValueError(f"criteria must be among {sorted(suite.TITLES)}")
    results = suite.run(numbers, jobs=args.jobs, samples=args.samples)
    rows, lines = [], []
    for r in results:
        row = {"criterion": r.number, "title": r.title, "pass": r.passed, "detail": r.detail, "failures": r.failures}
        if r.limit is not None:
            row["time_limit_seconds"] = str(r.limit)
        if args.timings:
            row["milliseconds"] = int(r.seconds * 1000)
        rows.append(row)
        timing = f" [{r.seconds:.2f} s]" if args.timings else ""
        lines.append(f"criterion {r.number}: {'PASS' if r.passed else 'FAIL'} {r.title}: {r.detail}{timing}")
        lines += [f"  {x}" for x in r.failures[:20]]
    ok = all(r.passed for r in results)
    rep = {"ok": ok, "criteria": rows}
    if not ok:
        rep["reason"] = "regression suite failed"
        raise Failure(rep, lines)
    return rep, lines


# --------------------------------------------------------------------------
# argument parsing and dispatch
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default="text", help="output format")

    p = argparse.ArgumentParser(prog="eqloc", description="Equivariant localization on toric and spherical varieties.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("emult", cmd_emult, "equivariant multiplicities of X and its orbit closures")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--cone", help="cone id or ray set like {0,2}; default: every cone")
    sp.add_argument("--degree", type=int, default=DEFAULT_DEGREE)
    sp.add_argument("--policy", choices=PIVOT_POLICIES, default="min-height")

    sp = add("euler", cmd_euler, "equivariant Euler characteristic of O(D)")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--divisor", required=True)
    sp.add_argument("--oracle", action="store_true", help="compare with the lattice points of P_D")

    sp = add("integrate", cmd_integrate, "push a fixed-point tuple forward to a point")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--tuple", required=True)

    sp = add("gkm-check", cmd_gkm, "divisibility across walls")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--tuple", required=True)

    sp = add("pexp-check", cmd_pexp, "agreement on all shared faces")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--tuple", required=True)

    sp = add("dual-basis", cmd_dual_basis, "dual basis to orbit-closure structure sheaves")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--cones", required=True, help="comma-separated cone ids or ray sets, e.g. '{},{2},{0,2}'")

    sp = add("rr-check", cmd_rr, "Todd, Adams and Grothendieck-Riemann-Roch checks")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--divisor")
    sp.add_argument("--adams", type=int, metavar="J")
    sp.add_argument("--degree", type=int, metavar="D")

    sp = add("adams-check", cmd_adams, "Adams-Riemann-Roch at every fixed point")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--adams", type=int, metavar="J", help="default: 1, 2, 3 and 5")
    sp.add_argument("--tuple")

    sp = add("spherical-check", cmd_spherical, "relations for an SL2 surface or a skeleton")
    sp.add_argument("--kind", help="pv, p1p1, fn:N, pn:N, kn:N, p1 or point")
    sp.add_argument("--skeleton")
    sp.add_argument("--tuple", required=True)
    sp.add_argument("--subring", action="store_true", help="coefficients must lie in Z[e^{2t}]")

    sp = add("resolve", cmd_resolve, "smooth refinement by stellar subdivision")
    sp.add_argument("--fan", required=True)
    sp.add_argument("--policy", choices=PIVOT_POLICIES, default="min-height")

    sp = add("corpus", cmd_corpus, "run the regression suite")
    sp.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--samples", type=int, default=10_000, help="sampled tuples per spherical kind")
    sp.add_argument("--timings", action="store_true", help="include wall-clock times (not deterministic)")
    return p


def _emit(args, command: str, status: str, report: dict, lines: list[str], stream=None) -> None:
    stream = stream or sys.stdout
    if args.format == "structured":
        doc = {"format": FORMAT_TAG, "command": command, "status": status, **report}
        stream.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        for line in lines:
            stream.write(line + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, lines = args.func(args)
    except Failure as f:
        _emit(args, args.command, "failure", f.report, lines=f.lines)
        return 1
    except MATH_ERRORS as err:
        rep = {"reason": str(err), "error": type(err).__name__}
        _emit(args, args.command, "failure", rep, [f"{type(err).__name__}: {err}"])
        return 1
    except INPUT_ERRORS as err:
        msg = err.args[0] if isinstance(err, KeyError) and err.args else str(err)
        rep = {"reason": msg, "error": type(err).__name__}
        if args.format == "structured":
            _emit(args, args.command, "error", rep, [])
        else:
            sys.stderr.write(f"eqloc {args.command}: error: {msg}\n")
        return 2
    _emit(args, args.command, "ok", report, lines)
    return 0


if __name__ == "__main__":
    sys.exit(main())
