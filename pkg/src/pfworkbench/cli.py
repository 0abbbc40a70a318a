"""Command line: ``pfworkbench verify`` and ``pfworkbench compute ...``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

from gmpy2 import mpq

from . import families as fam
from . import numerics as num
from .operators import apply_to_series, FrobeniusSeries, theta_to_standard

# every check must use one of these identifiers
LOCATORS = {
    "pf.theta-expansion": "Theta form expands to the u-operator (after dividing by u)",
    "pf.chain-rule": "u-operator under u = 256/b^4 equals the b-operator (monic)",
    "series.annihilation": "u-operator kills sum (4n)!/(n!)^4 (u/256)^n, n <= 20, through u^17",
    "series.pochhammer": "(4n)!/(n!)^4 = 256^n (1/4)_n (1/2)_n (3/4)_n / (n!)^3, n <= 50",
    "quartic.singular-points": "six points are singular on every member of the quartic family",
    "weierstrass.maps": "forward after inverse is the identity; forward lands on the curve",
    "omega.2YdY": "2Y dY = X^2 (1 - 1/Z^2) dZ + P_X dX",
    "omega.second-form": "dXdY/(X^2 (Z - 1/Z)) as a multiple of dXdZ/(YZ)",
    "k.reference": "radical-normalised numerator of D_PF omega at b = i equals the reference table",
    "k.oracle": "exact K/(Y^7 Z) against numeric b-derivatives at five points",
    "k.positivity": "numerator coefficients positive integers; P numerator positive at b = i",
    "legendre.E1": "order-2 inhomogeneous identity on E1",
    "legendre.E1-unnormalised": "E1 identity before dividing by 1 - nu^2",
    "legendre.E1-alt-rhs": "the two right-hand sides on E1 coincide",
    "legendre.E2": "order-2 inhomogeneous identity on E2",
    "legendre.operators": "Legendre operator under lambda = nu^2 and ((nu+1)/(nu-1))^2",
    "legendre.curve-beta": "L(dx/y) = c d(y/(x - lam)^2) with constant c",
    "kummer.compatibility": "compatibility residual of the two systems",
    "kummer.coefficients": "combinator A, B, C equal the reference operator",
    "kummer.identity": "D(w(s)^w(t)) = d_rel(beta) with the combinator beta",
    "kummer.reference-beta": "reference beta compared term by term (informative)",
    "mirror.omega0": "holomorphic Frobenius solution equals the period series to order 20",
    "mirror.normalisation": "u(q) = q + O(q^2)",
    "mirror.reference-series": "affine match of 1/u(q) with the reference T(q) (informative)",
    "mirror.clausen": "holomorphic solution as a square of a 2F1 (informative)",
    "g.positive": "g(i) by direct quadrature converges and is positive",
    "g.routes-agree": "finite-difference D_PF(normal function) at i matches direct g(i)",
    "periods.annihilated": "finite-difference D_PF(period) vanishes at b = 6, 8, 12",
    "fit.rational": "rational fit of g on b = 5i..16i, held-out residual (informative)",
}


@dataclass
class Check:
    locator: str
    status: str  # pass, fail, info
    value: str
    runtime: float = 0.0


@dataclass
class Report:
    suite: str
    checks: list = field(default_factory=list)

    def add(self, locator, status, value, runtime=0.0):
        if locator not in LOCATORS:
            # unknown identifiers fail closed
            self.checks.append(Check(locator, "fail", f"unknown locator; {value}", runtime))
            return
        self.checks.append(Check(locator, status, str(value), runtime))

    @property
    def ok(self):
        return all(c.status != "fail" for c in self.checks)

    def to_json(self, timings=False):
        rows = []
        for c in self.checks:
            row = {"locator": c.locator, "status": c.status, "value": c.value}
            if timings:
                row["runtime_s"] = round(c.runtime, 3)
            rows.append(row)
        return json.dumps({"suite": self.suite, "ok": self.ok, "checks": rows}, indent=2)

    def to_table(self, timings=False):
        w = max(len(c.locator) for c in self.checks) if self.checks else 10
        lines = [f"{'check':<{w}}  {'status':<6}  value", "-" * (w + 40)]
        for c in self.checks:
            t = f"  [{c.runtime:.2f}s]" if timings else ""
            lines.append(f"{c.locator:<{w}}  {c.status:<6}  {c.value}{t}")
        lines.append(f"suite {self.suite}: {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(lines)


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def _flag(ok):
    return "pass" if ok else "fail"


def symbolic_checks(rep: Report):
    u_over = fam.build_pf_u()

    def theta():
        op = theta_to_standard(fam.PF_U_THETA_TEXT, "u")
        from .algebra import RatFun

        return op.scale(RatFun.var("u", ("u",)).inverse()) == u_over

    ok, t = _timed(theta)
    rep.add("pf.theta-expansion", _flag(ok), "constant term -3/32 confirmed" if ok else "mismatch", t)

    ok, t = _timed(lambda: fam.pf_b_from_chain_rule().equivalent(fam.build_pf_b()))
    rep.add("pf.chain-rule", _flag(ok), "monic coefficients equal" if ok else "coefficients differ", t)

    def annihilate():
        s = FrobeniusSeries.power_series("u", [num.period_coefficient(n) / 256**n for n in range(21)])
        r = apply_to_series(u_over, s)
        return r.is_zero() and r.exponent + r.order - 1 >= 17, r.exponent + r.order - 1

    (ok, top), t = _timed(annihilate)
    rep.add("series.annihilation", _flag(ok), f"zero through u^{top}", t)

    ok, t = _timed(lambda: all(num.period_coefficient(n) == 256**n * num.f32_coefficient(n) for n in range(51)))
    rep.add("series.pochhammer", _flag(ok), "n = 0..50", t)

    flags, t = _timed(lambda: fam.QuarticFamily().certify_singular_points())
    rep.add("quartic.singular-points", _flag(all(flags)), f"{sum(flags)}/6 certified", t)

    def maps():
        w = fam.WeierstrassModel()
        return w.forward_inverse_is_identity(), w.forward_lands_on_curve()

    (a, b), t = _timed(maps)
    rep.add("weierstrass.maps", _flag(a and b), f"identity={a} on-curve={b}", t)

    ids, t = _timed(fam.omega_identities)
    rep.add("omega.2YdY", _flag(ids["2YdY_dZ"] and ids["2YdY_dX"]), "dZ and dX parts", t)
    ratio = ids["second_form_ratio"]
    rep.add("omega.second-form", "info" if ratio is not None else "fail", f"ratio = {ratio}", 0.0)

    k, t = _timed(lambda: fam.compute_K(at_b_eq_i=True))
    rows, mism = fam.compare_k_with_golden(k)
    detail = f"{len(rows) - len(mism)}/{len(rows)} monomials agree over {k.denominator}"
    if mism:
        detail += "; differing: " + ", ".join(f"X^{e[0]}Z^{e[1]}: {a} vs {b}" for e, a, b in mism)
    rep.add("k.reference", _flag(not mism and k.parity_ok), detail, t)

    pts = [(mpq(1, 3), mpq(1, 2)), (2, mpq(1, 10)), (1, 1), (mpq(7, 2), mpq(9, 10)), (mpq(1, 20), mpq(1, 4))]
    errs, t = _timed(lambda: fam.k_oracle_check([(float(x), float(z)) for x, z in pts]))
    rep.add("k.oracle", _flag(max(errs) < 1e-6), f"max rel err {max(errs):.1e}", t)

    pos = fam.check_positivity(k)
    rep.add("k.positivity", _flag(pos["k_ok"] and pos["p_ok"]),
            f"{pos['k_terms']} terms positive integers; P numerator {pos['p_coefficients']}")

    (ss, st), t = _timed(fam.build_legendre_systems)
    ok, t1 = _timed(ss.verify)
    rep.add("legendre.E1", _flag(ok), "closes" if ok else "residual nonzero", t + t1)
    ok, t1 = _timed(lambda: fam.legendre_unnormalised_ok(ss))
    rep.add("legendre.E1-unnormalised", _flag(ok), "closes" if ok else "residual nonzero", t1)
    ok, t1 = _timed(lambda: fam.legendre_alternative_rhs(ss))
    rep.add("legendre.E1-alt-rhs", _flag(ok), "equal" if ok else "differ", t1)
    ok, t1 = _timed(st.verify)
    rep.add("legendre.E2", _flag(ok), "closes" if ok else "residual nonzero", t1)
    ops, t1 = _timed(fam.legendre_operator_checks)
    rep.add("legendre.operators", _flag(all(ops.values())), ", ".join(f"{k}: {v}" for k, v in ops.items()), t1)
    (c, const), t1 = _timed(fam.verify_legendre_section1)
    rep.add("legendre.curve-beta", _flag(const), f"c = {c}", t1)

    try:
        res, t1 = _timed(lambda: fam.pf_convolve(ss, st))
    except fam.CompatibilityError as e:
        rep.add("kummer.compatibility", "fail", f"residual {e.residual}")
        return
    rep.add("kummer.compatibility", _flag(res.residual.is_zero()), f"residual = {res.residual}", t1)
    disp = fam.load_reference_kummer_operator()
    mine = fam.kummer_operator_reference_form(res)
    ok = all((mine[k] - disp[a]).is_zero() for k, a in (("D^2", "a2"), ("D^1", "a1"), ("D^0", "a0")))
    rep.add("kummer.coefficients", _flag(ok), f"A = {res.A}")
    rep.add("kummer.identity", _flag(res.identity_ok), "closes with d(f ds + g dt) = (g_s - f_t) ds^dt")
    rb, t1 = _timed(lambda: fam.verify_kummer_beta(res))
    rep.add("kummer.reference-beta", "info",
            "; ".join(f"{k}: {s}" for k, s in rb["terms"]) + f"; reference beta closes: {rb['reference_literal_closes'][1]}", t1)

    ms, t = _timed(lambda: num.mirror_series(20))
    ok = all(ms.omega0[n] == num.period_coefficient(n) / 256**n for n in range(21))
    rep.add("mirror.omega0", _flag(ok), "n = 0..20", t)
    rep.add("mirror.normalisation", _flag(ms.u_of_q[0] == 0 and ms.u_of_q[1] == 1), f"u(q) = q + ({ms.u_of_q[2]}) q^2 + ...")
    cmp = num.mirror_comparison(ms)
    rows = ", ".join(f"q^{r['power']}: {r['computed']}{'' if r['match'] else ' (reference ' + str(r['reference']) + ')'}" for r in cmp["rows"])
    rep.add("mirror.reference-series", "info", f"scale {cmp['beta']}, shift {cmp['gamma']}: {rows}")
    cl = num.clausen_check(ms)
    rep.add("mirror.clausen", "info", f"2F1({', '.join(cl['parameters'] or ('?', '?'))}; 1; u)^2, agrees to u^{cl['order']}: {cl['agrees']}")


def numeric_checks(rep: Report, tol=1e-10, csv_path=None):
    g, t = _timed(lambda: num.g_direct(1j, tol=min(tol, 1e-7)))
    rel = g.error_estimate / abs(g.value)
    ok = g.converged and rel < 1e-6 and g.value.real > 0 and abs(g.value.imag) <= 1e-12 * abs(g.value)
    rep.add("g.positive", _flag(ok), f"g(i) = {g.value.real:.12g}, rel err est {rel:.1e}", t)

    fd, t = _timed(lambda: num.pf_fd(1j, tol=max(tol, 1e-13)))
    disc = abs(fd.value - g.value) / abs(g.value)
    rep.add("g.routes-agree", _flag(disc < 1e-4), f"D_PF(nu_bar)(i) = {fd.value.real:.12g}, rel diff {disc:.1e}", t)
    if csv_path:
        nb = num.normal_function(1j, tol=max(tol, 1e-13)).value
        with open(csv_path, "w") as fh:
            fh.write(num.results_csv([{"b": "1j", "nu_bar": nb, "g_direct": g.value, "pf_fd": fd.value,
                                       "discrepancy": f"{disc:.3e}"}]))

    worst = 0.0
    t = 0.0
    for b in (6, 8, 12):
        r, dt = _timed(lambda: num.pf_fd(b, f=lambda bb: num.period_series(bb, 400)))
        worst = max(worst, abs(r.value) / r.scale)
        t += dt
    rep.add("periods.annihilated", _flag(worst < 1e-6), f"max |D_PF(period)| / largest term = {worst:.1e}", t)

    def fit():
        train = [(1j * y, num.g_direct(1j * y, tol=1e-12).value) for y in range(5, 17)]
        test = [(1j * (y + 0.5), num.g_direct(1j * (y + 0.5), tol=1e-12).value) for y in range(5, 16)]
        out = []
        for d in (1, 2, 3, 4):
            r = num.rational_fit(train, (d, d))
            held = max(abs(r["model"](b) - v) / abs(v) for b, v in test)
            out.append((d, held))
        return out

    out, t = _timed(fit)
    rep.add("fit.rational", "info", ", ".join(f"({d},{d}): {h:.1e}" for d, h in out), t)


def cmd_verify(args):
    rep = Report(f"verify/{args.scope}")
    if args.scope in ("all", "symbolic"):
        symbolic_checks(rep)
    if args.scope in ("all", "numeric"):
        numeric_checks(rep, args.tol, args.csv)
    _emit(rep, args)
    return 0 if rep.ok else 1


def _emit(rep, args):
    text = rep.to_json(args.timings) if args.format == "json" else rep.to_table(args.timings)
    print(text)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(rep.to_json(args.timings) + "\n")


def parse_b(text):
    """Accept ``i``, ``2i``, ``1+2i``, ``1j`` or plain reals."""
    t = text.strip().replace(" ", "").replace("i", "j")
    if t in ("j", "+j", "-j"):
        t = t.replace("j", "1j")
    try:
        return complex(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _fmt(z):
    z = complex(z)
    return f"{z.real:.15g}{z.imag:+.15g}i"


def _rec(r):
    return {"value": _fmt(r.value), "error_estimate": f"{r.error_estimate:.3e}", "level": r.subdivisions,
            "nodes": r.nodes, "converged": r.converged}


def cmd_compute(args):
    what = args.what
    if what == "k-poly":
        if args.at_i:
            k = fam.compute_K(at_b_eq_i=True)
            print("# D_PF(dXdZ/(YZ)) = K dXdZ/(Y^7 Z) at b = i")
            print(f"K = {k.K}")
            print("# radical normalisation")
            print(k.radical_form_text())
        else:
            k = fam.compute_K(at_b_eq_i=False)
            print(f"K = {k.K}")
        return 0
    if what == "period":
        print(json.dumps({"b": _fmt(args.b), "terms": args.terms, "I": _fmt(num.period_series(args.b, args.terms))}))
        return 0
    if what == "normal-fn":
        print(json.dumps({"b": _fmt(args.b), **_rec(num.normal_function(args.b, args.tol))}))
        return 0
    if what == "g":
        out = {"b": _fmt(args.b)}
        if args.route in ("direct", "both"):
            out["direct"] = _rec(num.g_direct(args.b, args.tol))
        if args.route in ("fd", "both"):
            fd = num.pf_fd(args.b, h=args.h)
            out["fd"] = {"value": _fmt(fd.value), "h": fd.h, "terms": [_fmt(t) for t in fd.terms]}
        print(json.dumps(out, indent=2))
        return 0
    if what == "mirror":
        ms = num.mirror_series(args.order)
        full = ms if args.order >= 20 else num.mirror_series(20)
        print(json.dumps({
            "u_of_q": [str(c) for c in ms.u_of_q],
            "inverse": [str(c) for c in ms.inverse_laurent()],
            "comparison": num.mirror_comparison(full),
            "clausen": num.clausen_check(full),
        }, indent=2))
        return 0
    if what == "convolve":
        from .convolve_input import parse_systems

        if args.input:
            with open(args.input) as fh:
                text = fh.read()
        else:
            from importlib import resources

            text = resources.files("pfworkbench").joinpath("data/kummer_instance.txt").read_text()
        ss, st = parse_systems(text)
        res = fam.pf_convolve(ss, st)
        print(f"A = {res.A}")
        print(f"B = {res.B}")
        print(f"C = {res.C}")
        print(f"compatibility residual = {res.residual}")
        print(f"identity closes = {res.identity_ok}")
        for key, c in res.terms.items():
            print(f"beta term {key}: {c}")
        return 0
    raise AssertionError(what)


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _regular_b(text):
    b = parse_b(text)
    if b == 0 or abs(b * b - 16) < 1e-15:
        raise argparse.ArgumentTypeError(f"b = {text} is a singular value (0, 4, -4)")
    return b


def build_parser():
    p = argparse.ArgumentParser(prog="pfworkbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("verify", help="run the identity and numeric suites")
    v.add_argument("--scope", choices=("all", "symbolic", "numeric"), default="all")
    v.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance (default 1e-10)")
    v.add_argument("--format", choices=("table", "json"), default="table")
    v.add_argument("--json", metavar="PATH", help="also write the JSON report here")
    v.add_argument("--csv", metavar="PATH", help="write the b, nu_bar, g_direct, pf_fd table here")
    v.add_argument("--timings", action="store_true", help="include runtimes (output no longer reproducible)")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compute", help="single computations")
    csub = c.add_subparsers(dest="what", required=True)
    k = csub.add_parser("k-poly")
    k.add_argument("--at-i", action="store_true", help="rewrite b^2 = -1")
    pr = csub.add_parser("period")
    pr.add_argument("--b", type=parse_b, required=True)
    pr.add_argument("--terms", type=_positive_int, default=40)
    nf = csub.add_parser("normal-fn")
    nf.add_argument("--b", type=_regular_b, required=True)
    nf.add_argument("--tol", type=float, default=1e-12)
    g = csub.add_parser("g")
    g.add_argument("--b", type=_regular_b, required=True)
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--route", choices=("direct", "fd", "both"), default="both")
    g.add_argument("--h", type=float, default=None, help="finite-difference step (default: 0.025 x distance to 0, +-4)")
    m = csub.add_parser("mirror")
    m.add_argument("--order", type=_positive_int, default=8)
    cv = csub.add_parser("convolve")
    cv.add_argument("--input", metavar="FILE", help="two-system file (default: the shipped Kummer instance)")
    c.set_defaults(func=cmd_compute)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ZeroDivisionError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
