from fractions import Fraction

import pytest
from gmpy2 import mpq

from pfworkbench import families as fam
from pfworkbench.algebra import MultiPoly, RatFun
from pfworkbench.forms import AlgElem
from pfworkbench.grammar import parse_poly, parse_ratfun
from pfworkbench.operators import change_variable


@pytest.fixture(scope="module")
def k_at_i():
    return fam.compute_K(at_b_eq_i=True)


@pytest.fixture(scope="module")
def legendre():
    return fam.build_legendre_systems()


@pytest.fixture(scope="module")
def kummer(legendre):
    return fam.pf_convolve(*legendre)


def test_pf_u_coefficients():
    u = ("u",)
    expected = ["-3/32", "1 - 51/16*u", "3*u*(1 - 3/2*u)", "(1 - u)*u^2"]
    for c, e in zip(fam.build_pf_u().coeffs, expected):
        assert (c - parse_ratfun(e, u)).is_zero()


def test_pf_b_second_derivative_coefficient():
    c2 = fam.build_pf_b().coeffs[2]
    assert (c2 - parse_ratfun("3/4*(b/4)^2*(1 + (b/4)^4)", ("b",))).is_zero()


def test_chain_rule():
    assert change_variable(fam.build_pf_u(), "256/b^4", "b").equivalent(fam.build_pf_b())
    assert fam.pf_b_from_chain_rule().equivalent(fam.build_pf_b())


def test_quartic_singular_points():
    assert fam.QuarticFamily().certify_singular_points() == [True] * 6


def test_weierstrass_maps():
    w = fam.WeierstrassModel()
    assert w.forward_inverse_is_identity()
    assert w.forward_lands_on_curve()


def test_omega_component():
    om = fam.build_omega()
    ctx = om.ctx
    assert set(om.c.components) == {(1,)}
    expected = (ctx.radicand(0) * RatFun.var("Z", ctx.variables)).inverse()
    assert (om.c.component((1,)) - expected).is_zero()


def test_omega_identities():
    ids = fam.omega_identities()
    assert ids["2YdY_dZ"] and ids["2YdY_dX"]
    # dXdY/(X^2 (Z - 1/Z)) is half of dXdZ/(YZ)
    assert ids["second_form_ratio"] == mpq(1, 2)


def test_k_radical_form_coefficients(k_at_i):
    terms = k_at_i.numerator.terms
    assert k_at_i.denominator == 8192
    assert terms[(3, 3)] == 349951
    assert terms[(6, 3)] == 98304
    assert terms[(1, 3)] == 85952
    assert len(terms) == 25


def test_k_matches_shipped_golden(k_at_i):
    rows, mismatches = fam.compare_k_with_golden(k_at_i)
    assert len(rows) == 25 and mismatches == []


def test_k_general_b_is_even_and_z_cubed(k_at_i):
    k = fam.compute_K(at_b_eq_i=False)
    assert k.parity_ok and k.K.even_in("b")
    assert [(str(f), e) for f, e in k.K.factors] == [("Z", 3)]


def test_odd_b_power_rejected():
    p = parse_poly("X*b + Z*b^2", fam.WVARS)
    with pytest.raises(ArithmeticError):
        fam._rewrite_b_squared(p)


def test_k_oracle_at_real_and_imaginary_b():
    pts = [(1 / 3, 1 / 2), (2.0, 0.1), (1.0, 1.0), (3.5, 0.9), (0.05, 0.25)]
    assert max(fam.k_oracle_check(pts, b=1j)) < 1e-6
    assert max(fam.k_oracle_check(pts[:2], b=0.5)) < 1e-6


def test_positivity(k_at_i):
    rep = fam.check_positivity(k_at_i)
    assert rep["k_ok"] and rep["k_nonpositive_or_fractional"] == []
    assert rep["p_ok"] and rep["p_coefficients"] == [1, 4, 4, 4, 4]


def test_singular_b_rejected():
    for b in (4, -4):
        with pytest.raises(ValueError):
            fam.reject_singular_b(b)
    assert fam.reject_singular_b(mpq(1, 2))


def test_legendre_systems(legendre):
    ss, st = legendre
    assert ss.verify() and st.verify()
    assert fam.legendre_unnormalised_ok(ss)
    assert fam.legendre_alternative_rhs(ss)
    assert all(fam.legendre_operator_checks().values())


def test_paper_instance(kummer):
    nu = ("nu",)
    assert kummer.residual.is_zero() and kummer.compatibility_ok
    assert (kummer.A - parse_ratfun("-3*(2*nu + 1)/(nu*(nu + 1))", nu)).is_zero()
    assert (kummer.B - parse_ratfun("-(7*nu^4 - 6*nu^3 - 4*nu^2 + 6*nu + 1)/((nu - 1)^2*(nu + 1)^2*nu^2)", nu)).is_zero()
    assert (kummer.C - parse_ratfun("-(nu^4 - 2*nu^3 - 2*nu - 1)/((nu - 1)^3*(nu + 1)^2*nu^2)", nu)).is_zero()
    assert kummer.identity_ok


def test_reference_operator_from_data(kummer):
    disp = fam.load_reference_kummer_operator()
    mine = fam.kummer_operator_reference_form(kummer)
    for a, k in (("a2", "D^2"), ("a1", "D^1"), ("a0", "D^0")):
        assert (mine[k] - disp[a]).is_zero()


def test_symmetric_inputs_compatible(legendre):
    ss, _ = legendre
    ctx, lam = fam._legendre_ctx("t", "u2", "nu^2")
    vt = ctx.variables
    beta = AlgElem.radical(ctx, "u2") * (parse_ratfun("2/(1 - nu^2)", vt) / (RatFun.var("t", vt) - lam) ** 2)
    twin = fam.InhomSystem2(ss.A.with_vars(vt), ss.B.with_vars(vt), beta, ctx)
    res = fam.pf_convolve(ss, twin)
    assert res.residual.is_zero() and res.identity_ok


def test_perturbed_input_incompatible(legendre):
    ss, st = legendre
    bad = fam.InhomSystem2(st.A, st.B + 1, st.beta, st.ctx)
    with pytest.raises(fam.CompatibilityError) as e:
        fam.pf_convolve(ss, bad)
    assert (e.value.residual + 2).is_zero()


def test_kummer_beta_report(kummer):
    rep = fam.verify_kummer_beta(kummer)
    # exactly one orientation closes the identity
    assert rep["closes"] == {1: True, -1: False}
    assert dict(rep["terms"]) == {"w(t)": "match", "w'(t)": "match", "w(s)": "match", "w'(s)": "match"}


def test_residual_sign_flip(kummer):
    plus = fam.convolution_identity_residual(kummer, 1)
    minus = fam.convolution_identity_residual(kummer, -1)
    assert plus.is_zero() and not minus.is_zero()


def test_legendre_curve_beta():
    c, ok = fam.verify_legendre_section1()
    assert ok and c == mpq(1, 2)
    assert fam.verify_legendre_section1(power=3) == (None, False)


def test_legendre_curve_beta_at_lambda_zero():
    # at lam = 0 the operator is d/dlam - 1/4; compare with (1/2) d/dx (y/x^2) numerically
    import mpmath

    for x in (mpmath.mpf(5) / 2, mpmath.mpf(7) / 3):
        def w(lam, x=x):
            return 1 / mpmath.sqrt(x * (x - 1) * (x - lam))

        def h(xx):
            return mpmath.sqrt(xx * (xx - 1) * xx) / xx**2

        lhs = mpmath.diff(w, 0) - w(0) / 4
        rhs = mpmath.diff(h, x) / 2
        assert abs(lhs - rhs) < 1e-12


def test_b_from_nu():
    assert fam.b_from_nu(2) == mpq(-50, 3)
    for nu in (mpq(2), mpq(3, 7), mpq(-5, 2)):
        assert fam.b_from_nu(nu) == fam.b_from_nu(-1 / nu)
    with pytest.raises(ZeroDivisionError):
        fam.b_from_nu(1)
