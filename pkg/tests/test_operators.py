import math

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from pfworkbench.algebra import RatFun
from pfworkbench.families import PF_U_THETA_TEXT, build_pf_b, build_pf_u
from pfworkbench.forms import AlgElem, RelForm2, SqrtContext
from pfworkbench.grammar import parse_ratfun
from pfworkbench.operators import (
    DiffOperator,
    FrobeniusSeries,
    IndicialError,
    apply_to_form,
    apply_to_series,
    change_variable,
    frobenius_solutions,
    theta_to_standard,
)

U = ("u",)
LEGENDRE = "-1/4 + (1 - 2*lam)*D + lam*(1 - lam)*D^2"


def u_series(coeffs):
    return FrobeniusSeries.power_series("u", coeffs)


def test_theta_form_expands_to_u_operator():
    op = theta_to_standard(PF_U_THETA_TEXT, "u")
    expected = DiffOperator.parse("-3/32 + (1 - 51/16*u)*D + 3*u*(1 - 3/2*u)*D^2 + (1 - u)*u^2*D^3", "u")
    assert op.scale(parse_ratfun("1/u", U)) == expected
    assert op.scale(parse_ratfun("1/u", U)) == build_pf_u()


def test_theta_alone():
    assert theta_to_standard([0, 1], "u") == DiffOperator.parse("u*D", "u")


def test_theta_squared_eigenvalue():
    op = theta_to_standard([0, 0, 1], "u")
    for n in range(1, 6):
        s = u_series([0] * n + [1] + [0] * 4)
        out = apply_to_series(op, s)
        assert out.terms() == {(0, n): n * n}


def test_chain_rule_gives_b_operator():
    assert change_variable(build_pf_u(), "256/b^4", "b").equivalent(build_pf_b())


def test_legendre_under_nu_squared():
    L = DiffOperator.parse(LEGENDRE, "lam")
    out = change_variable(L, "nu^2", "nu")
    assert out.equivalent(DiffOperator.parse("-1 + (1 - 3*nu^2)/nu*D + (1 - nu^2)*D^2", "nu"))


def test_legendre_under_mobius_square():
    L = DiffOperator.parse(LEGENDRE, "lam")
    out = change_variable(L, "((nu + 1)/(nu - 1))^2", "nu")
    # order-2 part of the E2 system: w'' - A_t w' - B_t w
    e2 = DiffOperator.parse("1/(nu*(nu - 1)^2) + (nu^2 - 2*nu - 1)/(nu*(nu^2 - 1))*D + D^2", "nu")
    assert out.equivalent(e2)


def test_zero_derivative_substitution():
    with pytest.raises(ValueError):
        change_variable(build_pf_u(), "7", "w")


def test_identity_substitution():
    op = build_pf_u()
    back = change_variable(op, "u", "u")
    assert back == op


maps = st.sampled_from(["2*w + 1", "w^2", "1/w", "(w + 1)/(w - 2)", "3*w^3"])
maps2 = st.sampled_from(["x - 1", "2/x", "x^2 + x", "(2*x + 1)/x"])


@settings(max_examples=20, deadline=None)
@given(maps, maps2)
def test_change_variable_composition(m1, m2):
    L = DiffOperator.parse(LEGENDRE, "lam")
    phi = parse_ratfun(m1, ("w",))
    psi = parse_ratfun(m2, ("x",))
    from pfworkbench.algebra import rat_substitute

    direct = rat_substitute(phi, {"w": psi}, variables=("x",))
    two_step = change_variable(change_variable(L, phi, "w"), psi, "x")
    assert two_step.equivalent(change_variable(L, direct, "x"))


def _omega_ctx():
    vs = ("X", "Z", "b")
    P = parse_ratfun("X*(X^2 + X*(Z + 1/Z - b^2/4) + 1)", vs)
    return SqrtContext([("Y", P)], ("X", "Z"), "b")


def test_apply_to_form_trivial_cases():
    ctx = _omega_ctx()
    zero = RelForm2(ctx, AlgElem(ctx))
    assert apply_to_form(build_pf_b(), zero).is_zero()
    om = RelForm2(ctx, 1 / AlgElem.radical(ctx, "Y") / RatFun.var("Z", ctx.variables))
    c0 = DiffOperator("b", [parse_ratfun("b^2 + 1", ("b",))])
    assert (apply_to_form(c0, om).c - om.c * parse_ratfun("b^2 + 1", ctx.variables)).is_zero()


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["X + Z", "X^2/Z", "3", "1/(X + 1)"]), st.sampled_from(["b", "b^2 + X", "Z*b"]))
def test_apply_to_form_scalar_commutation(fibre_only, with_b):
    ctx = _omega_ctx()
    op = build_pf_b()
    om = RelForm2(ctx, 1 / AlgElem.radical(ctx, "Y"))
    s = parse_ratfun(fibre_only, ctx.variables)
    assert (apply_to_form(op, om * s).c - apply_to_form(op, om).c * s).is_zero()
    t = parse_ratfun(with_b, ctx.variables)
    same = (apply_to_form(op, om * t).c - apply_to_form(op, om).c * t).is_zero()
    assert same is False


def test_annihilates_period_series():
    coeffs = [mpq(math.factorial(4 * n), math.factorial(n) ** 4) / 256**n for n in range(21)]
    out = apply_to_series(build_pf_u(), u_series(coeffs))
    assert out.is_zero()
    assert out.exponent + out.order - 1 >= 17


def test_derivative_of_constant_series():
    out = apply_to_series(DiffOperator.parse("D", "u"), u_series([5, 0, 0, 0]))
    assert out.is_zero()


def test_frobenius_pf_u():
    sols = frobenius_solutions(build_pf_u(), 21)
    assert len(sols) == 3
    assert list(sols[0].blocks[0]) == [mpq(math.factorial(4 * n), math.factorial(n) ** 4) / 256**n for n in range(21)]
    for k, s in enumerate(sols):
        assert s.log_degree == k
        assert s.blocks[k][0] == mpq(1, math.factorial(k))
        assert all(s.blocks[j][0] == 0 for j in range(k))
        assert apply_to_series(build_pf_u(), s).is_zero()


def test_frobenius_first_order():
    sols = frobenius_solutions(DiffOperator.parse("D", "v"), 6)
    assert len(sols) == 1 and list(sols[0].blocks[0]) == [1, 0, 0, 0, 0, 0]


def test_frobenius_legendre():
    sols = frobenius_solutions(DiffOperator.parse(LEGENDRE, "lam"), 11)
    expect = []
    c = mpq(1)
    for n in range(11):
        expect.append(c)
        c = c * (mpq(1, 2) + n) ** 2 / (n + 1) ** 2
    assert list(sols[0].blocks[0]) == expect


def test_frobenius_rejects_non_mum():
    with pytest.raises(IndicialError):
        # indicial roots 0 and 1/2
        frobenius_solutions(DiffOperator.parse("-1/4 + 1/2*D + v*D^2", "v"), 5)
    with pytest.raises(IndicialError):
        # irregular: the Theta-leading part drops order at v = 0
        frobenius_solutions(DiffOperator.parse("D + v^2*D^2", "v"), 5)
