import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pfworkbench.algebra import RatFun
from pfworkbench.forms import (
    AlgElem,
    Form1,
    NotInvertibleError,
    RelForm1,
    SqrtContext,
    d_rel,
    wedge,
)
from pfworkbench.grammar import parse_ratfun

V = ("X", "Z", "b")
P_TEXT = "X*(X^2 + X*(Z + 1/Z - b^2/4) + 1)"


@pytest.fixture(scope="module")
def quartic():
    P = parse_ratfun(P_TEXT, V)
    ctx = SqrtContext([("Y", P)], ("X", "Z"), "b")
    return ctx, P, AlgElem.radical(ctx, "Y")


def test_defining_relation(quartic):
    ctx, P, Y = quartic
    sq = Y * Y
    assert set(sq.components) == {(0,)}
    assert (sq.component((0,)) - P).is_zero()
    assert ((1 / Y) * Y - AlgElem.scalar(ctx, 1)).is_zero()


def test_inverse_cube(quartic):
    ctx, P, Y = quartic
    cube = (1 / Y) ** 3
    assert set(cube.components) == {(1,)}
    assert (cube.component((1,)) - (P * P).inverse()).is_zero()


def test_derivative_in_b(quartic):
    ctx, P, Y = quartic
    dY = Y.diff("b")
    expected = P.diff("b") / (P * 2)
    assert (dY.component((1,)) - expected).is_zero()
    # P_b = -(b/2) X^2, so dY/db = -(b X^2 / 4) / Y
    assert (dY - (1 / Y) * parse_ratfun("-b*X^2/4", V)).is_zero()
    assert AlgElem.scalar(ctx, 3).diff("X").is_zero()


def test_derivative_matches_finite_difference():
    vs = ("s", "nu")
    ctx = SqrtContext([("u1", [parse_ratfun(t, vs) for t in ("s", "s - 1", "s - nu^2")])], ("s",), "nu")
    inv = 1 / AlgElem.radical(ctx, "u1")
    d = inv.diff("nu")

    def f(s, nu):
        return 1 / math.sqrt(s * (s - 1) * (s - nu * nu))

    for s, nu in [(Fraction(7, 2), Fraction(1, 3)), (Fraction(5, 4), Fraction(2, 5)), (Fraction(3), Fraction(-3, 7))]:
        h = 1e-5
        fd = (f(s, nu + h) - f(s, nu - h)) / (2 * h)
        exact = d.evaluate({"s": s, "nu": nu})
        assert abs(exact - fd) <= 1e-8 * abs(exact)


def test_non_invertible(quartic):
    ctx, P, Y = quartic
    with pytest.raises(NotInvertibleError):
        AlgElem(ctx).inverse()
    # a perfect-square radicand gives zero divisors: (X - W)(X + W) = 0 with W^2 = X^2
    sq = SqrtContext([("W", parse_ratfun("X^2", V))], ("X", "Z"), "b")
    zd = AlgElem(sq, {(0,): parse_ratfun("X", V), (1,): -1})
    with pytest.raises(NotInvertibleError):
        zd.inverse()
    unit = AlgElem(ctx, {(0,): 1, (1,): 1})
    assert (unit * unit.inverse() - AlgElem.scalar(ctx, 1)).is_zero()


def test_d_rel_of_fibre_independent(quartic):
    ctx, P, Y = quartic
    f = AlgElem.scalar(ctx, parse_ratfun("X^2 + b", V))
    assert d_rel(RelForm1(ctx, f, None)).is_zero()


def test_exact_forms_are_closed(quartic):
    ctx, P, Y = quartic
    h = Y * parse_ratfun("X/Z + b", V) + parse_ratfun("Z^2", V)
    assert d_rel(RelForm1(ctx, h.diff("X"), h.diff("Z"))).is_zero()


def test_sign_convention(quartic):
    ctx, P, Y = quartic
    beta = RelForm1(ctx, None, Y)
    assert (d_rel(beta).c - Y.diff("X")).is_zero()
    assert (d_rel(beta, sign=-1).c + Y.diff("X")).is_zero()


@pytest.fixture(scope="module")
def two_curves():
    vs = ("s", "t", "nu")
    ctx = SqrtContext(
        [
            ("u1", [parse_ratfun(t, vs) for t in ("s", "s - 1", "s - nu^2")]),
            ("u2", [parse_ratfun(t, vs) for t in ("t", "t - 1", "t - 4")]),
        ],
        ("s", "t"),
        "nu",
    )
    return ctx


def test_wedge(two_curves):
    ctx = two_curves
    ws = Form1(1 / AlgElem.radical(ctx, "u1"), "s")
    wt = Form1(1 / AlgElem.radical(ctx, "u2"), "t")
    w = wedge(ws, wt)
    prod = AlgElem.radical(ctx, "u1") * AlgElem.radical(ctx, "u2")
    assert (w.c - 1 / prod).is_zero()
    assert set(w.c.components) == {(1, 1)}
    assert (wedge(wt, ws).c + w.c).is_zero()
    assert wedge(ws, Form1(AlgElem(ctx), "t")).is_zero()
    with pytest.raises(ValueError):
        wedge(Form1(AlgElem.radical(ctx, "u2"), "s"), wt)


def test_reduction_idempotent(two_curves):
    ctx = two_curves
    u1 = AlgElem.radical(ctx, "u1")
    u2 = AlgElem.radical(ctx, "u2")
    e = (u1 * u2 + 3) * u1
    again = AlgElem(ctx, e.components)
    assert (again - e).is_zero()
    assert all(x in (0, 1) for eps in e.components for x in eps)


# -- properties ---------------------------------------------------------------

small = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def _elem(ctx, a, b, c):
    X = RatFun.var("X", V)
    Z = RatFun.var("Z", V)
    Y = AlgElem.radical(ctx, "Y")
    return Y * (X * float_free(a) + Z * float_free(b)) + X * Z * float_free(c) + 1


def float_free(f):
    return RatFun.const(f, V)


@settings(max_examples=60, deadline=None)
@given(small, small, small, small, small, small)
def test_leibniz_alg(quartic, a1, b1, c1, a2, b2, c2):
    ctx, P, Y = quartic
    p = _elem(ctx, a1, b1, c1)
    q = _elem(ctx, a2, b2, c2)
    for v in ("X", "b"):
        assert ((p * q).diff(v) - (p * q.diff(v) + p.diff(v) * q)).is_zero()


@settings(max_examples=60, deadline=None)
@given(small, small, small)
def test_mixed_partials_alg(quartic, a, b, c):
    ctx, P, Y = quartic
    p = _elem(ctx, a, b, c) / Y
    assert (p.diff("b").diff("Z") - p.diff("Z").diff("b")).is_zero()


pos = st.fractions(min_value=Fraction(1, 4), max_value=4, max_denominator=8)


@settings(max_examples=100, deadline=None)
@given(small, small, small, pos, pos, st.fractions(min_value=-1, max_value=1, max_denominator=4))
def test_numeric_consistency(quartic, a, b, c, x, z, bb):
    ctx, P, Y = quartic
    e = _elem(ctx, a, b, c) ** 2 / Y
    X, Z, B = float(x), float(z), float(bb)
    y = math.sqrt(X * (X * X + X * (Z + 1 / Z - B * B / 4) + 1))
    direct = (y * (X * float(a) + Z * float(b)) + X * Z * float(c) + 1) ** 2 / y
    got = e.evaluate({"X": x, "Z": z, "b": bb})
    assert abs(got - direct) <= 1e-10 * max(1.0, abs(direct))
