"""Canonical text form for polynomials, rational functions and operators.

Grammar (whitespace ignored)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := ("-" | "+") factor | atom ("^" exponent)?
    atom   := INTEGER | NAME | "(" expr ")"
    exponent := INTEGER | "(" ("-")? INTEGER ")" | "-" INTEGER

Multiplication must be explicit.  Printing clears denominators so that
rational functions appear as ``(integer poly)/(integer factors)``; the
parser keeps products of powers as denominator factors, so
``parse(format(r))`` reproduces the same stored form.
"""

from __future__ import annotations

import math
import re

from gmpy2 import mpq

from .algebra import MultiPoly, RatFun

__all__ = ["ParseError", "parse_ratfun", "parse_poly", "format_poly", "format_ratfun"]


class ParseError(ValueError):
    """Syntax or name error, with 1-based line and column."""

    def __init__(self, msg, text="", pos=0, line=1, col_offset=0):
        self.line = line
        self.column = pos + 1 + col_offset
        self.text = text
        super().__init__(f"line {self.line}, column {self.column}: {msg}")


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


def _tokenize(text, line, col_offset):
    pos = 0
    toks = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            stripped = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[stripped]!r}", text, stripped, line, col_offset)
        start = m.start(m.lastindex)
        if m.group(1):
            toks.append(("int", int(m.group(1)), start))
        elif m.group(2):
            toks.append(("name", m.group(2), start))
        else:
            op = m.group(3)
            toks.append(("op", "^" if op == "**" else op, start))
        pos = m.end()
    toks.append(("end", None, len(text)))
    return toks


class _Value:
    """A parsed value plus, when it is a pure product of powers, its factors."""

    __slots__ = ("rf", "coef", "factors")

    def __init__(self, rf, coef=None, factors=None):
        self.rf = rf
        self.coef = coef
        self.factors = factors


class _Parser:
    def __init__(self, text, variables, line=1, col_offset=0):
        self.text = text
        self.vars = tuple(variables)
        self.line = line
        self.col_offset = col_offset
        self.toks = _tokenize(text, line, col_offset)
        self.i = 0

    def error(self, msg, tok=None):
        tok = tok or self.toks[self.i]
        raise ParseError(msg, self.text, tok[2], self.line, self.col_offset)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t[0] != "op" or t[1] != op:
            self.i -= 1
            self.error(f"expected {op!r}")
        return t

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression")
        v = self.expr()
        t = self.peek()
        if t[0] != "end":
            if t[0] in ("name", "int") or (t[0] == "op" and t[1] == "("):
                self.error("implicit multiplication is not allowed; use '*'")
            self.error(f"unexpected token {t[1]!r}")
        return v.rf

    def expr(self):
        v = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            w = self.term()
            v = _Value(v.rf + w.rf if op == "+" else v.rf - w.rf)
        return v

    def term(self):
        v = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            tok = self.peek()
            w = self.factor()
            if op == "*":
                if v.factors is not None and w.factors is not None:
                    v = _Value(v.rf * w.rf, v.coef * w.coef, v.factors + w.factors)
                else:
                    v = _Value(v.rf * w.rf)
            else:
                if w.rf.is_zero():
                    self.error("division by zero", tok)
                if w.factors is not None and w.coef:
                    den = RatFun.from_factors(MultiPoly.const(1 / w.coef, self.vars), w.factors)
                    v = _Value(v.rf * den)
                else:
                    v = _Value(v.rf / w.rf)
        return v

    def factor(self):
        t = self.peek()
        if t[0] == "op" and t[1] in "+-":
            self.take()
            v = self.factor()
            if t[1] == "-":
                return _Value(-v.rf, None if v.coef is None else -v.coef, v.factors)
            return v
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            n = self.exponent()
            if n < 0:
                if base.rf.is_zero():
                    self.error("zero to a negative power")
                return _Value(base.rf**n)
            coef = None if base.coef is None else base.coef**n
            facs = None if base.factors is None else [(f, e * n) for f, e in base.factors]
            return _Value(base.rf**n, coef, facs)
        return base

    def exponent(self):
        t = self.take()
        if t[0] == "int":
            return t[1]
        if t[0] == "op" and t[1] == "-":
            t2 = self.take()
            if t2[0] != "int":
                self.error("expected integer exponent", t2)
            return -t2[1]
        if t[0] == "op" and t[1] == "(":
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                sign = -1
            t2 = self.take()
            if t2[0] != "int":
                self.error("expected integer exponent", t2)
            self.expect(")")
            return sign * t2[1]
        self.i -= 1
        self.error("expected integer exponent")

    def atom(self):
        t = self.take()
        if t[0] == "int":
            return _Value(RatFun.const(t[1], self.vars), mpq(t[1]), [])
        if t[0] == "name":
            if t[1] not in self.vars:
                self.i -= 1
                self.error(f"unknown symbol {t[1]!r} (variables: {', '.join(self.vars)})")
            return _Value(RatFun.var(t[1], self.vars), mpq(1), [(MultiPoly.var(t[1], self.vars), 1)])
        if t[0] == "op" and t[1] == "(":
            v = self.expr()
            self.expect(")")
            if v.factors is not None:
                return v
            rf = v.rf
            if rf.is_polynomial() and not rf.is_zero():
                if rf.num.is_constant():
                    return _Value(rf, rf.num.constant_value(), [])
                return _Value(rf, mpq(1), [(rf.num, 1)])
            return _Value(rf)
        self.i -= 1
        self.error("expected a number, a variable or '('")


def parse_ratfun(text, variables, line=1, col_offset=0) -> RatFun:
    return _Parser(text, variables, line, col_offset).parse()


def parse_poly(text, variables, line=1, col_offset=0) -> MultiPoly:
    rf = parse_ratfun(text, variables, line, col_offset)
    if not rf.is_polynomial():
        raise ParseError("expected a polynomial", text, 0, line, col_offset)
    return rf.num


def _format_monomial(exps, variables):
    parts = []
    for v, e in zip(variables, exps):
        if e == 1:
            parts.append(v)
        elif e:
            parts.append(f"{v}^{e}")
    return "*".join(parts)


def _format_coeff(c):
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def format_poly(p: MultiPoly) -> str:
    """Canonical form: leading (grlex) term first, explicit '*' and '^'."""
    if p.is_zero():
        return "0"
    out = []
    for exps, c in p.items():
        mono = _format_monomial(exps, p.variables)
        neg = c < 0
        a = -c if neg else c
        if mono and a == 1:
            body = mono
        elif mono:
            body = f"{_format_coeff(a)}*{mono}"
        else:
            body = _format_coeff(a)
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def _wrap(s):
    return s if re.fullmatch(r"-?[A-Za-z_0-9]+(\^\d+)?", s) and not s.startswith("-") else f"({s})"


def format_ratfun(r: RatFun) -> str:
    """``(num)/(den)`` with integer coefficients and factored denominator."""
    num = r.num
    if r.is_polynomial():
        return format_poly(num)
    scale = 1
    for c in num.terms.values():
        scale = math.lcm(scale, int(c.denominator))
    num = num.scale(scale)
    g = 0
    for c in num.terms.values():
        g = math.gcd(g, int(c.numerator))
    d = math.gcd(g, scale)
    num = num.scale(mpq(1, d))
    const = mpq(scale, d)
    den_parts = []
    if const != 1:
        den_parts.append(_format_coeff(const))
    for f, e in r.factors:
        s = _wrap(format_poly(f))
        den_parts.append(s if e == 1 else f"{s}^{e}")
    return f"{_wrap(format_poly(num))}/{_wrap('*'.join(den_parts)) if len(den_parts) > 1 else den_parts[0]}"
