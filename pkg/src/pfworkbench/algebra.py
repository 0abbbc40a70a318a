"""Exact sparse multivariate polynomials and rational functions over Q.

Coefficients are ``gmpy2.mpq``.  Monomials are packed into a single Python
integer (one fixed-width bit field per variable, first variable in the most
significant field), so monomial multiplication is integer addition.

Rational functions keep their denominator as a product of primitive factors
with multiplicities.  There is no multivariate gcd: equal factors merge,
monomial factors cancel, everything else is left alone.  Two rational
functions are equal when their difference has a zero numerator, which after
bringing both sides over the common factor product is exactly the
cross-multiplication test.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Integral, Rational
from types import MappingProxyType

import numpy as np
from gmpy2 import mpq, mpz

__all__ = [
    "BigRat",
    "MultiPoly",
    "RatFun",
    "VariableMismatchError",
    "as_bigrat",
    "poly_arith",
    "poly_diff",
    "rat_arith",
    "rat_is_zero",
    "rat_substitute",
]

BigRat = type(mpq())

FIELD_BITS = 16
MAX_EXPONENT = (1 << (FIELD_BITS - 1)) - 1
_MASK = (1 << FIELD_BITS) - 1


class VariableMismatchError(ValueError):
    """Operands live over different variable lists."""


def as_bigrat(x) -> BigRat:
    """Coerce an int, Fraction, mpz or mpq (or a 'p/q' string) to mpq."""
    if isinstance(x, BigRat):
        return x
    if isinstance(x, (bool,)):
        raise TypeError("bool is not a coefficient")
    if isinstance(x, (Integral, type(mpz()))):
        return mpq(int(x))
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, Rational):
        return mpq(int(x.numerator), int(x.denominator))
    if isinstance(x, str):
        return mpq(x)
    raise TypeError(f"cannot use {type(x).__name__} as an exact coefficient")


def _is_scalar(x) -> bool:
    return isinstance(x, (Integral, Fraction, BigRat, type(mpz()))) and not isinstance(x, bool)


def _shift(nvars: int, i: int) -> int:
    return FIELD_BITS * (nvars - 1 - i)


class MultiPoly:
    """Sparse polynomial with exact rational coefficients.

    ``MultiPoly(("X", "Z"), {(3, 1): 2})`` is ``2*X^3*Z``.  Instances are
    immutable; every operation returns a new polynomial.
    """

    __slots__ = ("_vars", "_terms", "_hash", "_degs")

    def __init__(self, variables, terms=None):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variables in {variables}")
        packed = {}
        if terms:
            n = len(variables)
            for exps, c in terms.items():
                if len(exps) != n:
                    raise ValueError(f"exponent vector {exps} does not match {n} variables")
                c = as_bigrat(c)
                if not c:
                    continue
                key = 0
                for e in exps:
                    if e < 0 or e > MAX_EXPONENT:
                        raise OverflowError(f"exponent {e} outside 0..{MAX_EXPONENT}")
                    key = (key << FIELD_BITS) | int(e)
                packed[key] = packed.get(key, mpq(0)) + c
                if not packed[key]:
                    del packed[key]
        self._vars = variables
        self._terms = packed
        self._hash = None
        self._degs = None

    @classmethod
    def _raw(cls, variables, packed):
        obj = cls.__new__(cls)
        obj._vars = variables
        obj._terms = packed
        obj._hash = None
        obj._degs = None
        return obj

    # construction helpers

    @classmethod
    def zero(cls, variables):
        return cls._raw(tuple(variables), {})

    @classmethod
    def const(cls, c, variables):
        c = as_bigrat(c)
        return cls._raw(tuple(variables), {0: c} if c else {})

    @classmethod
    def var(cls, name, variables):
        variables = tuple(variables)
        try:
            i = variables.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; have {variables}") from None
        return cls._raw(variables, {1 << _shift(len(variables), i): mpq(1)})

    @classmethod
    def monomial(cls, exps, variables, coeff=1):
        return cls(variables, {tuple(exps): coeff})

    # basic properties

    @property
    def variables(self):
        return self._vars

    @property
    def terms(self):
        """Read-only mapping exponent tuple -> coefficient."""
        return MappingProxyType({self._unpack(k): c for k, c in self._terms.items()})

    def _unpack(self, key):
        n = len(self._vars)
        return tuple((key >> _shift(n, i)) & _MASK for i in range(n))

    def items(self):
        """(exponents, coefficient) pairs in canonical order, leading term first."""
        keyed = [(self._unpack(k), c) for k, c in self._terms.items()]
        keyed.sort(key=lambda t: (sum(t[0]), t[0]), reverse=True)
        return keyed

    def __len__(self):
        return len(self._terms)

    def is_zero(self):
        return not self._terms

    def is_constant(self):
        return not self._terms or (len(self._terms) == 1 and 0 in self._terms)

    def constant_value(self):
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self._terms.get(0, mpq(0))

    def degrees(self):
        """Per-variable maximal exponents."""
        if self._degs is None:
            n = len(self._vars)
            degs = [0] * n
            for k in self._terms:
                for i in range(n):
                    e = (k >> _shift(n, i)) & _MASK
                    if e > degs[i]:
                        degs[i] = e
            self._degs = tuple(degs)
        return self._degs

    def degree(self, v=None):
        """Degree in ``v``, or total degree when ``v`` is None (-1 for zero)."""
        if not self._terms:
            return -1
        if v is None:
            return max(sum(e) for e in (self._unpack(k) for k in self._terms))
        return self.degrees()[self._index(v)]

    def uses(self):
        """Variables that actually occur."""
        return tuple(v for v, d in zip(self._vars, self.degrees()) if d > 0)

    def leading(self):
        """(exponents, coefficient) of the leading term in grlex order."""
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        return self.items()[0]

    def _leading_key(self):
        n = len(self._vars)

        def tdeg(k):
            return sum((k >> _shift(n, i)) & _MASK for i in range(n))

        return max(self._terms, key=lambda k: (tdeg(k), k))

    def _index(self, v):
        try:
            return self._vars.index(v)
        except ValueError:
            raise KeyError(f"unknown variable {v!r}; have {self._vars}") from None

    # comparison

    def __eq__(self, other):
        if _is_scalar(other):
            return self.is_constant() and self.constant_value() == as_bigrat(other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self._vars == other._vars and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._vars, frozenset(self._terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other._vars != self._vars:
                raise VariableMismatchError(f"{self._vars} vs {other._vars}")
            return other
        if _is_scalar(other):
            return MultiPoly.const(other, self._vars)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if len(other._terms) > len(self._terms):
            big, small = other._terms, self._terms
        else:
            big, small = self._terms, other._terms
        out = dict(big)
        for k, c in small.items():
            s = out.get(k)
            if s is None:
                out[k] = c
            else:
                s = s + c
                if s:
                    out[k] = s
                else:
                    del out[k]
        return MultiPoly._raw(self._vars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self._vars, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def scale(self, c):
        c = as_bigrat(c)
        if not c:
            return MultiPoly.zero(self._vars)
        return MultiPoly._raw(self._vars, {k: v * c for k, v in self._terms.items()})

    def __mul__(self, other):
        if _is_scalar(other):
            return self.scale(other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not self._terms or not other._terms:
            return MultiPoly.zero(self._vars)
        for da, db in zip(self.degrees(), other.degrees()):
            if da + db > MAX_EXPONENT:
                raise OverflowError("exponent overflow in polynomial product")
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out = {}
        get = out.get
        for kb, cb in b.items():
            for ka, ca in a.items():
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
        return MultiPoly._raw(self._vars, {k: c for k, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, Integral) or n < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = MultiPoly.const(1, self._vars)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __truediv__(self, other):
        if _is_scalar(other):
            c = as_bigrat(other)
            if not c:
                raise ZeroDivisionError("division of polynomial by zero")
            return self.scale(1 / c)
        return NotImplemented

    def diff(self, v):
        """Partial derivative with respect to ``v``."""
        n = len(self._vars)
        sh = _shift(n, self._index(v))
        one = 1 << sh
        out = {}
        for k, c in self._terms.items():
            e = (k >> sh) & _MASK
            if e:
                out[k - one] = c * e
        return MultiPoly._raw(self._vars, out)

    def divexact(self, other):
        """Exact quotient ``self / other`` or None when ``other`` does not divide."""
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        if self.is_zero():
            return MultiPoly.zero(self._vars)
        n = len(self._vars)
        shifts = [_shift(n, i) for i in range(n)]

        def tkey(k):
            return (sum((k >> s) & _MASK for s in shifts), k)

        lk = other._leading_key()
        lc = other._terms[lk]
        lexps = [(lk >> s) & _MASK for s in shifts]
        rem = dict(self._terms)
        quot = {}
        ot = list(other._terms.items())
        while rem:
            k = max(rem, key=tkey)
            for s, e in zip(shifts, lexps):
                if ((k >> s) & _MASK) < e:
                    return None
            qk = k - lk
            qc = rem[k] / lc
            quot[qk] = qc
            for ok, oc in ot:
                kk = qk + ok
                v = rem.get(kk, 0) - qc * oc
                if v:
                    rem[kk] = v
                else:
                    rem.pop(kk, None)
        return MultiPoly._raw(self._vars, quot)

    # variable handling

    def with_vars(self, variables):
        """Re-express over ``variables``; every variable in use must be present."""
        variables = tuple(variables)
        if variables == self._vars:
            return self
        idx = []
        for v, d in zip(self._vars, self.degrees()):
            if v in variables:
                idx.append(variables.index(v))
            elif d > 0:
                raise VariableMismatchError(f"variable {v!r} is used but missing from {variables}")
            else:
                idx.append(None)
        n_new = len(variables)
        out = {}
        for exps, c in ((self._unpack(k), c) for k, c in self._terms.items()):
            key = 0
            for e, j in zip(exps, idx):
                if j is not None and e:
                    key += e << _shift(n_new, j)
            out[key] = c
        return MultiPoly._raw(variables, out)

    # content

    def integer_content(self):
        """(denominator lcm, numerator gcd) over all coefficients."""
        den = 1
        num = 0
        for c in self._terms.values():
            den = math.lcm(den, int(c.denominator))
            num = math.gcd(num, int(c.numerator))
        return den, num

    def monomial_content(self):
        """Exponent tuple of the largest monomial dividing every term."""
        if not self._terms:
            return (0,) * len(self._vars)
        n = len(self._vars)
        mins = [MAX_EXPONENT] * n
        for k in self._terms:
            for i in range(n):
                e = (k >> _shift(n, i)) & _MASK
                if e < mins[i]:
                    mins[i] = e
        return tuple(mins)

    def shift_down(self, exps):
        """Divide by the monomial with exponents ``exps`` (must divide every term)."""
        n = len(self._vars)
        off = 0
        for i, e in enumerate(exps):
            off += e << _shift(n, i)
        if not off:
            return self
        out = {}
        for k, c in self._terms.items():
            kk = k - off
            for i in range(n):
                if ((k >> _shift(n, i)) & _MASK) < exps[i]:
                    raise ValueError("monomial does not divide polynomial")
            out[kk] = c
        return MultiPoly._raw(self._vars, out)

    def primitive(self):
        """(c, p) with self == c*p, p integral with content 1 and positive leading coefficient."""
        if not self._terms:
            raise ValueError("zero polynomial has no primitive part")
        den, num = self.integer_content()
        c = mpq(num, den)
        if self._terms[self._leading_key()] < 0:
            c = -c
        return c, self.scale(1 / c)

    # evaluation and substitution

    def evaluate(self, point):
        """Exact value at a mapping variable -> rational (all used variables)."""
        vals = []
        for v, d in zip(self._vars, self.degrees()):
            if d > 0:
                if v not in point:
                    raise KeyError(f"no value for {v!r}")
                vals.append(point[v])
            else:
                vals.append(None)
        total = 0
        for exps, c in ((self._unpack(k), c) for k, c in self._terms.items()):
            t = c
            for e, x in zip(exps, vals):
                if e:
                    t = t * x**e
            total = total + t
        return total

    def partial_evaluate(self, point):
        """Substitute rational values for some variables, keeping the variable list."""
        n = len(self._vars)
        out = {}
        for k, c in self._terms.items():
            kk = k
            for i, v in enumerate(self._vars):
                if v in point:
                    sh = _shift(n, i)
                    e = (k >> sh) & _MASK
                    if e:
                        c = c * as_bigrat(point[v]) ** e
                        kk -= e << sh
            out[kk] = out.get(kk, 0) + c
        return MultiPoly._raw(self._vars, {k: c for k, c in out.items() if c})

    def numeric(self, dtype=complex):
        """Vectorised evaluator ``f(**arrays)`` using floating-point coefficients."""
        items = [(self._unpack(k), c) for k, c in self._terms.items()]
        exps = np.array([e for e, _ in items], dtype=np.int64).reshape(len(items), len(self._vars))
        coeffs = np.array([float(c) for _, c in items], dtype=float)
        names = self._vars
        degs = self.degrees()

        def f(**vals):
            powers = {}
            for v, d in zip(names, degs):
                if d:
                    x = np.asarray(vals[v], dtype=dtype)
                    pw = [np.ones_like(x), x]
                    for _ in range(2, d + 1):
                        pw.append(pw[-1] * x)
                    powers[v] = pw
            acc = 0
            for row, c in zip(exps, coeffs):
                t = c
                for v, e in zip(names, row):
                    if e:
                        t = t * powers[v][e]
                acc = acc + t
            return acc

        return f

    def compose(self, bindings):
        """Substitute polynomials for variables; result over the bindings' variable list."""
        target = None
        for p in bindings.values():
            if isinstance(p, MultiPoly):
                target = p._vars
                break
        if target is None:
            target = self._vars
        subs = []
        for v in self._vars:
            if v in bindings:
                p = bindings[v]
                subs.append(p if isinstance(p, MultiPoly) else MultiPoly.const(p, target))
            else:
                subs.append(MultiPoly.var(v, target))
        result = MultiPoly.zero(target)
        cache = {}
        for exps, c in ((self._unpack(k), c) for k, c in self._terms.items()):
            t = MultiPoly.const(c, target)
            for i, e in enumerate(exps):
                if e:
                    key = (i, e)
                    if key not in cache:
                        cache[key] = subs[i] ** e
                    t = t * cache[key]
            result = result + t
        return result

    # text

    def __str__(self):
        from .grammar import format_poly

        return format_poly(self)

    def __repr__(self):
        return f"MultiPoly({self._vars}, {str(self)!r})"


def poly_arith(a: MultiPoly, b: MultiPoly, op: str) -> MultiPoly:
    if a.variables != b.variables:
        raise VariableMismatchError(f"{a.variables} vs {b.variables}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown polynomial operation {op!r}")


def poly_diff(p: MultiPoly, v: str) -> MultiPoly:
    return p.diff(v)


def _factor_key(p: MultiPoly):
    return (p.degree(), tuple((e, c.numerator, c.denominator) for e, c in p.items()))


def _split_factor(p: MultiPoly):
    """Write a nonzero polynomial as c * prod(var^e) * q with q primitive.

    Returns (c, factors) where factors is a list of (poly, exponent) and the
    single-variable monomials appear as their own factors.
    """
    c, q = p.primitive()
    mono = q.monomial_content()
    factors = []
    if any(mono):
        q = q.shift_down(mono)
        for v, e in zip(q.variables, mono):
            if e:
                factors.append((MultiPoly.var(v, q.variables), e))
    if not q.is_constant():
        factors.append((q, 1))
    else:
        c = c * q.constant_value()
    return c, factors


class RatFun:
    """Exact rational function ``num / prod(f_i ** e_i)``.

    The denominator factors are primitive integer polynomials with positive
    leading coefficient; single variables are kept as separate factors so
    that monomial content cancels against the numerator automatically.
    """

    __slots__ = ("_num", "_factors", "_hash")

    def __init__(self, num, den=None):
        if _is_scalar(num):
            if not isinstance(den, MultiPoly):
                raise TypeError("scalar numerator needs a polynomial denominator to fix variables")
            num = MultiPoly.const(num, den.variables)
        if den is None:
            self._set(num, ())
            return
        if _is_scalar(den):
            den = MultiPoly.const(den, num.variables)
        if den.variables != num.variables:
            raise VariableMismatchError(f"{num.variables} vs {den.variables}")
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        c, factors = _split_factor(den)
        self._set(num.scale(1 / c), factors)

    def _set(self, num, factors):
        merged = {}
        for f, e in factors:
            merged[f] = merged.get(f, 0) + e
        if num.is_zero():
            merged = {}
        else:
            # cancel single-variable factors against the numerator's monomial content
            mono = num.monomial_content()
            drop = [0] * len(num.variables)
            for f, e in list(merged.items()):
                if len(f) == 1 and f.degree() == 1 and next(iter(f._terms.values())) == 1:
                    i = f.variables.index(f.uses()[0])
                    k = min(e, mono[i])
                    if k:
                        drop[i] = k
                        merged[f] = e - k
            if any(drop):
                num = num.shift_down(drop)
        self._num = num
        self._factors = tuple(sorted(((f, e) for f, e in merged.items() if e), key=lambda t: _factor_key(t[0])))
        self._hash = None

    @classmethod
    def _make(cls, num, factors):
        obj = cls.__new__(cls)
        obj._set(num, factors)
        return obj

    @classmethod
    def from_factors(cls, num, factors):
        """Build ``num / prod(f**e)`` from arbitrary nonzero polynomial factors."""
        scale = mpq(1)
        flat = []
        for f, e in factors:
            if e < 0:
                raise ValueError("factor exponents must be positive")
            c, parts = _split_factor(f)
            scale = scale * c**e
            flat.extend((g, k * e) for g, k in parts)
        return cls._make(num.scale(1 / scale), flat)

    @classmethod
    def const(cls, c, variables):
        return cls._make(MultiPoly.const(c, variables), ())

    @classmethod
    def var(cls, name, variables):
        return cls._make(MultiPoly.var(name, variables), ())

    @classmethod
    def coerce(cls, x, variables):
        if isinstance(x, RatFun):
            return x.with_vars(variables)
        if isinstance(x, MultiPoly):
            return cls._make(x.with_vars(variables), ())
        return cls.const(x, variables)

    # properties

    @property
    def variables(self):
        return self._num.variables

    @property
    def num(self):
        return self._num

    @property
    def factors(self):
        return self._factors

    @property
    def den(self):
        """Expanded denominator polynomial."""
        d = MultiPoly.const(1, self.variables)
        for f, e in self._factors:
            d = d * f**e
        return d

    def is_zero(self):
        return self._num.is_zero()

    def is_polynomial(self):
        return not self._factors

    def is_constant(self):
        return not self._factors and self._num.is_constant()

    def constant_value(self):
        if not self.is_constant():
            raise ValueError("rational function is not constant")
        return self._num.constant_value()

    def uses(self):
        used = set(self._num.uses())
        for f, _ in self._factors:
            used.update(f.uses())
        return tuple(v for v in self.variables if v in used)

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, RatFun):
            if other.variables != self.variables:
                raise VariableMismatchError(f"{self.variables} vs {other.variables}")
            return other
        if isinstance(other, MultiPoly):
            if other.variables != self.variables:
                raise VariableMismatchError(f"{self.variables} vs {other.variables}")
            return RatFun._make(other, ())
        if _is_scalar(other):
            return RatFun.const(other, self.variables)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        fa = dict(self._factors)
        fb = dict(other._factors)
        lcm = dict(fa)
        for f, e in fb.items():
            if lcm.get(f, 0) < e:
                lcm[f] = e
        na = self._num
        nb = other._num
        for f, e in lcm.items():
            ka = e - fa.get(f, 0)
            kb = e - fb.get(f, 0)
            if ka:
                na = na * f**ka
            if kb:
                nb = nb * f**kb
        return RatFun._make(na + nb, tuple(lcm.items()))

    __radd__ = __add__

    def __neg__(self):
        return RatFun._make(-self._num, self._factors)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return RatFun.const(0, self.variables)
        return RatFun._make(self._num * other._num, self._factors + other._factors)

    __rmul__ = __mul__

    def mul_cancel(self, other):
        """Product that cancels factors of ``other``'s numerator against our denominator.

        Cheap structural cancellation: ``other``'s numerator is split into
        content, monomials and primitive part, and each piece already present
        as a denominator factor is removed instead of multiplied in.
        """
        other = self._coerce(other)
        if self.is_zero() or other.is_zero():
            return RatFun.const(0, self.variables)
        fa = dict(self._factors)
        for f, e in other._factors:
            fa[f] = fa.get(f, 0) + e
        c, parts = _split_factor(other._num)
        num = self._num.scale(c)
        for g, k in parts:
            have = fa.get(g, 0)
            d = min(have, k)
            if d:
                fa[g] = have - d
            if k - d:
                num = num * g ** (k - d)
        return RatFun._make(num, tuple(fa.items()))

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero rational function")
        num = MultiPoly.const(1, self.variables)
        for f, e in self._factors:
            num = num * f**e
        c, parts = _split_factor(self._num)
        return RatFun._make(num.scale(1 / c), parts)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, Integral):
            raise ValueError("rational function powers must be integers")
        if n < 0:
            return self.inverse() ** (-n)
        return RatFun._make(self._num**n, tuple((f, e * n) for f, e in self._factors))

    def diff(self, v):
        """Partial derivative; each factor depending on ``v`` gains one power."""
        dnum = self._num.diff(v)
        moving = [(f, e, f.diff(v)) for f, e in self._factors]
        moving = [(f, e, df) for f, e, df in moving if not df.is_zero()]
        if not moving:
            return RatFun._make(dnum, self._factors)
        prod_all = MultiPoly.const(1, self.variables)
        for f, _, _ in moving:
            prod_all = prod_all * f
        new_num = dnum * prod_all
        for i, (f, e, df) in enumerate(moving):
            others = MultiPoly.const(e, self.variables)
            for j, (g, _, _) in enumerate(moving):
                if j != i:
                    others = others * g
            new_num = new_num - self._num * df * others
        bumped = [(f, e + 1) for f, e, _ in moving]
        still = [(f, e) for f, e in self._factors if f.diff(v).is_zero()]
        return RatFun._make(new_num, tuple(still + bumped))

    def cancel(self):
        """Divide out denominator factors that divide the numerator exactly."""
        num = self._num
        kept = []
        for f, e in self._factors:
            while e:
                q = num.divexact(f)
                if q is None:
                    break
                num = q
                e -= 1
            if e:
                kept.append((f, e))
        return RatFun._make(num, tuple(kept))

    def reduced(self):
        """Fully reduced form when at most one variable is in use (univariate gcd)."""
        used = self.uses()
        if len(used) > 1 or self.is_polynomial():
            return self.cancel()
        v = used[0]
        num = self._num
        den = self.den
        g = _univariate_gcd(num, den, v)
        if not g.is_constant():
            num = num.divexact(g)
            den = den.divexact(g)
        return RatFun(num, den)

    # comparison

    def __eq__(self, other):
        try:
            other = self._coerce(other)
        except VariableMismatchError:
            return False
        if other is None:
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("RatFun equality is semantic; use a canonical string as a key instead")

    def same_form(self, other):
        """Structural identity of the stored representation."""
        return self._num == other._num and self._factors == other._factors

    # variables and evaluation

    def with_vars(self, variables):
        variables = tuple(variables)
        if variables == self.variables:
            return self
        return RatFun._make(self._num.with_vars(variables), tuple((f.with_vars(variables), e) for f, e in self._factors))

    def evaluate(self, point):
        d = 1
        for f, e in self._factors:
            d = d * f.evaluate(point) ** e
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at evaluation point")
        return self._num.evaluate(point) / d

    def numeric(self, dtype=complex):
        fn = self._num.numeric(dtype)
        fs = [(f.numeric(dtype), e) for f, e in self._factors]

        def f(**vals):
            out = fn(**vals)
            for g, e in fs:
                out = out / g(**vals) ** e
            return out

        return f

    def substitute(self, bindings):
        return rat_substitute(self, bindings)

    def even_in(self, v):
        """True when every stored polynomial has only even powers of ``v``."""
        i = self.variables.index(v)
        for p in [self._num] + [f for f, _ in self._factors]:
            if any(exps[i] % 2 for exps in p.terms):
                return False
        return True

    # text

    def __str__(self):
        from .grammar import format_ratfun

        return format_ratfun(self)

    def __repr__(self):
        return f"RatFun({self.variables}, {str(self)!r})"


def _univariate_gcd(a: MultiPoly, b: MultiPoly, v: str) -> MultiPoly:
    """Monic gcd of two polynomials that only involve ``v``."""
    from .series import poly_to_list, list_to_poly, upoly_gcd

    ga = poly_to_list(a, v)
    gb = poly_to_list(b, v)
    g = upoly_gcd(ga, gb)
    return list_to_poly(g, v, a.variables)


def rat_arith(a: RatFun, b: RatFun, op: str) -> RatFun:
    if a.variables != b.variables:
        raise VariableMismatchError(f"{a.variables} vs {b.variables}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown rational-function operation {op!r}")


def rat_is_zero(a) -> bool:
    if isinstance(a, MultiPoly):
        return a.is_zero()
    return a.is_zero()


def rat_substitute(a: RatFun, bindings, variables=None) -> RatFun:
    """Compose ``a`` with ``v -> bindings[v]``.

    Bindings are RatFun, MultiPoly or exact scalars.  The result lives over
    ``variables`` (default: the variable list of the first RatFun/MultiPoly
    binding, else ``a``'s own list).  Unbound variables must exist in the
    target list.
    """
    if variables is None:
        for val in bindings.values():
            if isinstance(val, (RatFun, MultiPoly)):
                variables = val.variables
                break
        else:
            variables = a.variables
    variables = tuple(variables)
    subs = {}
    for v in a.variables:
        if v in bindings:
            subs[v] = RatFun.coerce(bindings[v], variables)
        elif v in a.uses():
            if v not in variables:
                raise VariableMismatchError(f"unbound variable {v!r} missing from {variables}")
            subs[v] = RatFun.var(v, variables)

    def sub_poly(p):
        total = RatFun.const(0, variables)
        powers = {}
        for exps, c in p.items():
            t = RatFun.const(c, variables)
            for v, e in zip(p.variables, exps):
                if e:
                    key = (v, e)
                    if key not in powers:
                        powers[key] = subs[v] ** e
                    t = t * powers[key]
            total = total + t
        return total

    result = sub_poly(a.num)
    for f, e in a.factors:
        fv = sub_poly(f)
        if fv.is_zero():
            raise ZeroDivisionError("denominator vanishes identically after substitution")
        result = result / fv**e
    return result
