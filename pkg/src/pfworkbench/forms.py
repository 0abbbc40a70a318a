"""Square-root extensions and relative differential forms.

An :class:`AlgElem` is ``sum_eps r_eps * prod_i Y_i**eps_i`` with
``eps in {0,1}^k`` and ``Y_i**2 = P_i``.  Radicands are stored as lists of
rational-function factors so that the logarithmic derivative
``P_v / (2 P)`` stays a short sum of small fractions.

Forms live on the fibres: ``RelForm1`` is ``f dv1 + g dv2`` and
``RelForm2`` is ``c dv1^dv2``; the fibre coordinates are flat, so the
parameter derivative acts on coefficients only.
"""

from __future__ import annotations

import cmath
import math

from .algebra import RatFun, VariableMismatchError, as_bigrat

__all__ = [
    "AlgElem",
    "Form1",
    "NotInvertibleError",
    "RelForm1",
    "RelForm2",
    "SqrtContext",
    "d_rel",
    "d_rel0",
    "wedge",
]


class NotInvertibleError(ZeroDivisionError):
    """Divisor has zero norm, or its shape is outside the supported inverses."""


class SqrtContext:
    """Independent square roots ``name_i = sqrt(prod(factors_i))``.

    ``radicals`` is a sequence of ``(name, factors)`` where ``factors`` is a
    RatFun or a list of RatFuns whose product is the radicand.  All rational
    functions are over ``fiber_vars + (param_var,)`` unless ``variables`` is
    given.
    """

    def __init__(self, radicals, fiber_vars, param_var, variables=None):
        self.fiber_vars = tuple(fiber_vars)
        self.param_var = param_var
        self.variables = tuple(variables) if variables else self.fiber_vars + (param_var,)
        for v in self.fiber_vars + (param_var,):
            if v not in self.variables:
                raise ValueError(f"{v!r} missing from context variables {self.variables}")
        names = []
        facs = []
        for name, factors in radicals:
            if name in self.variables:
                raise ValueError(f"radical name {name!r} clashes with a variable")
            if isinstance(factors, RatFun):
                factors = [factors]
            factors = tuple(RatFun.coerce(f, self.variables) for f in factors)
            if any(f.is_zero() for f in factors):
                raise ValueError(f"radicand of {name!r} is zero")
            names.append(name)
            facs.append(factors)
        if len(set(names)) != len(names):
            raise ValueError("radical names must be distinct")
        self.names = tuple(names)
        self._factors = tuple(facs)
        self._logd = {}
        self._inv = {}
        self._rad = {}

    def __len__(self):
        return len(self.names)

    def radicand(self, i):
        if i not in self._rad:
            p = RatFun.const(1, self.variables)
            for f in self._factors[i]:
                p = p * f
            self._rad[i] = p
        return self._rad[i]

    def radicand_factors(self, i):
        return self._factors[i]

    def inv_radicand(self, i):
        if i not in self._inv:
            p = RatFun.const(1, self.variables)
            for f in self._factors[i]:
                p = p * f.inverse()
            self._inv[i] = p
        return self._inv[i]

    def half_log_derivative(self, i, v):
        """``(dP_i/dv) / (2 P_i)`` as a sum over the radicand factors."""
        key = (i, v)
        if key not in self._logd:
            s = RatFun.const(0, self.variables)
            for f in self._factors[i]:
                df = f.diff(v)
                if not df.is_zero():
                    s = s + df / f
            self._logd[key] = s * as_bigrat("1/2")
        return self._logd[key]

    def index(self, name):
        return self.names.index(name)

    def same_as(self, other):
        if self is other:
            return True
        if self.variables != other.variables or self.names != other.names:
            return False
        return all((self.radicand(i) - other.radicand(i)).is_zero() for i in range(len(self.names)))

    def __str__(self):
        return "; ".join(f"{n} = sqrt({self.radicand(i)})" for i, n in enumerate(self.names))

    def __repr__(self):
        return f"SqrtContext({self})"


def _xor(a, b):
    return tuple(x ^ y for x, y in zip(a, b))


class AlgElem:
    """Element ``sum r_eps * Y^eps`` of a square-root extension; immutable."""

    __slots__ = ("ctx", "_comp")

    def __init__(self, ctx: SqrtContext, components=None):
        self.ctx = ctx
        comp = {}
        k = len(ctx)
        for eps, r in (components or {}).items():
            eps = tuple(eps)
            if len(eps) != k or any(e not in (0, 1) for e in eps):
                raise ValueError(f"radical multi-index {eps} must be in {{0,1}}^{k}")
            r = RatFun.coerce(r, ctx.variables)
            if not r.is_zero():
                comp[eps] = comp[eps] + r if eps in comp else r
                if comp[eps].is_zero():
                    del comp[eps]
        self._comp = comp

    @classmethod
    def _raw(cls, ctx, comp):
        obj = cls.__new__(cls)
        obj.ctx = ctx
        obj._comp = comp
        return obj

    @classmethod
    def scalar(cls, ctx, r):
        return cls(ctx, {(0,) * len(ctx): r})

    @classmethod
    def radical(cls, ctx, name):
        eps = [0] * len(ctx)
        eps[ctx.index(name) if isinstance(name, str) else name] = 1
        return cls(ctx, {tuple(eps): 1})

    @classmethod
    def inv_radical(cls, ctx, name):
        """``1/Y_i`` stored as ``(1/P_i) * Y_i``."""
        i = ctx.index(name) if isinstance(name, str) else name
        eps = [0] * len(ctx)
        eps[i] = 1
        return cls(ctx, {tuple(eps): ctx.inv_radicand(i)})

    @property
    def components(self):
        return dict(self._comp)

    def component(self, eps):
        return self._comp.get(tuple(eps), RatFun.const(0, self.ctx.variables))

    def is_zero(self):
        return all(r.is_zero() for r in self._comp.values())

    def _check(self, other):
        if isinstance(other, AlgElem):
            if other.ctx is not self.ctx and not self.ctx.same_as(other.ctx):
                raise VariableMismatchError("elements belong to different square-root contexts")
            return other
        return AlgElem.scalar(self.ctx, RatFun.coerce(other, self.ctx.variables))

    def __add__(self, other):
        other = self._check(other)
        comp = dict(self._comp)
        for eps, r in other._comp.items():
            if eps in comp:
                s = comp[eps] + r
                if s.is_zero():
                    del comp[eps]
                else:
                    comp[eps] = s
            else:
                comp[eps] = r
        return AlgElem._raw(self.ctx, comp)

    __radd__ = __add__

    def __neg__(self):
        return AlgElem._raw(self.ctx, {e: -r for e, r in self._comp.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, AlgElem):
            r = RatFun.coerce(other, self.ctx.variables)
            if r.is_zero():
                return AlgElem._raw(self.ctx, {})
            return AlgElem._raw(self.ctx, {e: c * r for e, c in self._comp.items()})
        other = self._check(other)
        comp = {}
        for ea, ra in self._comp.items():
            for eb, rb in other._comp.items():
                r = ra.mul_cancel(rb)
                for i, (x, y) in enumerate(zip(ea, eb)):
                    if x and y:
                        for f in self.ctx.radicand_factors(i):
                            r = r.mul_cancel(f)
                eps = _xor(ea, eb)
                comp[eps] = comp[eps] + r if eps in comp else r
        return AlgElem._raw(self.ctx, {e: r for e, r in comp.items() if not r.is_zero()})

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise NotInvertibleError("inverse of zero")
        if len(self._comp) == 1:
            (eps, r), = self._comp.items()
            out = r.inverse()
            for i, e in enumerate(eps):
                if e:
                    out = out * self.ctx.inv_radicand(i)
            return AlgElem._raw(self.ctx, {eps: out})
        if len(self.ctx) == 1:
            r0 = self.component((0,))
            r1 = self.component((1,))
            norm = r0 * r0 - r1 * r1 * self.ctx.radicand(0)
            if norm.is_zero():
                raise NotInvertibleError("norm r0^2 - r1^2 P vanishes")
            inv = norm.inverse()
            return AlgElem(self.ctx, {(0,): r0 * inv, (1,): -r1 * inv})
        raise NotInvertibleError("only single-radical elements and pure radical monomials can be inverted")

    def __truediv__(self, other):
        if isinstance(other, AlgElem):
            return self * self._check(other).inverse()
        return self * RatFun.coerce(other, self.ctx.variables).inverse()

    def __rtruediv__(self, other):
        return self._check(other) * self.inverse()

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = AlgElem.scalar(self.ctx, 1)
        for _ in range(n):
            out = out * self
        return out

    def diff(self, v):
        """Partial derivative; ``dY_i/dv = (dP_i/dv) / (2 P_i) * Y_i``."""
        if v not in self.ctx.variables:
            raise KeyError(f"unknown variable {v!r}")
        comp = {}
        for eps, r in self._comp.items():
            d = r.diff(v)
            for i, e in enumerate(eps):
                if e:
                    ld = self.ctx.half_log_derivative(i, v)
                    if not ld.is_zero():
                        d = d + r * ld
            if not d.is_zero():
                comp[eps] = d
        return AlgElem._raw(self.ctx, comp)

    def map_components(self, fn):
        return AlgElem(self.ctx, {e: fn(r) for e, r in self._comp.items()})

    def depends_on(self):
        """Variables the element genuinely involves (components and radicands used)."""
        used = set()
        for eps, r in self._comp.items():
            used.update(r.uses())
            for i, e in enumerate(eps):
                if e:
                    used.update(self.ctx.radicand(i).uses())
        return used

    def lift(self, ctx: SqrtContext):
        """Re-express in a larger context holding the same radicals by name."""
        comp = {}
        for eps, r in self._comp.items():
            new = [0] * len(ctx)
            for i, e in enumerate(eps):
                if e:
                    j = ctx.index(self.ctx.names[i])
                    if not (ctx.radicand(j) - self.ctx.radicand(i).with_vars(ctx.variables)).is_zero():
                        raise VariableMismatchError(f"radical {self.ctx.names[i]!r} has a different radicand")
                    new[j] = 1
            comp[tuple(new)] = r.with_vars(ctx.variables)
        return AlgElem(ctx, comp)

    def evaluate(self, point):
        """Numeric value; each radical is the principal (positive for P > 0) root."""
        total = 0
        roots = {}
        for eps, r in self._comp.items():
            t = complex(float(r.evaluate(point)))
            for i, e in enumerate(eps):
                if e:
                    if i not in roots:
                        p = float(self.ctx.radicand(i).evaluate(point))
                        roots[i] = math.sqrt(p) if p >= 0 else cmath.sqrt(p)
                    t *= roots[i]
            total += t
        return total.real if isinstance(total, complex) and total.imag == 0 else total

    def __str__(self):
        if not self._comp:
            return "0"
        parts = []
        for eps in sorted(self._comp):
            mono = "*".join(n for n, e in zip(self.ctx.names, eps) if e)
            r = str(self._comp[eps])
            parts.append(f"({r})*{mono}" if mono else f"({r})")
        return " + ".join(parts)

    def __repr__(self):
        return f"AlgElem({self}; {self.ctx})"


class Form1:
    """``coeff * d(var)``: a 1-form in a single fibre coordinate."""

    __slots__ = ("coeff", "var")

    def __init__(self, coeff: AlgElem, var: str):
        if var not in coeff.ctx.fiber_vars:
            raise ValueError(f"{var!r} is not a fibre variable")
        self.coeff = coeff
        self.var = var

    @property
    def ctx(self):
        return self.coeff.ctx

    def diff(self, v):
        return Form1(self.coeff.diff(v), self.var)

    def __mul__(self, other):
        return Form1(self.coeff * other, self.var)

    __rmul__ = __mul__

    def __add__(self, other):
        if other.var != self.var:
            raise ValueError("adding 1-forms in different coordinates; use RelForm1")
        return Form1(self.coeff + other.coeff, self.var)

    def __neg__(self):
        return Form1(-self.coeff, self.var)

    def __sub__(self, other):
        return self + (-other)

    def lift(self, ctx):
        return Form1(self.coeff.lift(ctx), self.var)

    def is_zero(self):
        return self.coeff.is_zero()

    def __str__(self):
        return f"[{self.coeff}] d{self.var}"


class RelForm1:
    """``f dv1 + g dv2`` over a context with two fibre variables."""

    __slots__ = ("ctx", "f", "g")

    def __init__(self, ctx: SqrtContext, f: AlgElem = None, g: AlgElem = None):
        if len(ctx.fiber_vars) != 2:
            raise ValueError("RelForm1 needs two fibre variables")
        self.ctx = ctx
        self.f = f if f is not None else AlgElem(ctx)
        self.g = g if g is not None else AlgElem(ctx)

    @classmethod
    def from_pieces(cls, ctx, pieces):
        out = cls(ctx)
        for p in pieces:
            out = out + p
        return out

    def __add__(self, other):
        if isinstance(other, Form1):
            if other.var == self.ctx.fiber_vars[0]:
                return RelForm1(self.ctx, self.f + other.coeff, self.g)
            return RelForm1(self.ctx, self.f, self.g + other.coeff)
        return RelForm1(self.ctx, self.f + other.f, self.g + other.g)

    def __neg__(self):
        return RelForm1(self.ctx, -self.f, -self.g)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return RelForm1(self.ctx, self.f * scalar, self.g * scalar)

    __rmul__ = __mul__

    def diff(self, v):
        return RelForm1(self.ctx, self.f.diff(v), self.g.diff(v))

    def is_zero(self):
        return self.f.is_zero() and self.g.is_zero()

    def __str__(self):
        v1, v2 = self.ctx.fiber_vars
        return f"[{self.f}] d{v1} + [{self.g}] d{v2}"


class RelForm2:
    """``c dv1^dv2``."""

    __slots__ = ("ctx", "c")

    def __init__(self, ctx: SqrtContext, c: AlgElem):
        if len(ctx.fiber_vars) != 2:
            raise ValueError("RelForm2 needs two fibre variables")
        self.ctx = ctx
        self.c = c

    def __add__(self, other):
        return RelForm2(self.ctx, self.c + other.c)

    def __neg__(self):
        return RelForm2(self.ctx, -self.c)

    def __sub__(self, other):
        return RelForm2(self.ctx, self.c - other.c)

    def __mul__(self, scalar):
        return RelForm2(self.ctx, self.c * scalar)

    __rmul__ = __mul__

    def diff(self, v):
        return RelForm2(self.ctx, self.c.diff(v))

    def is_zero(self):
        return self.c.is_zero()

    def __str__(self):
        v1, v2 = self.ctx.fiber_vars
        return f"[{self.c}] d{v1}^d{v2}"


def d_rel(beta: RelForm1, sign: int = 1) -> RelForm2:
    """Fibre exterior derivative ``f dv1 + g dv2 -> (dg/dv1 - df/dv2) dv1^dv2``.

    ``sign=-1`` gives the opposite orientation convention.
    """
    v1, v2 = beta.ctx.fiber_vars
    c = beta.g.diff(v1) - beta.f.diff(v2)
    return RelForm2(beta.ctx, c if sign == 1 else -c)


def d_rel0(h: AlgElem, var: str = None) -> Form1:
    """Fibre differential of a 0-form on a curve (one fibre variable)."""
    if var is None:
        if len(h.ctx.fiber_vars) != 1:
            raise ValueError("name the fibre variable for multi-dimensional fibres")
        var = h.ctx.fiber_vars[0]
    return Form1(h.diff(var), var)


def wedge(a: Form1, b: Form1, ctx: SqrtContext = None) -> RelForm2:
    """Product of 1-forms in the two different fibre coordinates.

    Each factor may only depend on its own fibre coordinate and the
    parameter; ``ctx`` (default: ``a``'s) must carry both coordinates.
    """
    ctx = ctx or a.ctx
    if a.coeff.ctx is not ctx:
        a = a.lift(ctx)
    if b.coeff.ctx is not ctx:
        b = b.lift(ctx)
    for form in (a, b):
        allowed = {form.var, ctx.param_var}
        extra = form.coeff.depends_on() - allowed
        if extra:
            raise ValueError(f"factor in d{form.var} also depends on {sorted(extra)}")
    v1, v2 = ctx.fiber_vars
    if (a.var, b.var) == (v1, v2):
        return RelForm2(ctx, a.coeff * b.coeff)
    if (a.var, b.var) == (v2, v1):
        return RelForm2(ctx, -(a.coeff * b.coeff))
    raise ValueError("wedge of two 1-forms in the same coordinate vanishes; not a valid factor pair")

