"""Linear differential operators with rational-function coefficients."""

from __future__ import annotations

from gmpy2 import mpq

from . import series as ps
from .algebra import MultiPoly, RatFun, as_bigrat, rat_substitute
from .forms import AlgElem, Form1, RelForm1, RelForm2

__all__ = [
    "DiffOperator",
    "FrobeniusSeries",
    "IndicialError",
    "apply_to_form",
    "apply_to_series",
    "change_variable",
    "frobenius_solutions",
    "theta_to_standard",
]


class IndicialError(ValueError):
    """The point is not regular singular, or its indicial roots are not all zero."""


def _stirling2(n, k):
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)


def _stirling1_signed(n, k):
    """Coefficients of the falling factorial x(x-1)...(x-n+1)."""
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return _stirling1_signed(n - 1, k - 1) - (n - 1) * _stirling1_signed(n - 1, k)


class DiffOperator:
    """``sum_k coeffs[k] * (d/d var)^k`` with coefficients in ``var`` only."""

    __slots__ = ("var", "coeffs")

    def __init__(self, var, coeffs):
        self.var = var
        cs = [RatFun.coerce(c, (var,)) for c in coeffs]
        while len(cs) > 1 and cs[-1].is_zero():
            cs.pop()
        if not cs or cs[-1].is_zero():
            raise ValueError("operator must have a nonzero leading coefficient")
        self.coeffs = tuple(cs)

    @classmethod
    def parse(cls, text, var, symbol="D"):
        """Read ``c0 + c1*D + c2*D^2 + ...`` (coefficients written left of D)."""
        from .grammar import parse_ratfun

        whole = parse_ratfun(text, (var, symbol))
        return cls(var, _split_by_symbol(whole, var, symbol))

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1]

    def monic(self):
        lead = self.leading
        return DiffOperator(self.var, [c / lead for c in self.coeffs])

    def scale(self, r):
        r = RatFun.coerce(r, (self.var,))
        return DiffOperator(self.var, [c * r for c in self.coeffs])

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return (
            self.var == other.var
            and self.order == other.order
            and all((a - b).is_zero() for a, b in zip(self.coeffs, other.coeffs))
        )

    __hash__ = None

    def equivalent(self, other):
        """Equal up to an overall rational factor (compared after making both monic)."""
        if self.var != other.var or self.order != other.order:
            return False
        return self.monic() == other.monic()

    def residuals(self, other):
        """Monic coefficient differences, useful for reporting a mismatch."""
        a, b = self.monic(), other.monic()
        return [(x - y) for x, y in zip(a.coeffs, b.coeffs)]

    def __call__(self, f):
        """Apply to a RatFun, AlgElem, Form1, RelForm2 or FrobeniusSeries."""
        if isinstance(f, FrobeniusSeries):
            return apply_to_series(self, f)
        if isinstance(f, RelForm2):
            return apply_to_form(self, f)
        if isinstance(f, Form1):
            return Form1(self._apply_elem(f.coeff), f.var)
        if isinstance(f, RelForm1):
            return RelForm1(f.ctx, self._apply_elem(f.f), self._apply_elem(f.g))
        if isinstance(f, AlgElem):
            return self._apply_elem(f)
        if isinstance(f, (RatFun, MultiPoly)):
            f = RatFun.coerce(f, f.variables)
            total = RatFun.const(0, f.variables)
            d = f
            for k, c in enumerate(self.coeffs):
                if k:
                    d = d.diff(self.var)
                total = total + c.with_vars(f.variables) * d
            return total
        raise TypeError(f"cannot apply an operator to {type(f).__name__}")

    def _apply_elem(self, h: AlgElem):
        ctx = h.ctx
        if self.var not in ctx.variables:
            raise ValueError(f"operator variable {self.var!r} is not in the context")
        total = AlgElem(ctx)
        d = h
        for k, c in enumerate(self.coeffs):
            if k:
                d = d.diff(self.var)
            if not c.is_zero():
                total = total + d * c.with_vars(ctx.variables)
        return total

    def __str__(self):
        parts = []
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            d = "" if k == 0 else ("*D" if k == 1 else f"*D^{k}")
            parts.append(f"({c}){d}")
        return " + ".join(parts)

    def __repr__(self):
        return f"DiffOperator({self.var!r}, {self})"


def _split_by_symbol(whole: RatFun, var, symbol):
    """Coefficients of powers of ``symbol`` in a rational function polynomial in it."""
    vs = whole.variables
    j = vs.index(symbol)
    for f, _ in whole.factors:
        if f.degree(symbol) > 0:
            raise ValueError(f"{symbol} may not appear in a denominator")
    den = RatFun.from_factors(MultiPoly.const(1, vs), whole.factors) if whole.factors else RatFun.const(1, vs)
    buckets = {}
    for exps, c in whole.num.items():
        k = exps[j]
        e = list(exps)
        e[j] = 0
        buckets.setdefault(k, {})[tuple(e)] = c
    order = max(buckets) if buckets else 0
    out = []
    for k in range(order + 1):
        p = MultiPoly(vs, buckets.get(k, {}))
        r = RatFun.coerce(p, vs) * den
        out.append(r.with_vars((var,)))
    return out


def theta_to_standard(theta_coeffs, var) -> DiffOperator:
    """Expand ``sum_j a_j * Theta^j`` (``Theta = var * d/dvar``) into ``sum c_k d^k``.

    Uses ``Theta^j = sum_k S(j, k) var^k d^k`` with Stirling numbers of the
    second kind.  ``theta_coeffs`` may also be a string in the operator
    grammar with ``T`` standing for Theta.
    """
    if isinstance(theta_coeffs, str):
        from .grammar import parse_ratfun

        theta_coeffs = _split_by_symbol(parse_ratfun(theta_coeffs, (var, "T")), var, "T")
    a = [RatFun.coerce(c, (var,)) for c in theta_coeffs]
    m = len(a) - 1
    x = RatFun.var(var, (var,))
    c = [RatFun.const(0, (var,)) for _ in range(m + 1)]
    for j, aj in enumerate(a):
        if aj.is_zero():
            continue
        for k in range(j + 1):
            s = _stirling2(j, k)
            if s:
                c[k] = c[k] + aj * x**k * s
    return DiffOperator(var, c)


def to_theta(op: DiffOperator):
    """Inverse of :func:`theta_to_standard`: coefficients of powers of Theta."""
    x = RatFun.var(op.var, (op.var,))
    m = op.order
    out = [RatFun.const(0, (op.var,)) for _ in range(m + 1)]
    for k, ck in enumerate(op.coeffs):
        if ck.is_zero():
            continue
        base = ck * x ** (-k)
        for j in range(k + 1):
            s = _stirling1_signed(k, j)
            if s:
                out[j] = out[j] + base * s
    return out


def change_variable(op: DiffOperator, phi, w) -> DiffOperator:
    """Rewrite ``op`` (in v) for the substitution ``v = phi(w)``.

    Coefficients are composed with ``phi`` and ``d/dv`` becomes
    ``(1/phi') d/dw``, iterated; the inverse map is never needed.
    """
    from .grammar import parse_ratfun

    if isinstance(phi, str):
        phi = parse_ratfun(phi, (w,))
    phi = RatFun.coerce(phi, (w,))
    dphi = phi.diff(w)
    if dphi.is_zero():
        raise ValueError("substitution has zero derivative")
    inv = dphi.inverse()
    zero = RatFun.const(0, (w,))
    # powers[k] = coefficients (in d/dw) of (d/dv)^k
    powers = [[RatFun.const(1, (w,))]]
    for _ in range(op.order):
        prev = powers[-1]
        nxt = [zero] * (len(prev) + 1)
        for j, a in enumerate(prev):
            nxt[j] = nxt[j] + a.diff(w) * inv
            nxt[j + 1] = nxt[j + 1] + a * inv
        powers.append(nxt)
    out = [zero] * (op.order + 1)
    for k, ck in enumerate(op.coeffs):
        if ck.is_zero():
            continue
        cw = rat_substitute(ck, {op.var: phi}, variables=(w,))
        for j, a in enumerate(powers[k]):
            out[j] = out[j] + cw * a
    return DiffOperator(w, out)


def apply_to_form(op: DiffOperator, omega: RelForm2) -> RelForm2:
    """``sum_k c_k(param) * d^k/dparam^k`` acting on the coefficient of a flat 2-form."""
    if op.var != omega.ctx.param_var:
        raise ValueError(f"operator variable {op.var!r} is not the family parameter {omega.ctx.param_var!r}")
    return RelForm2(omega.ctx, op._apply_elem(omega.c))


class FrobeniusSeries:
    """``sum_j S_j(v) * log(v)^j * v^rho``, each ``S_j`` truncated to ``order`` terms.

    ``blocks[j][n]`` is the coefficient of ``log(v)^j * v^(rho + n)``.
    """

    __slots__ = ("var", "exponent", "blocks")

    def __init__(self, var, exponent, blocks):
        self.var = var
        self.exponent = as_bigrat(exponent)
        blocks = [ps.ps(b, len(b)) for b in blocks]
        n = max((len(b) for b in blocks), default=0)
        if any(len(b) != n for b in blocks):
            raise ValueError("all log blocks must have the same truncation order")
        while len(blocks) > 1 and not any(blocks[-1]):
            blocks.pop()
        self.blocks = tuple(tuple(b) for b in blocks)

    @classmethod
    def power_series(cls, var, coeffs, exponent=0):
        return cls(var, exponent, [list(coeffs)])

    @property
    def order(self):
        return len(self.blocks[0]) if self.blocks else 0

    @property
    def log_degree(self):
        return len(self.blocks) - 1

    def is_zero(self):
        return not any(any(b) for b in self.blocks)

    def terms(self):
        """{(log power, exponent): coefficient} for the nonzero entries."""
        out = {}
        for j, b in enumerate(self.blocks):
            for n, c in enumerate(b):
                if c:
                    out[(j, self.exponent + n)] = c
        return out

    def evaluate(self, x, log_x=None):
        import cmath

        x = complex(x)
        lg = cmath.log(x) if log_x is None else log_x
        total = 0j
        for j, b in enumerate(self.blocks):
            s = 0j
            for c in reversed(b):
                s = s * x + float(c)
            total += s * lg**j
        return total * x ** float(self.exponent)

    def __str__(self):
        parts = []
        for j, b in enumerate(self.blocks):
            coeffs = ", ".join(str(c) for c in b[:6])
            parts.append(f"log^{j}: [{coeffs}{', ...' if len(b) > 6 else ''}]")
        return f"{self.var}^{self.exponent} * {{{'; '.join(parts)}}}"


def _laurent_of(r: RatFun, var, n):
    num = ps.poly_to_list(r.num, var)
    den = ps.poly_to_list(r.den, var)
    return ps.laurent(num, den, n)


def apply_to_series(op: DiffOperator, s: FrobeniusSeries) -> FrobeniusSeries:
    """Termwise exact application; the result is kept for exponents < rho + N - m."""
    if s.var != op.var:
        raise ValueError("series and operator use different variables")
    n_terms = s.order
    m = op.order
    if n_terms <= m:
        raise ValueError("series order must exceed the operator order")
    rho = s.exponent
    terms = {(j, rho + n): c for j, b in enumerate(s.blocks) for n, c in enumerate(b)}
    known_below = rho + n_terms
    result = {}
    cutoff = rho + n_terms - m
    low = None
    cur = terms
    for k, ck in enumerate(op.coeffs):
        if k:
            nxt = {}
            for (j, e), c in cur.items():
                if e:
                    key = (j, e - 1)
                    nxt[key] = nxt.get(key, 0) + c * e
                if j:
                    key = (j - 1, e - 1)
                    nxt[key] = nxt.get(key, 0) + c * j
            cur = nxt
        if ck.is_zero():
            continue
        val, lc = _laurent_of(ck, op.var, n_terms + m + 2)
        cutoff = min(cutoff, known_below - k + val)
        start = rho + val - k
        low = start if low is None else min(low, start)
        for (j, e), c in cur.items():
            if not c:
                continue
            for i, l in enumerate(lc):
                if l:
                    key = (j, e + val + i)
                    result[key] = result.get(key, 0) + c * l
    if low is None:
        low = rho
    length = int(cutoff - low)
    if length <= 0:
        return FrobeniusSeries(op.var, low, [[]])
    maxj = max((j for (j, _) in result), default=0)
    blocks = [[mpq(0)] * length for _ in range(maxj + 1)]
    for (j, e), c in result.items():
        idx = e - low
        if idx.denominator != 1:
            raise ValueError("mixed exponent classes in a single series")
        idx = int(idx)
        if 0 <= idx < length:
            blocks[j][idx] += c
    return FrobeniusSeries(op.var, low, blocks)


def _theta_blocks(op: DiffOperator):
    """Write ``op`` (times a rational factor) as ``v^i0 * sum_i v^i R_i(Theta)``.

    Returns the list of polynomials R_i (each a list of coefficients in Theta).
    """
    v = op.var
    theta = to_theta(op)
    lcm = {}
    for c in theta:
        for f, e in c.factors:
            if lcm.get(f, 0) < e:
                lcm[f] = e
    clear = RatFun.from_factors(MultiPoly.const(1, (v,)), list(lcm.items())).inverse() if lcm else RatFun.const(1, (v,))
    polys = []
    for c in theta:
        r = (c * clear).cancel()
        if not r.is_polynomial():
            raise IndicialError("could not clear denominators of the Theta form")
        polys.append(ps.poly_to_list(r.num, v))
    width = max(len(p) for p in polys)
    blocks = []
    for i in range(width):
        blocks.append([p[i] if i < len(p) else mpq(0) for p in polys])
    i0 = next(i for i, b in enumerate(blocks) if any(b))
    return [ps._trim(b) for b in blocks[i0:]]


def frobenius_solutions(op: DiffOperator, order: int):
    """Log-graded solutions at ``var = 0`` for a point of maximal unipotent monodromy.

    Solution ``k`` is the coefficient of ``eps^k`` in
    ``sum_n a_n(eps) v^(n + eps)`` with ``a_0 = 1``; its ``log^k`` block
    starts with ``1/k!`` and lower blocks start with 0.
    """
    m = op.order
    R = _theta_blocks(op)
    r0 = R[0]
    if len(r0) - 1 != m:
        raise IndicialError("zero is not a regular singular point of the operator")
    if any(r0[:m]):
        raise IndicialError("indicial roots are not all zero (unsupported)")

    def poly_at(p, n):
        # p(n + eps) as a truncated series in eps of length m
        out = [mpq(0)] * m
        for deg, c in enumerate(p):
            if not c:
                continue
            # (n + eps)^deg
            binom = 1
            for k in range(min(deg, m - 1) + 1):
                if k:
                    binom = binom * (deg - k + 1) // k
                out[k] += c * binom * mpq(n) ** (deg - k)
        return out

    a = [[mpq(1)] + [mpq(0)] * (m - 1)]
    for n in range(1, order):
        rhs = [mpq(0)] * m
        for i in range(1, len(R)):
            if n - i < 0:
                break
            term = ps.ps_mul(poly_at(R[i], n - i), a[n - i], m)
            rhs = [x - y for x, y in zip(rhs, term)]
        denom = poly_at(r0, n)
        if not denom[0]:
            raise IndicialError(f"resonance at n={n}")
        a.append(ps.ps_div(rhs, denom, m))
    sols = []
    for k in range(m):
        blocks = []
        lf = 1
        for j in range(k + 1):
            if j:
                lf *= j
            blocks.append([a[n][k - j] / lf for n in range(order)])
        sols.append(FrobeniusSeries(op.var, 0, blocks))
    return sols
