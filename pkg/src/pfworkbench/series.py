"""Univariate exact helpers: dense polynomials and truncated power series over Q.

Polynomials and series are plain lists of ``mpq``, index = power.
"""

from __future__ import annotations

from gmpy2 import mpq

from .algebra import MultiPoly, as_bigrat


def _trim(a):
    a = list(a)
    while a and not a[-1]:
        a.pop()
    return a


def poly_to_list(p: MultiPoly, v: str):
    """Dense coefficient list of a polynomial that only involves ``v``."""
    extra = [w for w in p.uses() if w != v]
    if extra:
        raise ValueError(f"polynomial also involves {extra}")
    if p.is_zero():
        return []
    i = p.variables.index(v)
    out = [mpq(0)] * (p.degree(v) + 1)
    for exps, c in p.items():
        out[exps[i]] += c
    return out


def list_to_poly(coeffs, v: str, variables) -> MultiPoly:
    variables = tuple(variables)
    i = variables.index(v)
    terms = {}
    for k, c in enumerate(coeffs):
        if c:
            e = [0] * len(variables)
            e[i] = k
            terms[tuple(e)] = c
    return MultiPoly(variables, terms)


def upoly_divmod(a, b):
    a = _trim(a)
    b = _trim(b)
    if not b:
        raise ZeroDivisionError("division by zero polynomial")
    q = [mpq(0)] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    lb = b[-1]
    while len(r) >= len(b) and r:
        k = len(r) - len(b)
        c = r[-1] / lb
        q[k] = c
        for j, bj in enumerate(b):
            r[k + j] -= c * bj
        r = _trim(r)
    return _trim(q), r


def upoly_gcd(a, b):
    """Monic gcd by the Euclidean algorithm (gcd(0, 0) = 0)."""
    a, b = _trim(a), _trim(b)
    while b:
        _, r = upoly_divmod(a, b)
        a, b = b, r
    if not a:
        return []
    lead = a[-1]
    return [c / lead for c in a]


# truncated power series; all results have exactly n coefficients


def ps(coeffs, n):
    out = [as_bigrat(c) for c in list(coeffs)[:n]]
    return out + [mpq(0)] * (n - len(out))


def ps_add(a, b, n):
    a, b = ps(a, n), ps(b, n)
    return [x + y for x, y in zip(a, b)]


def ps_scale(a, c, n):
    c = as_bigrat(c)
    return [x * c for x in ps(a, n)]


def ps_mul(a, b, n):
    a, b = ps(a, n), ps(b, n)
    out = [mpq(0)] * n
    for i, x in enumerate(a):
        if x:
            for j in range(n - i):
                if b[j]:
                    out[i + j] += x * b[j]
    return out


def ps_inv(a, n):
    a = ps(a, n)
    if not a[0]:
        raise ZeroDivisionError("power series with zero constant term is not invertible")
    out = [mpq(0)] * n
    out[0] = 1 / a[0]
    for k in range(1, n):
        s = mpq(0)
        for j in range(1, k + 1):
            s += a[j] * out[k - j]
        out[k] = -s / a[0]
    return out


def ps_div(a, b, n):
    return ps_mul(a, ps_inv(b, n), n)


def ps_deriv(a, n):
    a = ps(a, n + 1)
    return [a[k + 1] * (k + 1) for k in range(n)]


def ps_exp(a, n):
    """exp of a series with zero constant term (f' = a' f recurrence)."""
    a = ps(a, n)
    if a[0]:
        raise ValueError("exp needs a zero constant term to stay rational")
    out = [mpq(0)] * n
    out[0] = mpq(1)
    for k in range(1, n):
        s = mpq(0)
        for j in range(1, k + 1):
            s += j * a[j] * out[k - j]
        out[k] = s / k
    return out


def ps_compose(a, b, n):
    """a(b(x)) for b with zero constant term."""
    b = ps(b, n)
    if b[0]:
        raise ValueError("inner series must have zero constant term")
    a = ps(a, n)
    out = [mpq(0)] * n
    for c in reversed(a):
        out = ps_mul(out, b, n)
        out[0] += c
    return out


def ps_revert(a, n):
    """Compositional inverse of a = x + ... (a[0] = 0, a[1] != 0)."""
    a = ps(a, n)
    if a[0] or not a[1]:
        raise ValueError("reversion needs a[0] = 0 and a[1] != 0")
    # Newton-free iterative solve: find b with a(b(x)) = x term by term
    b = [mpq(0)] * n
    if n > 1:
        b[1] = 1 / a[1]
    for k in range(2, n):
        comp = ps_compose(a, b, k + 1)
        b[k] = -comp[k] / a[1]
    return b


def laurent(num, den, n):
    """Laurent expansion of num/den at 0: (valuation, n coefficients)."""
    num, den = _trim(num), _trim(den)
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return 0, [mpq(0)] * n
    vn = next(i for i, c in enumerate(num) if c)
    vd = next(i for i, c in enumerate(den) if c)
    return vn - vd, ps_div(num[vn:], den[vd:], n)
