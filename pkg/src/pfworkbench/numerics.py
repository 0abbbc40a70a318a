"""Floating-point layer: period series, quadrature over the real square, g(b).

The chain ``Gamma`` is the square ``0 <= Z <= 1, 0 <= X < oo`` in the
Weierstrass coordinates.  On it ``Y^2 = X^2 (r - b^2) / 4`` with
``r = 4(X + 1/X + Z + 1/Z) >= 16``, so the principal root of ``r - b^2``
is a continuous branch for every ``b`` off the ray ``b^2 in [16, oo)``;
that is the branch used throughout.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from gmpy2 import mpq

from . import series as ps
from .operators import frobenius_solutions

__all__ = [
    "BranchError",
    "MirrorSeries",
    "QuadratureResult",
    "Region",
    "clausen_check",
    "f32_coefficient",
    "f32_eval",
    "g_direct",
    "default_step",
    "mirror_comparison",
    "mirror_series",
    "pf_coefficients",
    "to_json",
    "normal_function",
    "period_coefficient",
    "period_series",
    "pf_fd",
    "quad2d",
    "rational_fit",
    "results_csv",
    "result_record",
]

TWO_PI_I_SQ = (2j * math.pi) ** 2


class BranchError(ValueError):
    """The square-root branch is not well defined on the chain for this b."""


# -- series ------------------------------------------------------------------


def period_coefficient(n: int) -> mpq:
    """``(4n)! / (n!)^4`` exactly."""
    return mpq(math.factorial(4 * n), math.factorial(n) ** 4)


def period_series(b, n_terms: int = 60) -> complex:
    """``(2 pi i)^2 * sum_n (4n)!/(n!)^4 b^(-4n)``, summed by the term ratio."""
    b = complex(b)
    if n_terms < 1:
        raise ValueError("need at least one term")
    if abs(b) <= 4:
        raise ValueError(f"|b| = {abs(b)} <= 4: the series does not converge")
    x = b**-4
    term = 1.0 + 0j
    total = term
    for n in range(n_terms - 1):
        term *= (4 * n + 1) * (4 * n + 2) * (4 * n + 3) * (4 * n + 4) / (n + 1) ** 4 * x
        total += term
    return TWO_PI_I_SQ * total


def f32_coefficient(n: int) -> mpq:
    """``(1/4)_n (1/2)_n (3/4)_n / (n!)^3`` exactly."""
    c = mpq(1)
    for k in range(n):
        c *= (mpq(1, 4) + k) * (mpq(1, 2) + k) * (mpq(3, 4) + k) / mpq(k + 1) ** 3
    return c


def f32_eval(u, n_terms: int = 60) -> complex:
    """Truncated ``3F2(1/4, 1/2, 3/4; 1, 1; u)``."""
    u = complex(u)
    if abs(u) >= 1:
        raise ValueError(f"|u| = {abs(u)} >= 1: outside the disc of convergence")
    term = 1.0 + 0j
    total = term
    for k in range(n_terms - 1):
        term *= (k + 0.25) * (k + 0.5) * (k + 0.75) / (k + 1) ** 3 * u
        total += term
    return total


# -- quadrature --------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """``z_lo <= Z <= z_hi`` and ``x_lo <= X <= x_hi`` (``x_hi`` may be infinite)."""

    z_lo: float = 0.0
    z_hi: float = 1.0
    x_lo: float = 0.0
    x_hi: float = math.inf


@dataclass
class QuadratureResult:
    value: complex
    error_estimate: float
    subdivisions: int
    nodes: int
    converged: bool

    def record(self):
        return result_record(self)


def _ts_nodes(level: int, tmax: float):
    """Tanh-sinh nodes on (0, 1) for step ``2**-level``: (x, 1 - x, weight)."""
    h = 2.0**-level
    n = int(math.floor(tmax / h))
    t = np.arange(-n, n + 1) * h
    s = math.pi * np.sinh(t)
    x = 1.0 / (1.0 + np.exp(-s))
    xc = 1.0 / (1.0 + np.exp(s))
    w = h * math.pi * np.cosh(t) * x * xc
    keep = (x > 0) & (xc > 0) & (w > 0)
    return x[keep], xc[keep], w[keep]


def _axis(lo, hi, level, tmax):
    x, xc, w = _ts_nodes(level, tmax)
    if math.isinf(hi):
        if lo != 0:
            raise ValueError("semi-infinite axes must start at 0")
        # X = xi/(1 - xi)
        return x / xc, w / (xc * xc)
    return lo + (hi - lo) * x, (hi - lo) * w


def quad2d(integrand, region: Region = Region(), tol: float = 1e-10, min_level: int = 3,
           max_level: int = 8, tmax: float = 3.7, level: int = None) -> QuadratureResult:
    """Tensor-product tanh-sinh quadrature with level doubling.

    ``integrand(X, Z)`` must accept numpy arrays (broadcasting a column of X
    against a row of Z).  The error estimate is the change between the last
    two levels.  With ``level`` set, exactly that level is used (and the
    previous one for the estimate), which keeps the rule identical across
    calls; finite differences in a parameter rely on that.
    """
    levels = range(level - 1, level + 1) if level is not None else range(min_level, max_level + 1)
    prev = None
    nodes = 0
    value = None
    err = math.inf
    for lev in levels:
        X, wx = _axis(region.x_lo, region.x_hi, lev, tmax)
        Z, wz = _axis(region.z_lo, region.z_hi, lev, tmax)
        F = np.asarray(integrand(X[:, None], Z[None, :]), dtype=complex)
        if not np.all(np.isfinite(F)):
            raise FloatingPointError("integrand is not finite at a quadrature node")
        value = complex(np.sum((wx[:, None] * F) * wz[None, :]))
        nodes += F.size
        if prev is not None:
            err = abs(value - prev)
            if level is None and err <= tol * max(abs(value), 1e-300):
                return QuadratureResult(value, err, lev, nodes, True)
        prev = value
    converged = level is not None or err <= tol * max(abs(value), 1e-300)
    return QuadratureResult(value, err, lev, nodes, converged)


# -- the normal function and the inhomogeneity -------------------------------


def _check_b(b):
    b = complex(b)
    if b == 0 or abs(b * b - 16) == 0:
        raise ValueError(f"b = {b} is a singular value of the family")
    b2 = b * b
    if abs(b2.imag) <= 1e-14 * max(1.0, abs(b2)) and b2.real >= 16:
        raise BranchError(f"b^2 = {b2.real} >= 16: the radicand vanishes on the chain")
    return b


def _sqrt_r_minus_b2(X, Z, b2):
    r = 4.0 * (X + 1.0 / X + Z + 1.0 / Z)
    return np.sqrt(r - b2 + 0j)


def omega_integrand(b):
    """``1/(Y Z)`` on the chain, ``Y = X sqrt(r - b^2) / 2``."""
    b2 = _check_b(b) ** 2

    def f(X, Z):
        return 2.0 / (X * Z * _sqrt_r_minus_b2(X, Z, b2))

    return f


def normal_function(b, tol: float = 1e-12, level: int = None, **kw) -> QuadratureResult:
    """``int_Gamma dX dZ / (Y Z)``."""
    return quad2d(omega_integrand(b), Region(), tol, level=level, **kw)


_N_GENERAL = None


def _n_general():
    """``N(X, Z, b)``: the numerator above ``8192 Q^(7/2) sqrt(XZ)`` for general b."""
    global _N_GENERAL
    if _N_GENERAL is None:
        from .algebra import MultiPoly, RatFun
        from .families import compute_K

        K = compute_K(at_b_eq_i=False).K
        vs = K.variables
        scale = RatFun.coerce(MultiPoly.monomial((0, 3, 0), vs, 8192 * 128), vs)
        N = (K * scale / RatFun.var("X", vs) ** 3).cancel()
        if not N.is_polynomial():
            raise ArithmeticError("general-b numerator is not a polynomial")
        _N_GENERAL = N.num
    return _N_GENERAL


def g_integrand(b):
    """``K/(Y^7 Z)`` evaluated as ``N / (8192 Q^(7/2) sqrt(XZ))``.

    ``sqrt(Q) = sqrt(XZ) * sqrt(r - b^2)``, the same branch as ``omega_integrand``.
    """
    b = _check_b(b)
    b2 = b * b
    terms = [(exps, complex(float(c))) for exps, c in _n_general().items()]

    def f(X, Z):
        num = 0j
        for (i, j, k), c in terms:
            num = num + c * X**i * Z**j * b**k
        sq = np.sqrt(X * Z) * _sqrt_r_minus_b2(X, Z, b2)
        return num / (8192.0 * sq**7 * np.sqrt(X * Z))

    return f


def g_direct(b, tol: float = 1e-10, **kw) -> QuadratureResult:
    """``int_Gamma (D_PF omega)`` with the exact ``K`` evaluated in floating point."""
    return quad2d(g_integrand(b), Region(), tol, **kw)


# central 7-point stencils on offsets -3..3
_D1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0
_D2 = np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0
_D3 = np.array([1, -8, 13, 0, -13, 8, -1]) / 8.0
_ORDERS = (6, 6, 4)  # leading error orders of the three stencils


@dataclass
class FDResult:
    value: complex
    terms: list  # c_k(b0) * f^(k)(b0), k = 0..3
    derivatives: list
    h: float

    @property
    def scale(self):
        return max(abs(t) for t in self.terms)


def pf_coefficients(b0):
    """The operator's coefficients at ``b0`` (complex)."""
    from .families import _eval_ratfun_complex, build_pf_b

    import mpmath

    return [complex(_eval_ratfun_complex(c, {"b": mpmath.mpc(b0)})) for c in build_pf_b().coeffs]


def _stencil_derivs(f, b0, h):
    vals = np.array([f(b0 + k * h) for k in range(-3, 4)], dtype=complex)
    d1 = np.dot(_D1, vals) / h
    d2 = np.dot(_D2, vals) / h**2
    d3 = np.dot(_D3, vals) / h**3
    return vals[3], d1, d2, d3


def default_step(b0, fraction: float = 0.025) -> float:
    """``fraction`` times the distance from ``b0`` to the nearest singular value 0, 4, -4."""
    b0 = complex(b0)
    return fraction * min(abs(b0 - s) for s in (0, 4, -4))


def pf_fd(b0, h: float = None, f=None, tol: float = 1e-12, level: int = None) -> FDResult:
    """``D_PF`` applied to ``f`` (default: the normal function) by finite differences.

    Seven-point central differences at steps ``h`` and ``h/2`` are combined by
    Richardson extrapolation; ``h`` defaults to :func:`default_step`.  The default ``f`` runs the quadrature at one
    fixed level for every stencil point so the rule does not change with b.
    """
    b0 = complex(b0)
    h = default_step(b0) if h is None else h
    singular = [0, 4, -4]
    for k in range(-3, 4):
        for s in singular:
            if abs(b0 + k * h - s) < 1e-12:
                raise ValueError(f"stencil point {b0 + k * h} hits a singular value")
    if f is None:
        if level is None:
            level = normal_function(b0, tol).subdivisions + 1
        lev = level

        def f(b):
            return normal_function(b, level=lev).value

    f0, *coarse = _stencil_derivs(f, b0, h)
    _, *fine = _stencil_derivs(f, b0, h / 2)
    derivs = [f0]
    for c, fi, p in zip(coarse, fine, _ORDERS):
        derivs.append((2**p * fi - c) / (2**p - 1))
    coeffs = pf_coefficients(b0)
    terms = [c * d for c, d in zip(coeffs, derivs)]
    return FDResult(sum(terms), terms, derivs, h)


# -- mirror map --------------------------------------------------------------


@dataclass
class MirrorSeries:
    """``t = log u + S1/S0``, ``q = exp(t)``, and the inverse ``u(q)`` (exact)."""

    omega0: list
    t_series: list  # coefficients of t - log u
    u_of_q: list  # u(q) = sum u_of_q[k] q^k
    order: int

    def inverse_laurent(self):
        """``1/u(q) = 1/q + c0 + c1 q + ...``: returns [c_{-1}, c0, c1, ...]."""
        tail = self.u_of_q[1:]
        inv = ps.ps_inv(tail, self.order - 1)
        return inv


REFERENCE_T = [1, 8, 4372, 96256, 124002, 10698752]


def mirror_series(order: int = 10) -> MirrorSeries:
    from .families import build_pf_u

    sols = frobenius_solutions(build_pf_u(), order + 1)
    s0 = sols[0].blocks[0]
    s1 = sols[1].blocks[0]
    n = order + 1
    ratio = ps.ps_div(s1, s0, n)
    e = ps.ps_exp(ratio, n)
    q_of_u = [mpq(0)] + e[: n - 1]
    u_of_q = ps.ps_revert(q_of_u, n)
    return MirrorSeries(list(s0), ratio, u_of_q, n)


def mirror_comparison(ms: MirrorSeries, reference=REFERENCE_T):
    """Fit ``T(q) = beta/u(beta q) + gamma`` to the reference series and list agreements.

    ``beta`` comes from the q^1 coefficient (sign chosen by the q^2 one),
    ``gamma`` absorbs the constant; higher coefficients are then predictions.
    """
    c = ms.inverse_laurent()  # c[0] = 1 (for 1/q), c[1] = constant, c[2] = q, ...
    if len(c) < 4:
        raise ValueError("mirror comparison needs the series to order 3 or more")
    beta2 = mpq(reference[2]) / c[2]
    beta = mpq(math.isqrt(int(beta2.numerator)), math.isqrt(int(beta2.denominator)))
    exact_root = beta * beta == beta2
    if exact_root and len(reference) > 3 and beta**3 * c[3] != reference[3] and (-beta) ** 3 * c[3] == reference[3]:
        beta = -beta
    gamma = mpq(reference[1]) - beta * c[1]
    rows = []
    for k in range(min(len(reference), len(c))):
        ours = beta**k * c[k] + (gamma if k == 1 else 0)
        rows.append({"power": k - 1, "computed": str(ours), "reference": reference[k], "match": ours == reference[k],
                     "unshifted": str(beta**k * c[k])})
    return {"beta": str(beta), "beta_exact": exact_root, "gamma": str(gamma), "rows": rows}


def clausen_check(ms: MirrorSeries = None, order: int = 20):
    """Find ``a + b`` and ``ab`` with ``omega0 = 2F1(a, b; 1; u)^2`` and test it to ``order``."""
    omega0 = ms.omega0 if ms is not None else [period_coefficient(k) / 256**k for k in range(order + 1)]
    n = min(order + 1, len(omega0))
    p = omega0[1] / 2
    sigma = 2 * (omega0[2] - p * p) / p - p - 1
    F = [mpq(1)]
    for k in range(1, n):
        j = k - 1
        F.append(F[-1] * (j * j + j * sigma + p) / mpq(k) ** 2)
    sq = ps.ps_mul(F, F, n)
    ok = all(a == b for a, b in zip(sq, omega0[:n]))
    disc = sigma * sigma - 4 * p
    roots = None
    if disc >= 0:
        rn, rd = math.isqrt(int(disc.numerator)), math.isqrt(int(disc.denominator))
        if mpq(rn, rd) ** 2 == disc:
            r = mpq(rn, rd)
            roots = (str((sigma - r) / 2), str((sigma + r) / 2))
    return {"sum": str(sigma), "product": str(p), "parameters": roots, "order": n - 1, "agrees": ok}


# -- rational fit ------------------------------------------------------------


def rational_fit(samples, degrees, cond_limit: float = 1e12):
    """Least-squares ``P(b)/Q(b)`` with ``Q(0) = 1`` through (b, value) samples.

    Linearised: ``g Q - P = 0``.  Returns a dict with numerator/denominator
    coefficients (ascending), the max relative residual and the conditioning.
    """
    p, q = degrees
    b = np.array([complex(s[0]) for s in samples])
    g = np.array([complex(s[1]) for s in samples])
    if len(b) < p + q + 2:
        raise ValueError(f"need at least {p + q + 2} samples for degrees {degrees}")
    cols = [b**k for k in range(p + 1)] + [-g * b**k for k in range(1, q + 1)]
    M = np.stack(cols, axis=1)
    # scale columns before solving to keep conditioning honest
    norms = np.linalg.norm(M, axis=0)
    norms[norms == 0] = 1
    sol, *_ = np.linalg.lstsq(M / norms, g, rcond=None)
    sol = sol / norms
    cond = float(np.linalg.cond(M / norms))
    num = sol[: p + 1]
    den = np.concatenate([[1.0], sol[p + 1 :]])

    def model(x):
        x = np.asarray(x, dtype=complex)
        return np.polyval(num[::-1], x) / np.polyval(den[::-1], x)

    resid = np.abs(model(b) - g) / np.maximum(np.abs(g), 1e-300)
    return {
        "degrees": (p, q),
        "numerator": num,
        "denominator": den,
        "max_rel_residual": float(resid.max()),
        "condition": cond,
        "ill_conditioned": cond > cond_limit,
        "model": model,
    }


# -- output ------------------------------------------------------------------


def _num(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def result_record(r: QuadratureResult):
    d = asdict(r)
    d["value"] = _num(r.value)
    return d


def results_csv(rows, fields=("b", "nu_bar", "g_direct", "pf_fd", "discrepancy")):
    """CSV text for a list of dicts; complex values are written as ``re+imj``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        out = []
        for k in fields:
            v = row[k]
            out.append(f"{v.real:.16e}{v.imag:+.16e}j" if isinstance(v, complex) else (f"{v:.16e}" if isinstance(v, float) else v))
        w.writerow(out)
    return buf.getvalue()


def to_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=str)
