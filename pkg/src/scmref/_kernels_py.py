"""Pure-Python hot kernels.

Mirror of ``_kernels.pyx`` line for line; used when the compiled extension
is unavailable or ``SCMREF_PURE_PYTHON=1`` is set.  All roots are searched in
log space (u = ln x) with Brent's zeroin, so weak-inversion tails down to
x ~ 1e-300 stay well conditioned.
"""

import math

import numpy as np

from .errors import SolverError

EPS = 2.220446049250313e-16
FTOL = 1e-14
MAXITER = 200

# log-space bracket limits
U_MIN = math.log(1e-300)
U_MAX = math.log(1e300)
U_LO0 = math.log(1e-12)
U_HI0 = math.log(1e4)
U_STEP = math.log(1e4)

_ACM = 0
_SCM = 1
_BETA = 2


def acm_f(i):
    """(V_P - V_S)/U_T as a function of inversion level, cancellation-free."""
    s = math.sqrt(1.0 + i)
    return s - 2.0 + math.log(i) - math.log(s + 1.0)


def _acm_f_u(u):
    i = math.exp(u)
    s = math.sqrt(1.0 + i)
    return s - 2.0 + u - math.log(s + 1.0)


def scm_lhs(x, alpha):
    """SCM-side bracket: F(alpha*x) - F(x)."""
    s = math.sqrt(1.0 + x)
    sa = math.sqrt(1.0 + alpha * x)
    return (alpha - 1.0) * x / (sa + s) + math.log(alpha) + math.log((s + 1.0) / (sa + 1.0))


def _scm_lhs_u(u, alpha):
    x = math.exp(u)
    s = math.sqrt(1.0 + x)
    sa = math.sqrt(1.0 + alpha * x)
    return (alpha - 1.0) * x / (sa + s) + math.log(alpha) + math.log((s + 1.0) / (sa + 1.0))


def beta_lhs(beta, x):
    """F(x) - F(beta*x): zero at beta = 1, decreasing in beta."""
    s = math.sqrt(1.0 + x)
    sb = math.sqrt(1.0 + beta * x)
    return (1.0 - beta) * x / (s + sb) - math.log(beta) + math.log((sb + 1.0) / (s + 1.0))


def _beta_lhs_v(v, x):
    b = math.exp(v)
    s = math.sqrt(1.0 + x)
    sb = math.sqrt(1.0 + b * x)
    return (1.0 - b) * x / (s + sb) - v + math.log((sb + 1.0) / (s + 1.0))


def _eval(kind, u, p, target):
    if kind == _ACM:
        return _acm_f_u(u) - target
    if kind == _SCM:
        return _scm_lhs_u(u, p) - target
    return _beta_lhs_v(u, p) - target


def _zeroin(kind, p, target, a, b, fa, fb):
    """Brent's zeroin on a sign-changing bracket [a, b]; returns the root."""
    c, fc = a, fa
    d = e = b - a
    lo, hi = a, b
    for _ in range(MAXITER):
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, fa = b, fb
            b, fb = c, fc
            c, fc = a, fa
        tol = 2.0 * EPS * abs(b) + 1e-300
        m = 0.5 * (c - b)
        if abs(fb) <= FTOL or abs(m) <= tol:
            return b
        if abs(e) >= tol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                pp = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                pp = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if pp > 0.0:
                q = -q
            else:
                pp = -pp
            if 2.0 * pp < min(3.0 * m * q - abs(tol * q), abs(e * q)):
                e = d
                d = pp / q
            else:
                d = m
                e = m
        else:
            d = m
            e = m
        a, fa = b, fb
        if abs(d) > tol:
            b += d
        else:
            b += tol if m > 0.0 else -tol
        fb = _eval(kind, b, p, target)
    raise SolverError("root search did not converge", bracket=(math.exp(lo), math.exp(hi)))


def _solve_increasing_u(kind, p, target):
    """Root of an increasing function of u; expands the bracket geometrically."""
    lo, hi = U_LO0, U_HI0
    flo = _eval(kind, lo, p, target)
    while flo > 0.0:
        if lo <= U_MIN:
            return math.nan
        lo = max(lo - U_STEP, U_MIN)
        flo = _eval(kind, lo, p, target)
    fhi = _eval(kind, hi, p, target)
    while fhi < 0.0:
        if hi >= U_MAX:
            raise SolverError("upper bracket exhausted", bracket=(math.exp(lo), math.exp(hi)))
        hi = min(hi + U_STEP, U_MAX)
        fhi = _eval(kind, hi, p, target)
    if flo == 0.0:
        return math.exp(lo)
    if fhi == 0.0:
        return math.exp(hi)
    return math.exp(_zeroin(kind, p, target, lo, hi, flo, fhi))


def acm_f_inv(v):
    """Inversion level i with F(i) = v; nan if below the 1e-300 floor."""
    return _solve_increasing_u(_ACM, 0.0, v)


def solve_if2(alpha, rhs):
    """i_f2 solving scm_lhs(i_f2, alpha) = rhs; nan when rhs <= ln(alpha)."""
    if not rhs > math.log(alpha):
        return math.nan
    return _solve_increasing_u(_SCM, alpha, rhs)


def solve_if2_many(alpha, rhs):
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    out = np.empty_like(rhs)
    for k in range(rhs.shape[0]):
        out[k] = solve_if2(alpha, rhs[k])
    return out


def box_tc_cell(alpha, rhs, weight, span):
    """Box TC (ppm/degC) of weight*i_f2 over the grid; nan if any point infeasible."""
    n = rhs.shape[0]
    vmin = math.inf
    vmax = -math.inf
    total = 0.0
    for k in range(n):
        x = solve_if2(alpha, rhs[k])
        if x != x:
            return math.nan
        val = weight[k] * x
        vmin = min(vmin, val)
        vmax = max(vmax, val)
        total += val
    return (vmax - vmin) / (total / n * span) * 1e6


def solve_beta(x, target, floor):
    """beta in [floor, 1] with beta_lhs(beta, x) = target; nan below the floor."""
    if target <= 0.0:
        return 1.0
    lo = math.log(floor)
    flo = _beta_lhs_v(lo, x) - target
    if flo < 0.0:
        return math.nan
    fhi = -target
    if flo == 0.0:
        return floor
    return math.exp(_zeroin(_BETA, x, target, lo, 0.0, flo, fhi))
