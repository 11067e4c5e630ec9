# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same algorithms and API as ``_kernels_py``."""

from libc.math cimport sqrt, log, exp, fabs, NAN, INFINITY

import numpy as np

from .errors import SolverError

cdef double EPS = 2.220446049250313e-16
cdef double FTOL = 1e-14
cdef int MAXITER = 200

cdef double U_MIN = log(1e-300)
cdef double U_MAX = log(1e300)
cdef double U_LO0 = log(1e-12)
cdef double U_HI0 = log(1e4)
cdef double U_STEP = log(1e4)

cdef enum:
    _ACM = 0
    _SCM = 1
    _BETA = 2


cpdef double acm_f(double i):
    cdef double s = sqrt(1.0 + i)
    return s - 2.0 + log(i) - log(s + 1.0)


cpdef double scm_lhs(double x, double alpha):
    cdef double s = sqrt(1.0 + x)
    cdef double sa = sqrt(1.0 + alpha * x)
    return (alpha - 1.0) * x / (sa + s) + log(alpha) + log((s + 1.0) / (sa + 1.0))


cpdef double beta_lhs(double beta, double x):
    cdef double s = sqrt(1.0 + x)
    cdef double sb = sqrt(1.0 + beta * x)
    return (1.0 - beta) * x / (s + sb) - log(beta) + log((sb + 1.0) / (s + 1.0))


cdef inline double _eval(int kind, double u, double p, double target) nogil:
    cdef double x, s, sa, sb, b
    if kind == _ACM:
        x = exp(u)
        s = sqrt(1.0 + x)
        return s - 2.0 + u - log(s + 1.0) - target
    if kind == _SCM:
        x = exp(u)
        s = sqrt(1.0 + x)
        sa = sqrt(1.0 + p * x)
        return (p - 1.0) * x / (sa + s) + log(p) + log((s + 1.0) / (sa + 1.0)) - target
    b = exp(u)
    s = sqrt(1.0 + p)
    sb = sqrt(1.0 + b * p)
    return (1.0 - b) * p / (s + sb) - u + log((sb + 1.0) / (s + 1.0)) - target


cdef double _zeroin(int kind, double p, double target, double a, double b,
                    double fa, double fb, bint *ok) nogil:
    cdef double c = a, fc = fa
    cdef double d = b - a, e = b - a
    cdef double tol, m, s, q, r, pp, lim
    cdef int it
    ok[0] = True
    for it in range(MAXITER):
        if (fb > 0.0) == (fc > 0.0):
            c = a
            fc = fa
            d = b - a
            e = d
        if fabs(fc) < fabs(fb):
            a = b
            fa = fb
            b = c
            fb = fc
            c = a
            fc = fa
        tol = 2.0 * EPS * fabs(b) + 1e-300
        m = 0.5 * (c - b)
        if fabs(fb) <= FTOL or fabs(m) <= tol:
            return b
        if fabs(e) >= tol and fabs(fa) > fabs(fb):
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
            lim = 3.0 * m * q - fabs(tol * q)
            if fabs(e * q) < lim:
                lim = fabs(e * q)
            if 2.0 * pp < lim:
                e = d
                d = pp / q
            else:
                d = m
                e = m
        else:
            d = m
            e = m
        a = b
        fa = fb
        if fabs(d) > tol:
            b += d
        elif m > 0.0:
            b += tol
        else:
            b -= tol
        fb = _eval(kind, b, p, target)
    ok[0] = False
    return b


cdef double _solve_increasing_u(int kind, double p, double target) except? -1.0:
    cdef double lo = U_LO0, hi = U_HI0, flo, fhi, root
    cdef bint ok
    flo = _eval(kind, lo, p, target)
    while flo > 0.0:
        if lo <= U_MIN:
            return NAN
        lo = lo - U_STEP
        if lo < U_MIN:
            lo = U_MIN
        flo = _eval(kind, lo, p, target)
    fhi = _eval(kind, hi, p, target)
    while fhi < 0.0:
        if hi >= U_MAX:
            raise SolverError("upper bracket exhausted", bracket=(exp(lo), exp(hi)))
        hi = hi + U_STEP
        if hi > U_MAX:
            hi = U_MAX
        fhi = _eval(kind, hi, p, target)
    if flo == 0.0:
        return exp(lo)
    if fhi == 0.0:
        return exp(hi)
    root = _zeroin(kind, p, target, lo, hi, flo, fhi, &ok)
    if not ok:
        raise SolverError("root search did not converge", bracket=(exp(lo), exp(hi)))
    return exp(root)


cpdef double acm_f_inv(double v) except? -1.0:
    return _solve_increasing_u(_ACM, 0.0, v)


cpdef double solve_if2(double alpha, double rhs) except? -1.0:
    if not rhs > log(alpha):
        return NAN
    return _solve_increasing_u(_SCM, alpha, rhs)


def solve_if2_many(double alpha, rhs):
    cdef double[::1] r = np.ascontiguousarray(rhs, dtype=np.float64)
    out = np.empty(r.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t k
    for k in range(r.shape[0]):
        o[k] = solve_if2(alpha, r[k])
    return out


cpdef double box_tc_cell(double alpha, const double[::1] rhs, const double[::1] weight,
                         double span) except? -1.0:
    cdef Py_ssize_t k, n = rhs.shape[0]
    cdef double vmin = INFINITY, vmax = -INFINITY, total = 0.0, x, val
    for k in range(n):
        x = solve_if2(alpha, rhs[k])
        if x != x:
            return NAN
        val = weight[k] * x
        if val < vmin:
            vmin = val
        if val > vmax:
            vmax = val
        total += val
    return (vmax - vmin) / (total / n * span) * 1e6


cpdef double solve_beta(double x, double target, double floor) except? -1.0:
    cdef double lo, flo, fhi, root
    cdef bint ok
    if target <= 0.0:
        return 1.0
    lo = log(floor)
    flo = _eval(_BETA, lo, x, target)
    if flo < 0.0:
        return NAN
    fhi = -target
    if flo == 0.0:
        return floor
    root = _zeroin(_BETA, x, target, lo, 0.0, flo, fhi, &ok)
    if not ok:
        raise SolverError("root search did not converge", bracket=(floor, 1.0))
    return exp(root)
