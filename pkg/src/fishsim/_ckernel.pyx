# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled method-of-steps kernel; mirrors ``fishsim._pykernel``."""
import numpy as np

from libc.math cimport sin, cos, exp, pow, fmod, ceil, fabs, M_PI
from libc.stdlib cimport malloc, realloc, free

cdef enum:
    MODE_LOG = 0
    STATUS_OK = 0
    STATUS_OVERFLOW = 1
    STATUS_NAN = 2

cdef double LOG_LIMIT = 700.0
cdef double LINEAR_LIMIT = 1e300

cdef double TWO_PI = 2.0 * M_PI


cdef struct Coef:
    int kind
    const double* p


cdef inline double _reduce(double t, double period) noexcept nogil:
    cdef double u = fmod(t, period)
    if u < 0.0:
        u += period
    if u >= period:
        u = 0.0
    return u


cdef double coef_eval(Coef c, double t) noexcept nogil:
    cdef const double* p = c.p
    cdef double u, w, out, period, x0, x1, y0, y1
    cdef int k, nc, ns, m, lo, hi, mid
    if c.kind == 0:
        return p[1]
    if c.kind == 1:
        u = _reduce(t, p[3])
        return p[1] + p[2] * sin(TWO_PI * u / p[3] + p[4])
    if c.kind == 2:
        period = p[1]
        nc = <int>p[2]
        ns = <int>p[3]
        u = _reduce(t, period)
        w = TWO_PI * u / period
        out = 0.0
        for k in range(nc):
            out = out + p[4 + k] * cos(k * w)
        for k in range(ns):
            out = out + p[4 + nc + k] * sin((k + 1) * w)
        return out
    if c.kind == 3:
        period = p[1]
        m = <int>p[2]
        u = _reduce(t, period)
        if u < p[3]:
            x0 = p[3 + m - 1] - period
            y0 = p[3 + 2 * m - 1]
            x1 = p[3]
            y1 = p[3 + m]
        elif u >= p[3 + m - 1]:
            x0 = p[3 + m - 1]
            y0 = p[3 + 2 * m - 1]
            x1 = p[3] + period
            y1 = p[3 + m]
        else:
            lo = 0
            hi = m - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if p[3 + mid] <= u:
                    lo = mid
                else:
                    hi = mid
            x0 = p[3 + lo]
            x1 = p[3 + lo + 1]
            y0 = p[3 + m + lo]
            y1 = p[3 + m + lo + 1]
        return (y1 - y0) / (x1 - x0) * (u - x0) + y0
    # kind 4: clamped table
    m = <int>p[2]
    if t <= p[3]:
        return p[3 + m]
    if t >= p[3 + m - 1]:
        return p[3 + 2 * m - 1]
    lo = 0
    hi = m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if p[3 + mid] <= t:
            lo = mid
        else:
            hi = mid
    return (p[3 + m + lo + 1] - p[3 + m + lo]) / (p[3 + lo + 1] - p[3 + lo]) * (t - p[3 + lo]) \
        + p[3 + m + lo]


def eval_coefficient(double[::1] enc, double t):
    cdef Coef c
    c.kind = <int>enc[0]
    c.p = &enc[0]
    return coef_eval(c, t)


cdef inline double hermite(double s, double t0, double y0, double f0,
                           double t1, double y1, double f1) noexcept nogil:
    cdef double h = t1 - t0
    cdef double u = (s - t0) / h
    cdef double dp0 = f0 * h
    cdef double dp1 = f1 * h
    return y0 + u * (dp0 + u * (-2.0 * dp0 - dp1 - 3.0 * y0 + 3.0 * y1
                                + u * (dp0 + dp1 + 2.0 * y0 - 2.0 * y1)))


cdef inline double hermite_slope(double s, double t0, double y0, double f0,
                                 double t1, double y1, double f1) noexcept nogil:
    cdef double h = t1 - t0
    cdef double u = (s - t0) / h
    cdef double dp0 = f0 * h
    cdef double dp1 = f1 * h
    return (dp0 + u * (-4.0 * dp0 - 2.0 * dp1 - 6.0 * y0 + 6.0 * y1
                       + u * (3.0 * dp0 + 3.0 * dp1 + 6.0 * y0 - 6.0 * y1))) / h


cdef struct State:
    int log_mode
    double gamma
    double start
    Coef c1
    Coef c2
    Coef c3
    Coef lag
    Coef hist
    double* T
    double* Y
    double* F
    Py_ssize_t n
    Py_ssize_t cap
    # tentative interpolant over the step in progress
    double s_t0, s_y0, s_f0, s_t1, s_y1, s_f1


cdef inline double slope(State* st, double t, double d) noexcept nogil:
    if st.log_mode:
        return coef_eval(st.c1, t) / (1.0 + pow(d / coef_eval(st.c3, t), st.gamma)) \
            - coef_eval(st.c2, t)
    return -coef_eval(st.c1, t) * d


cdef double delayed(State* st, double s) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid, i
    cdef double y
    if s < st.start:
        return coef_eval(st.hist, s)
    if s <= st.T[st.n - 1]:
        lo = 0
        hi = st.n
        # rightmost i with T[i] <= s
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if st.T[mid] <= s:
                lo = mid
            else:
                hi = mid
        i = lo
        if st.T[i] == s:
            y = st.Y[i]
        else:
            y = hermite(s, st.T[i], st.Y[i], st.F[i], st.T[i + 1], st.Y[i + 1], st.F[i + 1])
    else:
        y = hermite(s, st.s_t0, st.s_y0, st.s_f0, st.s_t1, st.s_y1, st.s_f1)
    if st.log_mode:
        return exp(y)
    return y


cdef int push(State* st, double t, double y, double f) noexcept nogil:
    cdef Py_ssize_t cap
    cdef double* p
    if st.n == st.cap:
        cap = 2 * st.cap
        p = <double*>realloc(st.T, cap * sizeof(double))
        if p == NULL:
            return -1
        st.T = p
        p = <double*>realloc(st.Y, cap * sizeof(double))
        if p == NULL:
            return -1
        st.Y = p
        p = <double*>realloc(st.F, cap * sizeof(double))
        if p == NULL:
            return -1
        st.F = p
        st.cap = cap
    st.T[st.n] = t
    st.Y[st.n] = y
    st.F[st.n] = f
    st.n += 1
    return 0


cdef int attempt(State* st, double tn, double t1, double tol, int max_iter,
                 double* y_out, double* f_out) noexcept nogil:
    cdef double hh = t1 - tn
    cdef double yn = st.Y[st.n - 1]
    cdef double fn = st.F[st.n - 1]
    cdef double tm = tn + 0.5 * hh
    cdef double thm = tm - coef_eval(st.lag, tm)
    cdef double th1 = t1 - coef_eval(st.lag, t1)
    cdef double km, k1, y1, f1, yg, fg
    cdef Py_ssize_t n = st.n
    cdef int it
    if thm <= tn and th1 <= tn:
        km = slope(st, tm, delayed(st, thm))
        k1 = slope(st, t1, delayed(st, th1))
        y_out[0] = yn + hh / 6.0 * (fn + 4.0 * km + k1)
        f_out[0] = k1
        return 1
    if n >= 2:
        yg = hermite(t1, st.T[n - 2], st.Y[n - 2], st.F[n - 2], st.T[n - 1], st.Y[n - 1], st.F[n - 1])
        fg = hermite_slope(t1, st.T[n - 2], st.Y[n - 2], st.F[n - 2],
                           st.T[n - 1], st.Y[n - 1], st.F[n - 1])
    else:
        yg = yn + hh * fn
        fg = fn
    y1 = yg
    f1 = fg
    st.s_t0 = tn
    st.s_y0 = yn
    st.s_f0 = fn
    st.s_t1 = t1
    for it in range(max_iter):
        st.s_y1 = yg
        st.s_f1 = fg
        km = slope(st, tm, delayed(st, thm))
        k1 = slope(st, t1, delayed(st, th1))
        y1 = yn + hh / 6.0 * (fn + 4.0 * km + k1)
        st.s_y1 = y1
        f1 = slope(st, t1, delayed(st, th1))
        if fabs(y1 - yg) < tol * (fabs(y1) if fabs(y1) > 1.0 else 1.0):
            y_out[0] = y1
            f_out[0] = f1
            return 1
        yg = y1
        fg = f1
    y_out[0] = y1
    f_out[0] = f1
    return 0


def integrate(int mode, double gamma, double[::1] c1, double[::1] c2, double[::1] c3,
              double[::1] lag, double[::1] phi, double y0, double[::1] stops, double h,
              double tol, int max_iter, double min_step):
    """See ``fishsim._pykernel.integrate``."""
    cdef State st
    cdef Py_ssize_t k, j, n_steps, nstops = stops.shape[0]
    cdef double s, e, dt, target, sub, tn, hh, t1, y1, f1, limit
    cdef double t_fail = float("nan")
    cdef int ok, status = STATUS_OK
    cdef Py_ssize_t est = 16
    cdef double[::1] Tv, Yv, Fv

    st.log_mode = mode == MODE_LOG
    st.gamma = gamma
    st.start = stops[0]
    st.c1.kind = <int>c1[0]
    st.c1.p = &c1[0]
    st.c2.kind = <int>c2[0]
    st.c2.p = &c2[0]
    st.c3.kind = <int>c3[0]
    st.c3.p = &c3[0]
    st.lag.kind = <int>lag[0]
    st.lag.p = &lag[0]
    st.hist.kind = <int>phi[0]
    st.hist.p = &phi[0]
    limit = LOG_LIMIT if st.log_mode else LINEAR_LIMIT

    for k in range(nstops - 1):
        if stops[k + 1] > stops[k]:
            est += <Py_ssize_t>ceil((stops[k + 1] - stops[k]) / h) + 1
    st.cap = est
    st.T = <double*>malloc(est * sizeof(double))
    st.Y = <double*>malloc(est * sizeof(double))
    st.F = <double*>malloc(est * sizeof(double))
    st.n = 0
    if st.T == NULL or st.Y == NULL or st.F == NULL:
        free(st.T)
        free(st.Y)
        free(st.F)
        raise MemoryError()

    try:
        with nogil:
            st.T[0] = st.start
            st.Y[0] = y0
            st.n = 1
            st.F[0] = slope(&st, st.start, delayed(&st, st.start - coef_eval(st.lag, st.start)))
            for k in range(nstops - 1):
                s = stops[k]
                e = stops[k + 1]
                if e <= s:
                    continue
                n_steps = <Py_ssize_t>ceil((e - s) / h - 1e-9)
                if n_steps < 1:
                    n_steps = 1
                dt = (e - s) / n_steps
                for j in range(1, n_steps + 1):
                    target = s + j * dt if j < n_steps else e
                    sub = target - st.T[st.n - 1]
                    while st.T[st.n - 1] < target:
                        tn = st.T[st.n - 1]
                        hh = sub if sub < target - tn else target - tn
                        t1 = target if hh >= target - tn else tn + hh
                        ok = attempt(&st, tn, t1, tol, max_iter, &y1, &f1)
                        if not ok and hh > min_step:
                            sub = 0.5 * hh
                            continue
                        if y1 != y1 or f1 != f1:
                            status = STATUS_NAN
                            t_fail = t1
                            break
                        if fabs(y1) > limit:
                            status = STATUS_OVERFLOW
                            t_fail = t1
                            break
                        if push(&st, t1, y1, f1) != 0:
                            status = -1
                            break
                    if status != STATUS_OK:
                        break
                if status != STATUS_OK:
                    break
        if status == -1:
            raise MemoryError()
        T = np.empty(st.n)
        Y = np.empty(st.n)
        F = np.empty(st.n)
        Tv = T
        Yv = Y
        Fv = F
        for k in range(st.n):
            Tv[k] = st.T[k]
            Yv[k] = st.Y[k]
            Fv[k] = st.F[k]
    finally:
        free(st.T)
        free(st.Y)
        free(st.F)
    return T, Y, F, status, t_fail
