"""Pure-Python method-of-steps kernel.

Reference implementation of the stepping loop; ``_ckernel.pyx`` mirrors it
statement for statement.  Coefficients arrive as flat encodings (see
``fishsim.coefficients``).

Both supported equations have a right-hand side that depends on time and the
delayed state only, ``y' = G(t, y(theta(t)))``:

* ``MODE_LOG``:    ``G = a(t) / (1 + (exp(y(theta))/K(t))**gamma) - b(t)``
  with ``y = ln N``; the history ``phi`` is given in raw biomass.
* ``MODE_LINEAR``: ``G = -r(t) * y(theta)``.

Classical RK4 applied to such an equation has identical second and third
stages and a fourth stage equal to the slope at the step end, so a step
costs two delayed evaluations (midpoint and end).
"""
from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np

MODE_LOG = 0
MODE_LINEAR = 1

STATUS_OK = 0
STATUS_OVERFLOW = 1
STATUS_NAN = 2

LOG_LIMIT = 700.0
LINEAR_LIMIT = 1e300

TWO_PI = 2.0 * math.pi


def _make_coef(enc):
    enc = [float(v) for v in enc]
    kind = int(enc[0])
    if kind == 0:
        value = enc[1]
        return lambda t: value
    if kind == 1:
        mean, amp, period, phase = enc[1:5]

        def sinusoid(t):
            u = math.fmod(t, period)
            if u < 0.0:
                u += period
            if u >= period:
                u = 0.0
            return mean + amp * math.sin(TWO_PI * u / period + phase)
        return sinusoid
    if kind == 2:
        period = enc[1]
        nc, ns = int(enc[2]), int(enc[3])
        cs = enc[4:4 + nc]
        ss = enc[4 + nc:4 + nc + ns]

        def fourier(t):
            u = math.fmod(t, period)
            if u < 0.0:
                u += period
            if u >= period:
                u = 0.0
            w = TWO_PI * u / period
            out = 0.0
            for k in range(nc):
                out = out + cs[k] * math.cos(k * w)
            for k in range(ns):
                out = out + ss[k] * math.sin((k + 1) * w)
            return out
        return fourier
    if kind == 3:
        period = enc[1]
        m = int(enc[2])
        ts = enc[3:3 + m]
        vs = enc[3 + m:3 + 2 * m]
        xs = [ts[-1] - period] + ts + [ts[0] + period]
        ys = [vs[-1]] + vs + [vs[0]]

        def piecewise(t):
            u = math.fmod(t, period)
            if u < 0.0:
                u += period
            if u >= period:
                u = 0.0
            j = bisect_right(xs, u) - 1
            if j >= len(xs) - 1:
                j = len(xs) - 2
            return (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]) * (u - xs[j]) + ys[j]
        return piecewise
    if kind == 4:
        m = int(enc[2])
        ts = enc[3:3 + m]
        vs = enc[3 + m:3 + 2 * m]

        def table(t):
            if t <= ts[0]:
                return vs[0]
            if t >= ts[-1]:
                return vs[-1]
            j = bisect_right(ts, t) - 1
            return (vs[j + 1] - vs[j]) / (ts[j + 1] - ts[j]) * (t - ts[j]) + vs[j]
        return table
    raise ValueError(f"unknown coefficient kind {kind}")


def eval_coefficient(enc, t):
    """Scalar evaluation of an encoded coefficient (used by tests)."""
    return _make_coef(enc)(float(t))


def hermite(s, t0, y0, f0, t1, y1, f1):
    h = t1 - t0
    u = (s - t0) / h
    dp0 = f0 * h
    dp1 = f1 * h
    return y0 + u * (dp0 + u * (-2.0 * dp0 - dp1 - 3.0 * y0 + 3.0 * y1
                                + u * (dp0 + dp1 + 2.0 * y0 - 2.0 * y1)))


def hermite_slope(s, t0, y0, f0, t1, y1, f1):
    h = t1 - t0
    u = (s - t0) / h
    dp0 = f0 * h
    dp1 = f1 * h
    return (dp0 + u * (-4.0 * dp0 - 2.0 * dp1 - 6.0 * y0 + 6.0 * y1
                       + u * (3.0 * dp0 + 3.0 * dp1 + 6.0 * y0 - 6.0 * y1))) / h


def integrate(mode, gamma, c1, c2, c3, lag, phi, y0, stops, h, tol, max_iter, min_step):
    """Advance ``y`` from ``stops[0]`` through every stop to ``stops[-1]``.

    Returns ``(t, y, f, status, t_fail)``; ``f`` holds the slope at each mesh
    point.  On overflow the arrays end at the last accepted point.
    """
    coef1 = _make_coef(c1)
    coef2 = _make_coef(c2)
    coef3 = _make_coef(c3)
    lag_of = _make_coef(lag)
    hist = _make_coef(phi)
    log_mode = mode == MODE_LOG
    gamma = float(gamma)
    limit = LOG_LIMIT if log_mode else LINEAR_LIMIT
    stops = [float(s) for s in stops]
    start = stops[0]

    T = [start]
    Y = [float(y0)]
    F = []

    def slope(t, d):
        if log_mode:
            return coef1(t) / (1.0 + (d / coef3(t)) ** gamma) - coef2(t)
        return -coef1(t) * d

    def delayed(s, seg):
        # seg: tentative interpolant over the step in progress, or None
        if s < start:
            return hist(s)
        if s <= T[-1]:
            i = bisect_right(T, s) - 1
            if T[i] == s:
                y = Y[i]
            else:
                y = hermite(s, T[i], Y[i], F[i], T[i + 1], Y[i + 1], F[i + 1])
        else:
            y = hermite(s, *seg)
        return math.exp(y) if log_mode else y

    F.append(slope(start, delayed(start - lag_of(start), None)))

    def attempt(tn, t1):
        hh = t1 - tn
        yn = Y[-1]
        fn = F[-1]
        tm = tn + 0.5 * hh
        thm = tm - lag_of(tm)
        th1 = t1 - lag_of(t1)
        if thm <= tn and th1 <= tn:
            km = slope(tm, delayed(thm, None))
            k1 = slope(t1, delayed(th1, None))
            return True, yn + hh / 6.0 * (fn + 4.0 * km + k1), k1
        # Part of the delayed argument lies inside this step: iterate on the
        # step's own interpolant, starting from an extrapolation.
        if len(T) >= 2:
            seg = (T[-2], Y[-2], F[-2], T[-1], Y[-1], F[-1])
            yg = hermite(t1, *seg)
            fg = hermite_slope(t1, *seg)
        else:
            yg = yn + hh * fn
            fg = fn
        y1 = yg
        f1 = fg
        for _ in range(max_iter):
            seg = (tn, yn, fn, t1, yg, fg)
            km = slope(tm, delayed(thm, seg))
            k1 = slope(t1, delayed(th1, seg))
            y1 = yn + hh / 6.0 * (fn + 4.0 * km + k1)
            f1 = slope(t1, delayed(th1, (tn, yn, fn, t1, y1, fg)))
            if abs(y1 - yg) < tol * max(1.0, abs(y1)):
                return True, y1, f1
            yg = y1
            fg = f1
        return False, y1, f1

    status = STATUS_OK
    t_fail = math.nan
    for k in range(len(stops) - 1):
        s, e = stops[k], stops[k + 1]
        if e <= s:
            continue
        n = max(1, int(math.ceil((e - s) / h - 1e-9)))
        dt = (e - s) / n
        for j in range(1, n + 1):
            target = s + j * dt if j < n else e
            sub = target - T[-1]
            while T[-1] < target:
                tn = T[-1]
                hh = min(sub, target - tn)
                t1 = target if hh >= target - tn else tn + hh
                ok, y1, f1 = attempt(tn, t1)
                if not ok and hh > min_step:
                    sub = 0.5 * hh
                    continue
                if y1 != y1 or f1 != f1:
                    return _pack(T, Y, F, STATUS_NAN, t1)
                if abs(y1) > limit:
                    return _pack(T, Y, F, STATUS_OVERFLOW, t1)
                T.append(t1)
                Y.append(y1)
                F.append(f1)
    return _pack(T, Y, F, status, t_fail)


def _pack(T, Y, F, status, t_fail):
    return (np.array(T), np.array(Y), np.array(F), status, float(t_fail))
