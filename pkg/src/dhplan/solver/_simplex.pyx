# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex iteration kernel; same contract as ``_simplex_py.iterate``."""
from libc.math cimport fabs, INFINITY, isfinite

DEF OPTIMAL = 0
DEF UNBOUNDED = 1
DEF ITER_LIMIT = 2
DEF BASIC = 0
DEF AT_LOWER = 1
DEF AT_UPPER = 2
DEF FREE = 3
DEF FIXED = 4

BACKEND = "cython"


def iterate(double[:, ::1] T, double[::1] d, double[::1] x, double[::1] lo, double[::1] hi,
            long[::1] basis, signed char[::1] state, long max_iter, double opt_tol,
            double piv_tol, double feas_tol, long bland_after):
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t ncol = T.shape[1]
    cdef Py_ssize_t i, k, j, r
    cdef long it = 0, degen = 0, leave, best_b
    cdef bint bland = False, blocking
    cdef double score, best, direction, flip, theta, rate, room, relaxed, cap, tmin
    cdef double piv, f, dj, lb, ub, xb, best_rate
    cdef double[:, ::1] TT = T

    while it < max_iter:
        j = -1
        best = 0.0
        for k in range(ncol):
            dj = d[k]
            if state[k] == AT_LOWER:
                if dj >= -opt_tol:
                    continue
            elif state[k] == AT_UPPER:
                if dj <= opt_tol:
                    continue
            elif state[k] == FREE:
                if fabs(dj) <= opt_tol:
                    continue
            else:
                continue
            if bland:
                j = k
                break
            if fabs(dj) > best:
                best = fabs(dj)
                j = k
        if j < 0:
            return OPTIMAL, it

        direction = 1.0 if d[j] < 0 else -1.0
        if isfinite(lo[j]) and isfinite(hi[j]):
            flip = hi[j] - lo[j]
        else:
            flip = INFINITY

        r = -1
        theta = INFINITY
        blocking = False
        # pass 1: relaxed (Harris) bound or exact min for Bland
        cap = INFINITY
        tmin = INFINITY
        for i in range(m):
            rate = -direction * TT[i, j]
            k = basis[i]
            xb = x[k]
            if rate < -piv_tol and isfinite(lo[k]):
                room = (xb - lo[k]) / -rate
                relaxed = (xb - lo[k] + feas_tol) / -rate
            elif rate > piv_tol and isfinite(hi[k]):
                room = (hi[k] - xb) / rate
                relaxed = (hi[k] - xb + feas_tol) / rate
            else:
                continue
            blocking = True
            if room < 0.0:
                room = 0.0
            if relaxed < cap:
                cap = relaxed
            if room < tmin:
                tmin = room
        if blocking:
            best_rate = -1.0
            best_b = -1
            for i in range(m):
                rate = -direction * TT[i, j]
                k = basis[i]
                xb = x[k]
                if rate < -piv_tol and isfinite(lo[k]):
                    room = (xb - lo[k]) / -rate
                elif rate > piv_tol and isfinite(hi[k]):
                    room = (hi[k] - xb) / rate
                else:
                    continue
                if room < 0.0:
                    room = 0.0
                if bland:
                    if room <= tmin + 1e-12 and (best_b < 0 or k < best_b):
                        best_b = k
                        r = i
                        theta = room
                else:
                    if room <= cap and fabs(rate) > best_rate:
                        best_rate = fabs(rate)
                        r = i
                        theta = room

        if flip <= theta:
            if not isfinite(flip):
                return UNBOUNDED, it
            theta = flip
            r = -1
        if r < 0 and not isfinite(theta):
            return UNBOUNDED, it

        for i in range(m):
            x[basis[i]] += -direction * TT[i, j] * theta
        x[j] += direction * theta
        if r < 0:
            if direction > 0:
                x[j] = hi[j]
                state[j] = AT_UPPER
            else:
                x[j] = lo[j]
                state[j] = AT_LOWER
        else:
            leave = basis[r]
            rate = -direction * TT[r, j]
            if lo[leave] == hi[leave]:
                x[leave] = lo[leave]
                state[leave] = FIXED
            elif rate < 0:
                x[leave] = lo[leave]
                state[leave] = AT_LOWER
            else:
                x[leave] = hi[leave]
                state[leave] = AT_UPPER
            piv = TT[r, j]
            for k in range(ncol):
                TT[r, k] /= piv
            for i in range(m):
                if i == r:
                    continue
                f = TT[i, j]
                if f != 0.0:
                    for k in range(ncol):
                        TT[i, k] -= f * TT[r, k]
                    TT[i, j] = 0.0
            f = d[j]
            if f != 0.0:
                for k in range(ncol):
                    d[k] -= f * TT[r, k]
            d[j] = 0.0
            TT[r, j] = 1.0
            basis[r] = j
            state[j] = BASIC
        it += 1
        if theta <= 1e-12:
            degen += 1
            if degen > bland_after:
                bland = True
        else:
            degen = 0
            bland = False
    return ITER_LIMIT, it
