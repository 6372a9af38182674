# Compiled twins of the kernels in pure.py. Signatures and semantics must
# stay in lockstep with that module; the test suite cross-checks them.
#
# Feedback gains are evaluated continuously (at every RK4 stage); the
# exploration table is zero-order-hold per step.

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, fabs, isfinite

cnp.import_array()


def batch_lift(states, exponents):
    cdef double[:, ::1] x = np.ascontiguousarray(states, dtype=np.float64)
    cdef long long[:, ::1] e = np.ascontiguousarray(exponents, dtype=np.int64)
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t q = e.shape[0]
    out_arr = np.ones((m, q))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, j, i
    cdef long long p
    cdef double acc, xv
    for r in range(m):
        for j in range(q):
            acc = 1.0
            for i in range(n):
                p = e[j, i]
                if p > 0:
                    xv = x[r, i]
                    while p > 0:
                        acc *= xv
                        p -= 1
            out[r, j] = acc
    return out_arr


cdef void _monos(double* x, long long[:, ::1] exps, double* out) noexcept nogil:
    cdef Py_ssize_t q = exps.shape[0]
    cdef Py_ssize_t n = exps.shape[1]
    cdef Py_ssize_t j, i
    cdef long long p
    cdef double acc
    for j in range(q):
        acc = 1.0
        for i in range(n):
            p = exps[j, i]
            while p > 0:
                acc *= x[i]
                p -= 1
        out[j] = acc


cdef void _control(double* x, double* nrow, double[:, ::1] gain,
                   long long[:, ::1] kexp, bint has_gain, double* psib,
                   double* u) noexcept nogil:
    cdef Py_ssize_t k = gain.shape[0]
    cdef Py_ssize_t dk = gain.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc
    if has_gain:
        _monos(x, kexp, psib)
    for i in range(k):
        acc = nrow[i]
        if has_gain:
            for j in range(dk):
                acc -= gain[i, j] * psib[j]
        u[i] = acc


cdef void _poly_rhs(double* x, double* nrow, double[:, ::1] dc,
                    long long[:, ::1] de, double[:, ::1] b0,
                    double[:, :, ::1] gc, long long[:, ::1] ge, bint has_g,
                    double[:, ::1] gain, long long[:, ::1] kexp, bint has_gain,
                    double* mbuf, double* gbuf, double* psib, double* ubuf,
                    double* out) noexcept nogil:
    cdef Py_ssize_t n = dc.shape[0]
    cdef Py_ssize_t pdrift = de.shape[0]
    cdef Py_ssize_t pg = ge.shape[0]
    cdef Py_ssize_t k = b0.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double acc, gcol
    _control(x, nrow, gain, kexp, has_gain, psib, ubuf)
    _monos(x, de, mbuf)
    if has_g:
        _monos(x, ge, gbuf)
    for i in range(n):
        acc = 0.0
        for j in range(pdrift):
            acc += dc[i, j] * mbuf[j]
        for c in range(k):
            gcol = b0[i, c]
            if has_g:
                for j in range(pg):
                    gcol += gc[c, i, j] * gbuf[j]
            acc += gcol * ubuf[c]
        out[i] = acc


def rk4_poly(x0, double dt, long steps, drift_coef, drift_exp, b0, gc, ge,
             gain, gain_exp, noise, double guard):
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[:, ::1] dc = np.ascontiguousarray(drift_coef, dtype=np.float64)
    cdef long long[:, ::1] de = np.ascontiguousarray(drift_exp, dtype=np.int64)
    cdef double[:, ::1] b0v = np.ascontiguousarray(b0, dtype=np.float64)
    cdef double[:, :, ::1] gcv = np.ascontiguousarray(gc, dtype=np.float64)
    cdef long long[:, ::1] gev = np.ascontiguousarray(ge, dtype=np.int64)
    cdef double[:, ::1] gv = np.ascontiguousarray(gain, dtype=np.float64)
    cdef long long[:, ::1] kev = np.ascontiguousarray(gain_exp, dtype=np.int64)
    cdef double[:, ::1] nz = np.ascontiguousarray(noise, dtype=np.float64)

    cdef Py_ssize_t n = x0v.shape[0]
    cdef Py_ssize_t k = b0v.shape[1]
    cdef Py_ssize_t pdrift = de.shape[0]
    cdef Py_ssize_t pg = gev.shape[0]
    cdef Py_ssize_t dk = kev.shape[0]
    cdef bint has_g = gcv.shape[2] > 0
    cdef bint has_gain = gv.shape[1] > 0

    states_arr = np.zeros((steps + 1, n))
    inputs_arr = np.zeros((steps + 1, k))
    cdef double[:, ::1] states = states_arr
    cdef double[:, ::1] inputs = inputs_arr

    # one flat scratch block: stage slopes, stage state, monomial buffers,
    # lifted state, control, noise row
    scratch_arr = np.zeros(5 * n + pdrift + pg + dk + 2 * k + 1)
    cdef double[::1] scratch = scratch_arr
    cdef double* k1 = &scratch[0]
    cdef double* k2 = &scratch[n]
    cdef double* k3 = &scratch[2 * n]
    cdef double* k4 = &scratch[3 * n]
    cdef double* xs = &scratch[4 * n]
    cdef double* mbuf = &scratch[5 * n]
    cdef double* gbuf = &scratch[5 * n + pdrift]
    cdef double* psib = &scratch[5 * n + pdrift + pg]
    cdef double* ubuf = &scratch[5 * n + pdrift + pg + dk]
    cdef double* nrow = &scratch[5 * n + pdrift + pg + dk + k]

    cdef double[::1] xv = np.array(x0v, dtype=np.float64)
    cdef Py_ssize_t s, i
    cdef double bad
    cdef long done = steps

    states[0, :] = xv

    with nogil:
        for s in range(steps):
            for i in range(k):
                nrow[i] = nz[s, i]
            # record the applied input at the step start
            _control(&xv[0], nrow, gv, kev, has_gain, psib, ubuf)
            for i in range(k):
                inputs[s, i] = ubuf[i]

            _poly_rhs(&xv[0], nrow, dc, de, b0v, gcv, gev, has_g,
                      gv, kev, has_gain, mbuf, gbuf, psib, ubuf, k1)
            for i in range(n):
                xs[i] = xv[i] + 0.5 * dt * k1[i]
            _poly_rhs(xs, nrow, dc, de, b0v, gcv, gev, has_g,
                      gv, kev, has_gain, mbuf, gbuf, psib, ubuf, k2)
            for i in range(n):
                xs[i] = xv[i] + 0.5 * dt * k2[i]
            _poly_rhs(xs, nrow, dc, de, b0v, gcv, gev, has_g,
                      gv, kev, has_gain, mbuf, gbuf, psib, ubuf, k3)
            for i in range(n):
                xs[i] = xv[i] + dt * k3[i]
            _poly_rhs(xs, nrow, dc, de, b0v, gcv, gev, has_g,
                      gv, kev, has_gain, mbuf, gbuf, psib, ubuf, k4)

            bad = 0.0
            for i in range(n):
                xv[i] = xv[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if not isfinite(xv[i]) or fabs(xv[i]) > guard:
                    bad = 1.0
            if bad > 0.0:
                done = s
                break
            for i in range(n):
                states[s + 1, i] = xv[i]

    if done == steps:
        for i in range(k):
            nrow[i] = nz[steps, i]
        _control(&xv[0], nrow, gv, kev, has_gain, psib, ubuf)
        for i in range(k):
            inputs[steps, i] = ubuf[i]
    return states_arr, inputs_arr, int(done)


cdef void _tug_rhs(double* x, double* nrow, double[:, ::1] md,
                   double[:, ::1] b0, Py_ssize_t nb, double[:, ::1] gain,
                   long long[:, ::1] kexp, bint has_gain, double* psib,
                   double* ubuf, double* out) noexcept nogil:
    cdef Py_ssize_t n = 6 * nb
    cdef Py_ssize_t k = b0.shape[1]
    cdef Py_ssize_t j, i, c, o
    cdef double th, v1, v2, cth, sth, acc
    _control(x, nrow, gain, kexp, has_gain, psib, ubuf)
    for j in range(nb):
        o = 6 * j
        th = x[o + 2]
        v1 = x[o + 3]
        v2 = x[o + 4]
        cth = cos(th)
        sth = sin(th)
        out[o + 0] = cth * v1 - sth * v2
        out[o + 1] = sth * v1 + cth * v2
        out[o + 2] = x[o + 5]
        for i in range(3):
            acc = 0.0
            for c in range(3):
                acc -= md[i, c] * x[o + 3 + c]
            out[o + 3 + i] = acc
    for i in range(n):
        acc = 0.0
        for c in range(k):
            acc += b0[i, c] * ubuf[c]
        out[i] += acc


def rk4_tug(x0, double dt, long steps, minvd, b0, gain, gain_exp, noise,
            double guard):
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[:, ::1] md = np.ascontiguousarray(minvd, dtype=np.float64)
    cdef double[:, ::1] b0v = np.ascontiguousarray(b0, dtype=np.float64)
    cdef double[:, ::1] gv = np.ascontiguousarray(gain, dtype=np.float64)
    cdef long long[:, ::1] kev = np.ascontiguousarray(gain_exp, dtype=np.int64)
    cdef double[:, ::1] nz = np.ascontiguousarray(noise, dtype=np.float64)

    cdef Py_ssize_t n = x0v.shape[0]
    cdef Py_ssize_t nb = n // 6
    cdef Py_ssize_t k = b0v.shape[1]
    cdef Py_ssize_t dk = kev.shape[0]
    cdef bint has_gain = gv.shape[1] > 0

    states_arr = np.zeros((steps + 1, n))
    inputs_arr = np.zeros((steps + 1, k))
    cdef double[:, ::1] states = states_arr
    cdef double[:, ::1] inputs = inputs_arr

    scratch_arr = np.zeros(5 * n + dk + 2 * k + 1)
    cdef double[::1] scratch = scratch_arr
    cdef double* k1 = &scratch[0]
    cdef double* k2 = &scratch[n]
    cdef double* k3 = &scratch[2 * n]
    cdef double* k4 = &scratch[3 * n]
    cdef double* xs = &scratch[4 * n]
    cdef double* psib = &scratch[5 * n]
    cdef double* ubuf = &scratch[5 * n + dk]
    cdef double* nrow = &scratch[5 * n + dk + k]

    cdef double[::1] xv = np.array(x0v, dtype=np.float64)
    cdef Py_ssize_t s, i
    cdef double bad
    cdef long done = steps

    states[0, :] = xv

    with nogil:
        for s in range(steps):
            for i in range(k):
                nrow[i] = nz[s, i]
            _control(&xv[0], nrow, gv, kev, has_gain, psib, ubuf)
            for i in range(k):
                inputs[s, i] = ubuf[i]

            _tug_rhs(&xv[0], nrow, md, b0v, nb, gv, kev, has_gain, psib, ubuf, k1)
            for i in range(n):
                xs[i] = xv[i] + 0.5 * dt * k1[i]
            _tug_rhs(xs, nrow, md, b0v, nb, gv, kev, has_gain, psib, ubuf, k2)
            for i in range(n):
                xs[i] = xv[i] + 0.5 * dt * k2[i]
            _tug_rhs(xs, nrow, md, b0v, nb, gv, kev, has_gain, psib, ubuf, k3)
            for i in range(n):
                xs[i] = xv[i] + dt * k3[i]
            _tug_rhs(xs, nrow, md, b0v, nb, gv, kev, has_gain, psib, ubuf, k4)

            bad = 0.0
            for i in range(n):
                xv[i] = xv[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if not isfinite(xv[i]) or fabs(xv[i]) > guard:
                    bad = 1.0
            if bad > 0.0:
                done = s
                break
            for i in range(n):
                states[s + 1, i] = xv[i]

    if done == steps:
        for i in range(k):
            nrow[i] = nz[steps, i]
        _control(&xv[0], nrow, gv, kev, has_gain, psib, ubuf)
        for i in range(k):
            inputs[steps, i] = ubuf[i]
    return states_arr, inputs_arr, int(done)
