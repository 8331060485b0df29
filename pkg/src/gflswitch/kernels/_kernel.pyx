# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernel; same algorithm and API as ``_kernel_py``."""

from libc.math cimport sin, cos, sqrt, isfinite

cdef enum:
    W_B = 0
    U_G = 1
    U_C1 = 2
    X_C1 = 3
    X_G = 4
    ALPHA = 5
    Y1G = 6
    I1MAX = 7
    C1_PIN = 8
    C1_VAL = 9
    M_P = 10
    P_REF = 11
    MODE = 12

cdef enum:
    X_C2 = 0
    KP = 1
    KI = 2
    MAG = 3
    ANG = 4
    PIN = 5


cdef inline double _phi(double[::1] y, double[:, ::1] gfl, Py_ssize_t j) nogil:
    if gfl[j, PIN] != 0.0:
        return gfl[j, ANG]
    return y[1 + j] + gfl[j, ANG]


cdef double _power(double[::1] y, double[::1] scal, double[:, ::1] gfl) nogil:
    cdef Py_ssize_t n = gfl.shape[0], j
    cdef double delta = y[0], p, phi1, i1
    if scal[MODE] == 0.0:
        p = scal[U_C1] * scal[U_G] * scal[Y1G] * sin(delta)
        for j in range(n):
            p -= scal[ALPHA] * scal[U_C1] * gfl[j, MAG] * cos(delta - _phi(y, gfl, j))
        return p
    phi1 = scal[C1_VAL] if scal[C1_PIN] != 0.0 else delta + scal[C1_VAL]
    i1 = scal[I1MAX]
    p = scal[U_G] * i1 * cos(phi1)
    for j in range(n):
        p -= scal[X_G] * i1 * gfl[j, MAG] * sin(_phi(y, gfl, j) - phi1)
    return p


cdef double _guard(double[::1] y, double[::1] scal, double[:, ::1] gfl) nogil:
    cdef Py_ssize_t n = gfl.shape[0], j
    cdef double delta = y[0], phi
    cdef double re = scal[U_C1] * cos(delta) - scal[U_G]
    cdef double im = scal[U_C1] * sin(delta)
    for j in range(n):
        phi = _phi(y, gfl, j)
        re += scal[X_G] * gfl[j, MAG] * sin(phi)
        im -= scal[X_G] * gfl[j, MAG] * cos(phi)
    return scal[Y1G] * sqrt(re * re + im * im) - scal[I1MAX]


cdef void _rhs(double[::1] y, double[::1] scal, double[:, ::1] gfl, double[::1] dy) nogil:
    cdef Py_ssize_t n = gfl.shape[0], i, j
    cdef double w_b = scal[W_B], delta = y[0]
    cdef bint clc = scal[MODE] != 0.0
    cdef double phi1 = 0.0, shared, a, e_re = 0.0, e_im = 0.0
    cdef double th, w, nn, dn, m, g, x, c, phi, q, kp, ki, s
    cdef bint pinned
    dy[0] = w_b * scal[M_P] * (scal[P_REF] - _power(y, scal, gfl))
    if clc:
        phi1 = scal[C1_VAL] if scal[C1_PIN] != 0.0 else delta + scal[C1_VAL]
        shared = scal[X_G]
    else:
        a = scal[ALPHA]
        e_re = a * scal[U_C1] * cos(delta) + (1.0 - a) * scal[U_G]
        e_im = a * scal[U_C1] * sin(delta)
        shared = (1.0 - a) * scal[X_G]
    for i in range(n):
        th = y[1 + i]
        w = y[1 + n + i]
        if clc:
            nn = scal[U_G] * sin(th)
            dn = scal[U_G] * cos(th)
            m = scal[X_G] * scal[I1MAX] * cos(phi1 - th)
            g = scal[X_G] * scal[I1MAX] * sin(phi1 - th)
        else:
            nn = e_re * sin(th) - e_im * cos(th)
            dn = e_re * cos(th) + e_im * sin(th)
            m = 0.0
            g = 0.0
        x = 0.0
        for j in range(n):
            c = shared + (gfl[i, X_C2] if j == i else 0.0)
            pinned = gfl[j, PIN] != 0.0
            phi = _phi(y, gfl, j)
            m += c * gfl[j, MAG] * cos(phi - th)
            q = c * gfl[j, MAG] * sin(phi - th)
            if pinned:
                g += q
            elif j != i:
                g += q
                x += q * y[1 + n + j]
        kp = gfl[i, KP]
        ki = gfl[i, KI]
        s = 1.0 + w / w_b
        dy[1 + i] = w
        dy[1 + n + i] = (ki * (s * m - nn) + kp * (s * (w * g - x) - w * dn)) / (1.0 - kp * m / w_b)


cdef void _rk4(double[::1] y, double h, double[::1] scal, double[:, ::1] gfl, double[:, ::1] work) nogil:
    cdef Py_ssize_t size = y.shape[0], r
    cdef double[::1] k1 = work[0], k2 = work[1], k3 = work[2], k4 = work[3], tmp = work[4]
    _rhs(y, scal, gfl, k1)
    for r in range(size):
        tmp[r] = y[r] + 0.5 * h * k1[r]
    _rhs(tmp, scal, gfl, k2)
    for r in range(size):
        tmp[r] = y[r] + 0.5 * h * k2[r]
    _rhs(tmp, scal, gfl, k3)
    for r in range(size):
        tmp[r] = y[r] + h * k3[r]
    _rhs(tmp, scal, gfl, k4)
    for r in range(size):
        y[r] += h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r])


def gfmc_power(double[::1] y, double[::1] scal, double[:, ::1] gfl):
    return _power(y, scal, gfl)


def guard(double[::1] y, double[::1] scal, double[:, ::1] gfl):
    return _guard(y, scal, gfl)


def rhs(double[::1] y, double[::1] scal, double[:, ::1] gfl, double[::1] dy):
    _rhs(y, scal, gfl, dy)


def rk4_step(double[::1] y, double h, double[::1] scal, double[:, ::1] gfl):
    import numpy as np
    cdef double[:, ::1] work = np.empty((5, y.shape[0]))
    _rk4(y, h, scal, gfl, work)


def advance(double[::1] y, double dt, long nsteps, double[::1] scal, double[:, ::1] gfl,
            int guard_dir, double[::1] y_prev):
    import numpy as np
    cdef double[:, ::1] work = np.empty((5, y.shape[0]))
    cdef Py_ssize_t size = y.shape[0], r
    cdef long k
    cdef double g
    with nogil:
        for k in range(nsteps):
            for r in range(size):
                y_prev[r] = y[r]
            _rk4(y, dt, scal, gfl, work)
            for r in range(size):
                if not isfinite(y[r]):
                    with gil:
                        return k + 1, 2
            if guard_dir != 0:
                g = _guard(y, scal, gfl)
                if (guard_dir > 0 and g >= 0.0) or (guard_dir < 0 and g < 0.0):
                    with gil:
                        return k + 1, 1
    return nsteps, 0
