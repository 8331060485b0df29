"""Pure-Python integration kernel.

Mirrors ``_kernel.pyx`` line for line; used when the extension is not built or
when ``GFLSWITCH_PURE=1``.  See ``layout.py`` for the packed parameter format.
"""

import math

from .layout import (
    ALPHA, ANG, C1_PIN, C1_VAL, I1MAX, KI, KP, M_P, MAG, MODE, P_REF, PIN,
    U_C1, U_G, W_B, X_C2, X_G, Y1G,
)


def gfmc_power(y, scal, gfl):
    n = len(gfl)
    delta = y[0]
    if scal[MODE] == 0.0:
        p = scal[U_C1] * scal[U_G] * scal[Y1G] * math.sin(delta)
        for j in range(n):
            phi = gfl[j][ANG] if gfl[j][PIN] != 0.0 else y[1 + j] + gfl[j][ANG]
            p -= scal[ALPHA] * scal[U_C1] * gfl[j][MAG] * math.cos(delta - phi)
        return p
    phi1 = scal[C1_VAL] if scal[C1_PIN] != 0.0 else delta + scal[C1_VAL]
    i1 = scal[I1MAX]
    p = scal[U_G] * i1 * math.cos(phi1)
    for j in range(n):
        phi = gfl[j][ANG] if gfl[j][PIN] != 0.0 else y[1 + j] + gfl[j][ANG]
        p -= scal[X_G] * i1 * gfl[j][MAG] * math.sin(phi - phi1)
    return p


def guard(y, scal, gfl):
    """Required CVC current magnitude minus the GFMC limit."""
    n = len(gfl)
    delta = y[0]
    re = scal[U_C1] * math.cos(delta) - scal[U_G]
    im = scal[U_C1] * math.sin(delta)
    for j in range(n):
        phi = gfl[j][ANG] if gfl[j][PIN] != 0.0 else y[1 + j] + gfl[j][ANG]
        # subtract j * x_g * I_j
        re += scal[X_G] * gfl[j][MAG] * math.sin(phi)
        im -= scal[X_G] * gfl[j][MAG] * math.cos(phi)
    return scal[Y1G] * math.hypot(re, im) - scal[I1MAX]


def rhs(y, scal, gfl, dy):
    n = len(gfl)
    w_b = scal[W_B]
    delta = y[0]
    clc = scal[MODE] != 0.0
    dy[0] = w_b * scal[M_P] * (scal[P_REF] - gfmc_power(y, scal, gfl))

    if clc:
        phi1 = scal[C1_VAL] if scal[C1_PIN] != 0.0 else delta + scal[C1_VAL]
        shared = scal[X_G]
    else:
        a = scal[ALPHA]
        e_re = a * scal[U_C1] * math.cos(delta) + (1.0 - a) * scal[U_G]
        e_im = a * scal[U_C1] * math.sin(delta)
        shared = (1.0 - a) * scal[X_G]

    for i in range(n):
        th = y[1 + i]
        w = y[1 + n + i]
        if clc:
            nn = scal[U_G] * math.sin(th)
            dn = scal[U_G] * math.cos(th)
            m = scal[X_G] * scal[I1MAX] * math.cos(phi1 - th)
            g = scal[X_G] * scal[I1MAX] * math.sin(phi1 - th)
        else:
            nn = e_re * math.sin(th) - e_im * math.cos(th)
            dn = e_re * math.cos(th) + e_im * math.sin(th)
            m = 0.0
            g = 0.0
        x = 0.0
        for j in range(n):
            c = shared + (gfl[i][X_C2] if j == i else 0.0)
            pinned = gfl[j][PIN] != 0.0
            phi = gfl[j][ANG] if pinned else y[1 + j] + gfl[j][ANG]
            m += c * gfl[j][MAG] * math.cos(phi - th)
            q = c * gfl[j][MAG] * math.sin(phi - th)
            if pinned:
                g += q
            elif j != i:
                g += q
                x += q * y[1 + n + j]
        kp = gfl[i][KP]
        ki = gfl[i][KI]
        s = 1.0 + w / w_b
        dy[1 + i] = w
        dy[1 + n + i] = (ki * (s * m - nn) + kp * (s * (w * g - x) - w * dn)) / (1.0 - kp * m / w_b)


def rk4_step(y, h, scal, gfl):
    """One classical RK4 step, in place."""
    size = len(y)
    k1 = [0.0] * size
    k2 = [0.0] * size
    k3 = [0.0] * size
    k4 = [0.0] * size
    tmp = [0.0] * size
    rhs(y, scal, gfl, k1)
    for r in range(size):
        tmp[r] = y[r] + 0.5 * h * k1[r]
    rhs(tmp, scal, gfl, k2)
    for r in range(size):
        tmp[r] = y[r] + 0.5 * h * k2[r]
    rhs(tmp, scal, gfl, k3)
    for r in range(size):
        tmp[r] = y[r] + h * k3[r]
    rhs(tmp, scal, gfl, k4)
    for r in range(size):
        y[r] += h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r])


def advance(y, dt, nsteps, scal, gfl, guard_dir, y_prev):
    """Take up to ``nsteps`` RK4 steps.

    Stops early after the step on which the mode guard fires (status 1) or
    the state turns non-finite (status 2).  ``y_prev`` holds the state at the
    start of the last step.  Returns ``(steps_taken, status)``.
    """
    size = len(y)
    for k in range(nsteps):
        for r in range(size):
            y_prev[r] = y[r]
        rk4_step(y, dt, scal, gfl)
        for r in range(size):
            if not math.isfinite(y[r]):
                return k + 1, 2
        if guard_dir != 0:
            g = guard(y, scal, gfl)
            if (guard_dir > 0 and g >= 0.0) or (guard_dir < 0 and g < 0.0):
                return k + 1, 1
    return nsteps, 0
