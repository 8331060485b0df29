"""Packed parameter layout shared by both kernel backends.

``scal`` is a float64 vector of network/GFMC scalars; ``gfl`` is an
``(n, NG)`` float64 array with one row per GFLC.  The state vector is
``[delta, theta_0..theta_{n-1}, varpi_0..varpi_{n-1}]``.
"""

W_B = 0
U_G = 1
U_C1 = 2
X_C1 = 3
X_G = 4
ALPHA = 5
Y1G = 6
I1MAX = 7
C1_PIN = 8   # 1.0 -> GFMC CLC current angle is C1_VAL, else delta + C1_VAL
C1_VAL = 9
M_P = 10
P_REF = 11
MODE = 12    # 0.0 CVC, 1.0 CLC
NS = 13

X_C2 = 0
KP = 1       # rad/s per pu
KI = 2       # rad/s^2 per pu
MAG = 3
ANG = 4      # eta_2 when tracking, absolute angle when pinned
PIN = 5
NG = 6
