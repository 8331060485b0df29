"""Per-unit phasor algebra and the algebraic solution of the three-branch star network.

The network is a single PCC joined to the GFMC (through ``x_c1``), to each GFLC
(through its own ``x_c2``) and to an infinite bus (through ``x_g``).  Lines are
lossless; every branch is a pure reactance at nominal frequency.  ``scale``
multiplies all reactances, which is how the frequency-dependent drops seen by
a PLL rotating at ``(1 + varpi/omega_b)`` times nominal are modelled.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

CVC = "CVC"
CLC = "CLC"


class InvalidParameterError(ValueError):
    """Raised for physically meaningless network or controller parameters."""


@dataclass(frozen=True)
class Phasor:
    magnitude: float
    angle: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise InvalidParameterError(f"phasor magnitude must be >= 0, got {self.magnitude}")

    @classmethod
    def from_complex(cls, z: complex) -> "Phasor":
        return cls(abs(z), cmath.phase(z))

    @property
    def z(self) -> complex:
        return cmath.rect(self.magnitude, self.angle)

    def __complex__(self) -> complex:
        return self.z

    def __add__(self, other: "Phasor") -> "Phasor":
        return Phasor.from_complex(self.z + complex(other))

    def rotated(self, angle: float) -> "Phasor":
        return Phasor(self.magnitude, self.angle + angle)

    def scaled(self, k: float) -> "Phasor":
        if k < 0:
            return Phasor(-k * self.magnitude, self.angle + math.pi)
        return Phasor(k * self.magnitude, self.angle)

    def wrapped(self) -> "Phasor":
        """Same phasor with the angle mapped into (-pi, pi]."""
        return Phasor(self.magnitude, wrap_angle(self.angle))


def wrap_angle(a: float) -> float:
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class NetworkParams:
    """Branch reactances and voltages of the star network, all per unit."""

    x_c1: float = 0.05
    x_c2: float = 0.03
    x_g: float = 0.58
    u_g: float = 1.0
    u_c1_set: float = 1.0
    f_base: float = 50.0
    s_base: float = 200.0

    def __post_init__(self):
        for name in ("x_c1", "x_c2", "x_g"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        # u_g may drop to (near) zero while a fault is applied
        if not 0.0 <= self.u_g <= 1.5:
            raise InvalidParameterError(f"u_g must lie in [0, 1.5], got {self.u_g}")
        if not 0.0 < self.u_c1_set <= 1.5:
            raise InvalidParameterError(f"u_c1_set must lie in (0, 1.5], got {self.u_c1_set}")
        if self.f_base <= 0 or self.s_base <= 0:
            raise InvalidParameterError("f_base and s_base must be positive")
        if self.x_c1 > 0.2 * self.x_g:
            warnings.warn(
                f"x_c1={self.x_c1} is not small against x_g={self.x_g}; "
                "the strong-GFMC-coupling approximations lose accuracy",
                stacklevel=3,
            )

    @property
    def omega_b(self) -> float:
        return 2.0 * math.pi * self.f_base


@dataclass(frozen=True)
class DerivedParams:
    alpha: float
    y_1g: float
    l_v: float
    beta_1: float
    gamma: float


def derive_params(net: NetworkParams, x_c2: float | None = None) -> DerivedParams:
    """Constants that recur in the reduced model.

    ``alpha`` is the share of the GFMC voltage seen at the PCC and ``l_v`` the
    Thevenin reactance behind which a GFLC sees the CVC-mode network.
    """
    x_c2 = net.x_c2 if x_c2 is None else x_c2
    if not (net.x_c1 > 0 and net.x_g > 0 and x_c2 > 0):
        raise InvalidParameterError("reactances must be positive")
    alpha = net.x_g / (net.x_c1 + net.x_g)
    return DerivedParams(
        alpha=alpha,
        y_1g=1.0 / (net.x_c1 + net.x_g),
        l_v=x_c2 + (1.0 - alpha) * net.x_g,
        beta_1=net.x_g + net.x_c1,
        gamma=net.x_g,
    )


@dataclass(frozen=True)
class BusSolution:
    u_pcc: Phasor
    u_c2: tuple[Phasor, ...]
    u_c1_terminal: Phasor
    i_c1: Phasor
    i_g: Phasor
    i_c2: tuple[Phasor, ...]

    def kcl_residual(self) -> float:
        return abs(self.i_c1.z + sum(i.z for i in self.i_c2) - self.i_g.z)

    def kvl_residual(self, net: NetworkParams, derived: DerivedParams | None = None, scale: float = 1.0) -> float:
        """Closure of U_c1 = U_g + j*beta_1*I_c1 + j*gamma*sum(I_c2)."""
        d = derived or derive_params(net)
        rhs = net.u_g + 1j * scale * (d.beta_1 * self.i_c1.z + d.gamma * sum(i.z for i in self.i_c2))
        return abs(self.u_c1_terminal.z - rhs)


def _x_c2_list(net: NetworkParams, n: int, x_c2: Sequence[float] | None) -> list[float]:
    if x_c2 is None:
        return [net.x_c2] * n
    if len(x_c2) != n:
        raise InvalidParameterError("one x_c2 per GFLC current is required")
    return list(x_c2)


def solve_cvc(
    delta: float,
    gflc_currents: Sequence[Phasor],
    net: NetworkParams,
    derived: DerivedParams | None = None,
    *,
    u_c1: float | None = None,
    x_c2: Sequence[float] | None = None,
    scale: float = 1.0,
) -> BusSolution:
    """Network solution with the GFMC as a voltage source ``u_c1∠delta``."""
    d = derived or derive_params(net)
    u = net.u_c1_set if u_c1 is None else u_c1
    xs = _x_c2_list(net, len(gflc_currents), x_c2)
    e = cmath.rect(u, delta)
    i2 = [complex(c) for c in gflc_currents]
    i2_sum = sum(i2, 0j)
    u_pcc = d.alpha * e + (1.0 - d.alpha) * net.u_g + 1j * scale * (1.0 - d.alpha) * net.x_g * i2_sum
    i_c1 = (e - u_pcc) / (1j * scale * net.x_c1)
    i_g = (u_pcc - net.u_g) / (1j * scale * net.x_g)
    return BusSolution(
        u_pcc=Phasor.from_complex(u_pcc),
        u_c2=tuple(Phasor.from_complex(u_pcc + 1j * scale * x * i) for x, i in zip(xs, i2)),
        u_c1_terminal=Phasor(u, delta),
        i_c1=Phasor.from_complex(i_c1),
        i_g=Phasor.from_complex(i_g),
        i_c2=tuple(Phasor.from_complex(i) for i in i2),
    )


def solve_clc(
    i_c1: Phasor,
    gflc_currents: Sequence[Phasor],
    net: NetworkParams,
    *,
    x_c2: Sequence[float] | None = None,
    scale: float = 1.0,
) -> BusSolution:
    """Network solution with the GFMC as a saturated current source."""
    xs = _x_c2_list(net, len(gflc_currents), x_c2)
    i1 = complex(i_c1)
    i2 = [complex(c) for c in gflc_currents]
    i_g = i1 + sum(i2, 0j)
    u_pcc = net.u_g + 1j * scale * net.x_g * i_g
    return BusSolution(
        u_pcc=Phasor.from_complex(u_pcc),
        u_c2=tuple(Phasor.from_complex(u_pcc + 1j * scale * x * i) for x, i in zip(xs, i2)),
        u_c1_terminal=Phasor.from_complex(u_pcc + 1j * scale * net.x_c1 * i1),
        i_c1=Phasor.from_complex(i1),
        i_g=Phasor.from_complex(i_g),
        i_c2=tuple(Phasor.from_complex(i) for i in i2),
    )


def project_to_frame(p: Phasor, frame_angle: float) -> tuple[float, float]:
    """(d, q) components of ``p`` in a frame whose d-axis leads the x-axis by ``frame_angle``."""
    a = p.angle - frame_angle
    return p.magnitude * math.cos(a), p.magnitude * math.sin(a)


def terminal_power(sol: BusSolution) -> float:
    """Active power delivered by the GFMC, Re{U * conj(I)} at its terminal."""
    return (sol.u_c1_terminal.z * sol.i_c1.z.conjugate()).real


def gfmc_power(
    mode: str,
    delta: float,
    gflc_currents: Sequence[Phasor],
    net: NetworkParams,
    derived: DerivedParams | None = None,
    *,
    i_c1: Phasor | None = None,
    u_c1: float | None = None,
) -> float:
    """Closed-form GFMC active power in either mode.

    CVC: ``u_c1*u_g*y_1g*sin(delta) - alpha*u_c1*sum(I_c2*cos(delta - phi_c2))``.
    CLC: ``u_g*I_c1*cos(phi_c1) - x_g*I_c1*sum(I_c2*sin(phi_c2 - phi_c1))``.
    """
    d = derived or derive_params(net)
    if mode == CVC:
        u = net.u_c1_set if u_c1 is None else u_c1
        p = u * net.u_g * d.y_1g * math.sin(delta)
        for c in gflc_currents:
            p -= d.alpha * u * c.magnitude * math.cos(delta - c.angle)
        return p
    if mode == CLC:
        if i_c1 is None:
            raise ValueError("CLC power needs the GFMC current phasor")
        p = net.u_g * i_c1.magnitude * math.cos(i_c1.angle)
        for c in gflc_currents:
            p -= d.gamma * i_c1.magnitude * c.magnitude * math.sin(c.angle - i_c1.angle)
        return p
    raise ValueError(f"unknown mode {mode!r}")
