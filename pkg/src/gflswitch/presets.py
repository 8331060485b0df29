"""Scenario presets for the two test systems.

Test system 1 (cases 1-8) uses the 200 MVA base with branch reactances
0.05/0.03/0.58 pu and PLL integral gain 100.  Powers are given in MW and
converted to pu here.  Test system 2 (cases 9-10) uses reactances
0.26/0.05/0.4 pu, droop 0.02 and a 200 ms dip to 0.01 pu.

Values that the source tables leave open are chosen here and marked
``# chosen``.
"""

from __future__ import annotations

import math

from .converters import GflcParams, GfmcParams
from .phasor import NetworkParams
from .simulator import FaultSpec, ScenarioConfig, SimSettings

S_BASE = 200.0  # MVA

# case: (t_c, P_c1 MW, P_c2 MW, K_q, k_2p, I_c1max, eta_1, rho)
SYSTEM1_TABLE = {
    1: (0.05, 35, 110, 3.0, 0.07, 1.1, 0.0, 0.3),
    2: (0.05, 35, 110, 3.0, 0.07, 1.25, 0.0, 0.3),
    3: (0.05, 35, 110, 3.0, 0.07, 1.7, 0.0, 0.3),
    4: (0.1, 35, 70, 3.0, 0.15, 1.2, 0.0, 0.3),
    5: (0.1, 35, 70, 0.5, 0.15, 1.2, -math.pi / 2, 0.3),
    6: (0.15, 20, 100, 3.0, 0.15, 1.1, 0.0, 0.5),
    7: (0.15, 20, 100, 0.5, 0.15, 1.1, -math.pi / 2, 0.5),
    8: (0.2, 40, 60, 0.0, 0.075, 1.3, 0.0, 0.1),
}
SYSTEM1_NET = dict(x_c1=0.05, x_c2=0.03, x_g=0.58)
SYSTEM1_K2I = 100.0
SYSTEM1_DROOP = 0.04

SYSTEM2_NET = dict(x_c1=0.26, x_c2=0.05, x_g=0.4)
SYSTEM2_DROOP = 0.02
SYSTEM2_FAULT = (0.2, 0.01)
# (k_2p, k_2i, P MW) per GFLC group
SYSTEM2_CASE9 = [(0.25, 100.0, 60.2)]
SYSTEM2_CASE10 = [(0.25, 100.0, 27.9), (0.15, 50.0, 16.8), (0.6, 100.0, 8.4)]
SYSTEM2_GFMC_P = 6.0  # MW, chosen
SYSTEM2_GFMC_IMAX = 0.132  # pu on 200 MVA: 1.1 x 24 MVA rating, chosen

GFLC_IMAX = 1.2  # chosen
T_END = 5.0
FAULT_START = 1.0


def _system1(case: int) -> ScenarioConfig:
    t_c, p1, p2, k_q, k_2p, i_max, eta_1, rho = SYSTEM1_TABLE[case]
    return ScenarioConfig(
        net=NetworkParams(**SYSTEM1_NET),
        gfmc=GfmcParams(m_p=SYSTEM1_DROOP, p_ref=p1 / S_BASE, i_max=i_max, eta_1=eta_1),
        gflcs=[GflcParams(k_2p=k_2p, k_2i=SYSTEM1_K2I, x_c2=SYSTEM1_NET["x_c2"], i_d_ref=p2 / S_BASE, k_q=k_q, i_max=GFLC_IMAX)],
        gflc_p_ref=[p2 / S_BASE],
        fault=FaultSpec(t_start=FAULT_START, duration=t_c, rho=rho),
        sim=SimSettings(t_end=T_END),
        name=f"CASE{case}",
    )


def _system2(groups, name) -> ScenarioConfig:
    t_c, rho = SYSTEM2_FAULT
    return ScenarioConfig(
        net=NetworkParams(**SYSTEM2_NET),
        gfmc=GfmcParams(m_p=SYSTEM2_DROOP, p_ref=SYSTEM2_GFMC_P / S_BASE, i_max=SYSTEM2_GFMC_IMAX, eta_1=0.0, epsilon=0.0),
        gflcs=[
            GflcParams(k_2p=kp, k_2i=ki, x_c2=SYSTEM2_NET["x_c2"], i_d_ref=p / S_BASE, k_q=3.0, i_max=GFLC_IMAX)
            for kp, ki, p in groups
        ],
        gflc_p_ref=[p / S_BASE for _, _, p in groups],
        fault=FaultSpec(t_start=FAULT_START, duration=t_c, rho=rho),
        sim=SimSettings(t_end=T_END),
        name=name,
    )


def preset(name: str, vfdc: bool | None = None) -> ScenarioConfig:
    """Fully populated config for ``CASE1`` .. ``CASE10``; ``vfdc`` overrides the flags."""
    key = name.upper()
    if key.startswith("CASE") and key[4:].isdigit():
        num = int(key[4:])
        if num in SYSTEM1_TABLE:
            cfg = _system1(num)
        elif num == 9:
            cfg = _system2(SYSTEM2_CASE9, "CASE9")
        elif num == 10:
            cfg = _system2(SYSTEM2_CASE10, "CASE10")
        else:
            raise KeyError(name)
    else:
        raise KeyError(name)
    return cfg.with_vfdc(vfdc) if vfdc is not None else cfg


PRESET_NAMES = [f"CASE{i}" for i in range(1, 11)]
