"""Preset fidelity: every tabulated value is transcribed here independently and compared."""

import math

import pytest

from gflswitch.presets import PRESET_NAMES, preset

# case, t_c, P_gfmc MW, P_gflc MW, K_q, k_2p, GFMC limit, GFMC saturation angle, dip depth
SYSTEM1 = [
    (1, 0.05, 35, 110, 3, 0.07, 1.1, 0.0, 0.3),
    (2, 0.05, 35, 110, 3, 0.07, 1.25, 0.0, 0.3),
    (3, 0.05, 35, 110, 3, 0.07, 1.7, 0.0, 0.3),
    (4, 0.1, 35, 70, 3, 0.15, 1.2, 0.0, 0.3),
    (5, 0.1, 35, 70, 0.5, 0.15, 1.2, -math.pi / 2, 0.3),
    (6, 0.15, 20, 100, 3, 0.15, 1.1, 0.0, 0.5),
    (7, 0.15, 20, 100, 0.5, 0.15, 1.1, -math.pi / 2, 0.5),
    (8, 0.2, 40, 60, 0, 0.075, 1.3, 0.0, 0.1),
]


@pytest.mark.parametrize("row", SYSTEM1, ids=lambda r: f"CASE{r[0]}")
def test_system1_rows(row):
    case, t_c, p1, p2, k_q, k_2p, i_max, eta_1, rho = row
    cfg = preset(f"CASE{case}")
    assert (cfg.net.x_c1, cfg.net.x_c2, cfg.net.x_g) == (0.05, 0.03, 0.58)
    assert cfg.net.f_base == 50.0 and cfg.net.s_base == 200.0
    assert cfg.fault.duration == t_c and cfg.fault.rho == rho
    assert cfg.gfmc.p_ref == pytest.approx(p1 / 200)
    assert cfg.gfmc.m_p == 0.04
    assert cfg.gfmc.i_max == i_max and cfg.gfmc.eta_1 == pytest.approx(eta_1)
    (g,) = cfg.gflcs
    assert cfg.gflc_p_ref == [pytest.approx(p2 / 200)]
    assert (g.k_2p, g.k_2i, g.k_q) == (k_2p, 100.0, k_q)


def test_system2_single_group():
    cfg = preset("CASE9")
    assert (cfg.net.x_c1, cfg.net.x_c2, cfg.net.x_g) == (0.26, 0.05, 0.4)
    assert cfg.gfmc.m_p == 0.02
    assert cfg.gfmc.eta_1 == 0.0 and cfg.gfmc.epsilon == 0.0
    assert (cfg.fault.duration, cfg.fault.rho) == (0.2, 0.01)
    (g,) = cfg.gflcs
    assert (g.k_2p, g.k_2i) == (0.25, 100.0)
    assert cfg.gflc_p_ref == [pytest.approx(60.2 / 200)]


def test_system2_three_clusters():
    cfg = preset("CASE10")
    assert [(g.k_2p, g.k_2i) for g in cfg.gflcs] == [(0.25, 100.0), (0.15, 50.0), (0.6, 100.0)]
    assert cfg.gflc_p_ref == [pytest.approx(p / 200) for p in (27.9, 16.8, 8.4)]
    # 1.1 pu of the two 12 MVA units, expressed on the 200 MVA system base
    assert cfg.gfmc.i_max == pytest.approx(1.1 * 24 / 200)


def test_vfdc_flag_and_names():
    assert PRESET_NAMES == [f"CASE{i}" for i in range(1, 11)]
    on = preset("case4", vfdc=True)
    assert on.gfmc.vfdc_enabled and all(g.vfdc_enabled for g in on.gflcs)
    assert not preset("CASE4").gfmc.vfdc_enabled
    with pytest.raises(KeyError):
        preset("CASE11")
    for name in PRESET_NAMES:
        preset(name).validate()
