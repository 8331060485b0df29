import math

import pytest

from gflswitch.converters import GflcParams, PllContext
from gflswitch.phasor import CLC, CVC, NetworkParams, Phasor


@pytest.fixture
def net():
    return NetworkParams()


def make_context(net, mode=CVC, delta=0.2, n=1, mags=None, offsets=None, pinned=None, i_c1=None, gflc=None):
    """A PLL context with the nominal single-GFLC gains for ``n`` identical GFLCs."""
    g = gflc or GflcParams()
    kp, ki = g.gains(net.f_base)
    mags = mags or [0.55] * n
    offsets = offsets or [0.0] * n
    pinned = pinned or [False] * n
    if mode == CLC and i_c1 is None:
        i_c1 = Phasor(1.1, delta)
    return PllContext(
        net=net,
        mode=mode,
        delta=delta,
        x_c2=tuple([g.x_c2] * n),
        k_p=tuple([kp] * n),
        k_i=tuple([ki] * n),
        mags=tuple(mags),
        offsets=tuple(offsets),
        pinned=tuple(pinned),
        i_c1=i_c1 if mode == CLC else None,
    )


TWO_PI = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
