"""Transient stability of grid-following converters beside a current-limited grid-forming converter.

The GFMC (droop-controlled, switching between constant-voltage and
current-limit control) and any number of PLL-synchronised GFLCs share one
PCC behind a grid reactance.  Modules:

- :mod:`.phasor`: network algebra in both GFMC modes
- :mod:`.converters`: PLL, droop, limiter, ride-through and VFDC laws
- :mod:`.switching`: mode-switching guards and their closed forms
- :mod:`.simulator`: hybrid fixed-step simulation with event location
- :mod:`.analysis`: equilibria, Lyapunov energy, damping lines, boundaries
- :mod:`.basin`: brute-force basins and critical clearing times
- :mod:`.presets`, :mod:`.records`, :mod:`.cli`: scenarios, I/O and the command line
"""

from .kernels import BACKEND
from .phasor import CLC, CVC, NetworkParams, Phasor
from .presets import PRESET_NAMES, preset
from .simulator import ScenarioConfig, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CLC",
    "CVC",
    "NetworkParams",
    "PRESET_NAMES",
    "Phasor",
    "ScenarioConfig",
    "preset",
    "run_scenario",
]
