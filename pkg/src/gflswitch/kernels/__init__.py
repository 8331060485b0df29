"""Integration kernel with a compiled core and a pure-Python fallback.

The Cython extension ``_kernel`` is used when it has been built; set
``GFLSWITCH_PURE=1`` to force the fallback.  Both backends take the packed
arrays described in :mod:`.layout` and mutate the state in place.
"""

import os

import numpy as np

from . import _kernel_py
from .layout import NG, NS  # noqa: F401

_compiled = None
if os.environ.get("GFLSWITCH_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


class Kernel:
    """Thin adapter giving both backends one numpy-facing API."""

    def __init__(self, backend: str | None = None):
        backend = backend or BACKEND
        if backend == "cython" and _compiled is None:
            raise ImportError("compiled kernel is not available; build the extension first")
        if backend not in ("cython", "python"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend

    def _args(self, y, scal, gfl):
        if self.backend == "cython":
            return y, np.ascontiguousarray(scal, dtype=float), np.ascontiguousarray(gfl, dtype=float)
        return y.tolist(), scal.tolist(), gfl.tolist()

    def rhs(self, y: np.ndarray, scal: np.ndarray, gfl: np.ndarray) -> np.ndarray:
        dy = np.empty_like(y)
        if self.backend == "cython":
            _compiled.rhs(np.ascontiguousarray(y, dtype=float), *self._args(y, scal, gfl)[1:], dy)
            return dy
        yl, sl, gl = self._args(y, scal, gfl)
        out = [0.0] * len(yl)
        _kernel_py.rhs(yl, sl, gl, out)
        return np.array(out)

    def guard(self, y, scal, gfl) -> float:
        if self.backend == "cython":
            return _compiled.guard(np.ascontiguousarray(y, dtype=float), *self._args(y, scal, gfl)[1:])
        return _kernel_py.guard(*self._args(y, scal, gfl))

    def power(self, y, scal, gfl) -> float:
        if self.backend == "cython":
            return _compiled.gfmc_power(np.ascontiguousarray(y, dtype=float), *self._args(y, scal, gfl)[1:])
        return _kernel_py.gfmc_power(*self._args(y, scal, gfl))

    def rk4_step(self, y: np.ndarray, h: float, scal, gfl) -> None:
        if self.backend == "cython":
            _compiled.rk4_step(y, h, *self._args(y, scal, gfl)[1:])
            return
        yl, sl, gl = self._args(y, scal, gfl)
        _kernel_py.rk4_step(yl, h, sl, gl)
        y[:] = yl

    def advance(self, y: np.ndarray, dt: float, nsteps: int, scal, gfl, guard_dir: int, y_prev: np.ndarray):
        if self.backend == "cython":
            return _compiled.advance(y, dt, nsteps, *self._args(y, scal, gfl)[1:], guard_dir, y_prev)
        yl, sl, gl = self._args(y, scal, gfl)
        prev = [0.0] * len(yl)
        k, status = _kernel_py.advance(yl, dt, nsteps, sl, gl, guard_dir, prev)
        y[:] = yl
        y_prev[:] = prev
        return k, status


default_kernel = Kernel()
