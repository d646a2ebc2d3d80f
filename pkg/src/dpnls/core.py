"""Kernel backend selection.

The compiled extension is used when importable; ``DPNLS_PURE=1`` forces the
pure-Python fallback.
"""
import os

from . import _core_py

BACKEND = "python"
if os.environ.get("DPNLS_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _core_py
else:
    _impl = _core_py

shoot_integrate = _impl.shoot_integrate
nonlinear_phase = _impl.nonlinear_phase
