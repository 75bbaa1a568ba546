"""Hot-kernel dispatch: compiled extension when importable, NumPy fallback otherwise.

Set ``PHOTONSTARVED_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("PHOTONSTARVED_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

displaced_thermal_logpmf = _impl.displaced_thermal_logpmf
fwht_rows = _impl.fwht_rows
frame_scores = _impl.frame_scores

__all__ = ["BACKEND", "displaced_thermal_logpmf", "fwht_rows", "frame_scores"]
