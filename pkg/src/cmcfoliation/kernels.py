"""Select the compiled kernel module, falling back to pure Python.

Set ``CMCFOLIATION_PURE=1`` to force the fallback (used by the benchmark
and by the equivalence tests).
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CMCFOLIATION_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py

profile_eval = _impl.profile_eval
integrate_profile = _impl.integrate_profile

STOP_MAX_S = _kernels_py.STOP_MAX_S
STOP_AXIS = _kernels_py.STOP_AXIS
STOP_R_ABOVE = _kernels_py.STOP_R_ABOVE
STOP_Z_ABOVE = _kernels_py.STOP_Z_ABOVE
STOP_VERTICAL = _kernels_py.STOP_VERTICAL
STOP_UNDERFLOW = _kernels_py.STOP_UNDERFLOW
STOP_MAX_STEPS = _kernels_py.STOP_MAX_STEPS

STOP_NAMES = {
    STOP_MAX_S: "max_s",
    STOP_AXIS: "axis",
    STOP_R_ABOVE: "r_above",
    STOP_Z_ABOVE: "z_above",
    STOP_VERTICAL: "vertical",
    STOP_UNDERFLOW: "underflow",
    STOP_MAX_STEPS: "max_steps",
}
