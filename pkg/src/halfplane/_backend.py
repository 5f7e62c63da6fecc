"""Pick the compiled kernels when importable, else the pure-Python twin.

Set ``HALFPLANE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("HALFPLANE_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        kernels = _fallback

BACKEND = kernels.BACKEND
STATUS_OK = _fallback.STATUS_OK
STATUS_DOMAIN_EXIT = _fallback.STATUS_DOMAIN_EXIT
STATUS_STEP_LIMIT = _fallback.STATUS_STEP_LIMIT
STATUS_QUAD_FAIL = _fallback.STATUS_QUAD_FAIL


def available_backends():
    out = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
