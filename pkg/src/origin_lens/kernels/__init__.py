"""Hot numeric kernels with backend selection at import time.

The compiled Cython core is preferred when present; a pure-numpy fallback
keeps the package functional without it. Force a backend with
ORIGIN_LENS_KERNELS=compiled|python (default: auto).

Both backends satisfy the same contracts; floating-point results may differ
in the last ulps because summation order differs, so cross-backend
comparisons should use tolerances, not bit equality.
"""

import os

_requested = os.environ.get("ORIGIN_LENS_KERNELS", "auto")

if _requested not in ("auto", "compiled", "python"):
    raise ImportError(
        f"ORIGIN_LENS_KERNELS={_requested!r}: expected auto, compiled, or python"
    )

if _requested == "python":
    from . import _fallback as _impl
else:
    try:
        from . import _core as _impl
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _fallback as _impl

BACKEND = _impl.BACKEND_NAME

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2x2_forward = _impl.maxpool2x2_forward
maxpool2x2_backward = _impl.maxpool2x2_backward
set_num_threads = _impl.set_num_threads


def available_backends():
    """Names of importable backends, fallback first."""
    names = ["python"]
    try:
        from . import _core  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return names
