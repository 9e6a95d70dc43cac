"""Backend selection for the numeric kernels.

The compiled extension ``_kernels_c`` is used when it imports; otherwise the
numpy implementation in ``_kernels_py`` is used.  Set ``SEQMC_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SEQMC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

csm_bounds = _impl.csm_bounds
propagate = _impl.propagate
simctest_extend = _impl.simctest_extend


def available_backends():
    """Map backend name to kernel module for every backend that imports."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels_c

        out["cython"] = _kernels_c
    except ImportError:
        pass
    return out
