"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the NumPy/Python
implementations take over.  Setting ``PDPTOOLS_PURE_PYTHON=1`` forces the
fallback.  ``BACKEND`` names the active choice.
"""

import os

from . import _pykernels

python_kernels = _pykernels

try:
    if os.environ.get("PDPTOOLS_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure Python backend requested")
    from . import _ckernels as compiled_kernels
except ImportError:
    compiled_kernels = None

active = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "compiled" if compiled_kernels is not None else "python"


def get(name=None):
    """Kernel module by name (``"compiled"``/``"python"``), default active."""
    if name is None:
        return active
    if name == "python":
        return python_kernels
    if name == "compiled":
        if compiled_kernels is None:
            raise ImportError("compiled kernels are not built")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")
