"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` module is used. Setting ``MIACOMP_PURE_PYTHON=1``
forces the fallback.
"""

import os

from . import _pykernels

kernels = _pykernels
BACKEND = "python"

if os.environ.get("MIACOMP_PURE_PYTHON") != "1":
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        kernels = _kernels
        BACKEND = "compiled"


def get_kernels(name=None):
    """Return a kernel module by name ("compiled" or "python"); default is the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
