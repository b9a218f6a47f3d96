"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``QMPEMBA_BACKEND=python`` is set, the numpy fallback is
loaded.  ``BACKEND`` records which one is active.
"""

import os

from . import _pycore

if os.environ.get("QMPEMBA_BACKEND", "").lower() == "python":
    kernels = _pycore
    BACKEND = "python"
else:
    try:
        from . import _core as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = _pycore
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
