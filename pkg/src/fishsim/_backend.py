"""Select the integration kernel at import time.

The compiled ``_ckernel`` is used when it was built; otherwise the pure-Python
``_pykernel``.  Setting ``FISHSIM_BACKEND=python`` forces the fallback.
"""
import os

from fishsim import _pykernel

KERNELS = {"python": _pykernel}
try:
    from fishsim import _ckernel
except ImportError:
    pass
else:
    KERNELS["cython"] = _ckernel

if os.environ.get("FISHSIM_BACKEND", "").lower() == "python" or "cython" not in KERNELS:
    BACKEND = "python"
else:
    BACKEND = "cython"
kernel = KERNELS[BACKEND]
