"""Backend selection for the tree kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Set ``POLYATEST_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    BACKENDS["compiled"] = _kernels_c

_requested = os.environ.get("POLYATEST_BACKEND", "").strip().lower()
if _requested == "python" or _kernels_c is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"

_impl = BACKENDS[BACKEND]
log_ml_1d_idx = _impl.log_ml_1d_idx
log_ml_2d_idx = _impl.log_ml_2d_idx
condopt_idx = _impl.condopt_idx
