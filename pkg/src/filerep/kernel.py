"""Selects the compiled event-loop kernel, falling back to pure Python.

Set ``FILEREP_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and the cross-backend tests).  Both kernels draw from the same RNG stream,
so results do not depend on the backend.
"""

import os

from . import _ctmc_py

if os.environ.get("FILEREP_PURE_PYTHON", "0") not in ("0", ""):
    _impl = _ctmc_py
    BACKEND = "python"
else:
    try:
        from . import _ctmc as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _ctmc_py
        BACKEND = "python"

run_events = _impl.run_events
run_grid = _impl.run_grid
BLOCK = _ctmc_py.BLOCK
