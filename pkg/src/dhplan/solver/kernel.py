"""Select the simplex iteration kernel at import time.

The compiled extension is preferred; set ``DHPLAN_PURE_PYTHON=1`` to force the
numpy fallback (used by the equivalence tests and the benchmark).
"""
import os

from . import _simplex_py

pure = _simplex_py

if os.environ.get("DHPLAN_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _simplex as compiled
    except ImportError:  # extension not built
        compiled = None

active = compiled or pure
iterate = active.iterate
BACKEND = active.BACKEND
