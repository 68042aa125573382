"""Kernel backend selection.

The hot numeric kernels exist twice: a numba-jitted version and a pure-numpy
fallback.  `PROBCERT_BACKEND` picks one:

    PROBCERT_BACKEND=numba   force the jitted kernels (error if unavailable)
    PROBCERT_BACKEND=numpy   force the pure-numpy fallback
    unset / auto             numba when importable, else numpy

`benchmarks/bench_kernels.py` compares the two paths.
"""

from __future__ import annotations

import os
import warnings

_choice = os.environ.get("PROBCERT_BACKEND", "auto").lower()

if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"PROBCERT_BACKEND must be auto|numba|numpy, got {_choice!r}")

if _choice == "numpy":
    from . import _numpy as active
else:
    try:
        from . import _numba as active
    except ImportError:
        if _choice == "numba":
            raise
        warnings.warn("numba unavailable; falling back to pure-numpy kernels")
        from . import _numpy as active

BACKEND_NAME = "numpy" if active.__name__.endswith("_numpy") else "numba"

ibp_bounds = active.ibp_bounds
dual_terms = active.dual_terms
objective_value = active.objective_value
objective_grad = active.objective_grad
DEGENERATE_NORM = active.DEGENERATE_NORM
AT_LOWER = active.AT_LOWER
AT_ZERO = active.AT_ZERO
AT_UPPER = active.AT_UPPER
