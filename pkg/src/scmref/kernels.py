"""Backend selection for the hot kernels.

The compiled extension is preferred; set ``SCMREF_PURE_PYTHON=1`` to force
the pure-Python fallback (the benchmark and the backend-agreement tests do).
"""

import os

from . import _kernels_py

if os.environ.get("SCMREF_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

acm_f = _impl.acm_f
acm_f_inv = _impl.acm_f_inv
scm_lhs = _impl.scm_lhs
beta_lhs = _impl.beta_lhs
solve_if2 = _impl.solve_if2
solve_if2_many = _impl.solve_if2_many
box_tc_cell = _impl.box_tc_cell
solve_beta = _impl.solve_beta
