"""Compiled kernels vs the pure-Python fallback."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scmref import _kernels_py as py
from scmref import kernels
from scmref.errors import SolverError

cy = pytest.importorskip("scmref._kernels")


def test_backend_is_compiled_by_default():
    assert kernels.BACKEND == "cython"


def test_env_forces_python_backend():
    code = "import scmref.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, SCMREF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@given(st.floats(-12, 5))
def test_acm_f_agree(lg):
    x = 10.0**lg
    assert cy.acm_f(x) == py.acm_f(x)


@given(st.floats(-40, 60))
def test_acm_f_inv_agree(v):
    assert cy.acm_f_inv(v) == pytest.approx(py.acm_f_inv(v), rel=1e-13)


@given(st.floats(1.01, 20.0), st.floats(0.0, 6.0))
def test_solve_if2_agree(alpha, extra):
    rhs = math.log(alpha) + extra
    a, b = cy.solve_if2(alpha, rhs), py.solve_if2(alpha, rhs)
    assert (math.isnan(a) and math.isnan(b)) or a == pytest.approx(b, rel=1e-12)


def test_solve_if2_infeasible_is_nan():
    assert math.isnan(cy.solve_if2(3.0, math.log(3.0)))
    assert math.isnan(py.solve_if2(3.0, 0.5))


@given(st.floats(-6, 4), st.floats(0.0, 5.0))
def test_solve_beta_agree(lg, target):
    x = 10.0**lg
    a, b = cy.solve_beta(x, target, 1e-9), py.solve_beta(x, target, 1e-9)
    assert (math.isnan(a) and math.isnan(b)) or a == pytest.approx(b, rel=1e-11, abs=1e-15)


def test_many_and_cell_agree():
    rhs = np.linspace(1.2, 3.0, 26)
    w = np.linspace(0.9, 1.1, 26)
    assert np.allclose(cy.solve_if2_many(2.9, rhs), py.solve_if2_many(2.9, rhs), rtol=1e-13)
    assert cy.box_tc_cell(2.9, rhs, w, 125.0) == pytest.approx(py.box_tc_cell(2.9, rhs, w, 125.0), rel=1e-12)


def test_cell_nan_when_any_point_infeasible():
    rhs = np.array([2.0, 0.5])
    assert math.isnan(cy.box_tc_cell(2.9, rhs, np.ones(2), 1.0))
    assert math.isnan(py.box_tc_cell(2.9, rhs, np.ones(2), 1.0))


def test_zeroin_iteration_cap_raises():
    # a target beyond the upper bracket cap cannot be bracketed
    with pytest.raises(SolverError):
        py.solve_if2(2.0, 1e200)
    with pytest.raises(SolverError):
        cy.solve_if2(2.0, 1e200)
