"""Analytical design toolkit for self-cascode MOSFET constant-with-temperature current references."""

from .acm import DeviceFlavor, TechProfile, Temperature, thermal_voltage
from .errors import (
    ConfigError,
    DegenerateDesignError,
    DomainError,
    InfeasibleDesignError,
    SaturationError,
    ScmrefError,
    SolverError,
)
from .explorer import ValleyFit, ValleyPoint, fit_valley, grid_tc_map, guess_alpha, methodology_loop, valley_for_alpha
from .kernels import BACKEND
from .metrics import box_ls, box_tc, first_order_variability, monte_carlo_variability, s_iref_closed_form
from .model import (
    DeltaVtProfile,
    DesignPoint,
    LeakagePerturbation,
    OperatingPoint,
    operating_point,
    reference_current,
    solve_if2,
    temperature_sweep,
)
from .sizing import DeviceLUT, SizingResult, size_acm, size_lut, vdd_min

__version__ = "0.1.0"
