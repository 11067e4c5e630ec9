"""Physical constants (CODATA 2018 exact SI values) and package defaults."""

import numpy as np

BOLTZMANN = 1.380649e-23  # J/K
ELEMENTARY_CHARGE = 1.602176634e-19  # C
ZERO_CELSIUS = 273.15  # K

T_REF = 298.15  # K, 25 degC

#: -40 .. 85 degC in 5 degC steps, in kelvin
DEFAULT_GRID_C = np.arange(-40.0, 85.0 + 2.5, 5.0)
DEFAULT_GRID_K = DEFAULT_GRID_C + ZERO_CELSIUS

BETA_FLOOR = 1e-9
