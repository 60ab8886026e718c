"""Stability of Picard iteration for coupled 1-D transport / fuel-pin thermal feedback.

Two routes to the same number:

* :mod:`picard_nth.fourier` predicts the spectral radius of the coupled
  iteration in closed form, together with the optimal underrelaxation factor.
* :mod:`picard_nth.coupling` measures it by running the relaxed fixed-point
  loop on an S_N / diamond-difference slab model (:mod:`picard_nth.transport`,
  :mod:`picard_nth.thermal`).
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    IntegrationError,
    InvalidOrderError,
    NoValidRelaxationError,
    NonAsymptoticError,
    NotMeasurableError,
    PicardError,
    TemperatureExcursionError,
)
from .model import (
    BaseState,
    CrossSections,
    PinGeometry,
    ReactorConfig,
    ScalarField,
    derive_base_state,
    load_config,
    reference_config,
    xs_at_temperature,
)
from .fourier import (
    XI_INF,
    FAParams,
    feedback_ratio,
    omega_opt,
    picard_gain,
    rho_pi,
    rho_pi_by_quadrature,
    spectral_radius_fa,
)
from .transport import (
    EigenSolution,
    Quadrature,
    dd_sweep,
    gauss_legendre,
    solve_fixed_source,
    solve_k_eigenvalue,
)
from .thermal import coolant_axial, fuel_temperature, linear_power
from .coupling import (
    CoupledSolution,
    IterationTrace,
    PicardOperator,
    aa1_solve,
    estimate_spectral_radius_numerical,
    picard_solve,
)

__version__ = "0.1.0"
