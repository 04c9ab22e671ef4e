"""Viscous approximation of u_t + f(u)_y = u_xx and its vanishing-viscosity rate.

Submodules:

* :mod:`anisovisc.grid` -- grids, fields, time specification
* :mod:`anisovisc.flux` -- flux models and the Godunov flux
* :mod:`anisovisc.solver` -- operator-splitting time stepping
* :mod:`anisovisc.reference` -- exact and discrete reference solutions
* :mod:`anisovisc.entropy` -- test functions, entropy pairs, residuals
* :mod:`anisovisc.diagnostics` -- mass, TV, cone errors, rate fits
* :mod:`anisovisc.experiment` -- config-driven workflows and the CLI
"""

from .diagnostics import (RateReport, cone_l1_error, mass, rate_fit,
                          time_derivative_l1, total_variation)
from .entropy import (ConeSpec, Cutoff, Mollifier, PsiProfile, Ramp, TestFunction,
                      TimeWindow, build_test_function, entropy_residual, eta_entropy,
                      eta_entropy_flux, sign_eta, weak_residual)
from .flux import FluxModel, burgers, linear, lipschitz_bound, numerical_flux, parse_flux
from .grid import Field, GridSpec, TimeSpec, make_grid, project_initial
from .reference import (ReferenceSpec, exact_1d_riemann_burgers, exact_linear_gaussian,
                        reference_field, travelling_jump_history)
from .solver import (SolveResult, SolverConfig, SolverError, advance, cfl_dt,
                     step_convection_y, step_diffusion_x, step_diffusion_y)

__version__ = "0.1.0"
