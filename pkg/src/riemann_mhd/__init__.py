"""Riemann simple and double waves of ideal magnetohydrodynamics.

Closed-form constructors, implicit phase solvers and finite-difference
verification of the resulting fields.
"""
from .core import (Eigenvector, Family, FluidModel, State, WaveFamily, WaveVector, characteristic_speeds,
                   characteristic_wave_vector, dispersion_residual, eigenvector, flux_jacobian,
                   wave_matrix, wave_relation_residual)
from .double_waves import existence_table, integrate_beta_ode
from .errors import (ConstructionError, DegenerateWaveError, GradientCatastrophe, InputError, NoConvergence,
                     PhaseError, ProfileError, RiemannMHDError, SamplingError, VerificationFailure)
from .gmc import gmc_commutator_residual, gmc_span_residual, gmc_tangency_residual, jacobian_rank
from .phase import solve_phase, solve_phase2
from .profiles import parse_profile
from .registry import FIXTURES, build, fixture
from .specfun import hyp2f1, hyp2f1_oracle
from .verify import (GridSpec, circulation, convergence_order, current, div_h, lorentz_force, pde_residual,
                     sample_field, vorticity)

__version__ = "0.1.0"
