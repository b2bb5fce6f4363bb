"""Continuous-time primal-dual (PDGD) and proportional-integral (PI) flows for
linearly constrained, strongly convex minimization."""

from .core import (ConstraintSet, ContractError, GainConfig, IntegrationError,
                   InfeasibleProblemError, Problem, RankDeficiencyError, State,
                   Trace, constraint_violation)
from .lagrangian import (grad_lambda_penalty, grad_x_penalty, lagrangian_value,
                         penalty, penalty_value)
from .dynamics import kkt_residual, make_field, pdgd_field, pi_field
from .integrator import IntegratorSpec, integrate, run
from .analysis import (rate_bound, scalar_mode_eigenvalues, scalar_mode_matrices,
                       spectral_bounds)
from .oracle import active_set_qp, kkt_polish, lp_vertex
from .problems import (build_linf_lp, filter_bank, fit_index, make_sysid_dataset,
                       random_qp, simulate_tf)

__version__ = "0.1.0"
