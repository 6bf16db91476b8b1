from .fit import FitOptions, FitResult, PointState, fit
from .gaussian import GaussianApprox, Problem, build_problem, gaussian_approximation, log_posterior_theta
from .marginals import (
    MarginalTable, PosteriorMarginal, SLADensity, SkewnessOverflow, integrate_marginals,
    laplace_marginal, sla_marginal,
)
from .theta import ThetaExploration, explore, find_mode, hyperparameter_marginals


def find_mode_theta(problem, init=None):
    """Mode of the approximate hyperparameter posterior for a compiled problem."""
    import numpy as np

    from .fit import DEFAULT_INIT_LOG_PRECISION

    init = np.full(problem.n_hyper, DEFAULT_INIT_LOG_PRECISION) if init is None else init
    return find_mode(lambda t: log_posterior_theta(t, problem), init).theta


def explore_theta(problem, theta_star, delta_z=1.0, delta_pi=2.5):
    return explore(lambda t: log_posterior_theta(t, problem), theta_star, delta_z, delta_pi)
