"""Gaussian approximation of the latent field at fixed hyperparameters.

Linear constraints ``C x = e`` are imposed by conditioning by kriging: the
unconstrained system is solved with the Cholesky factor of the full
precision and the solution is corrected with ``Q^-1 C' (C Q^-1 C')^-1``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import linalg

from .. import gmrf
from ..errors import NewtonDivergence, NumericalError
from ..likelihood import BinomialLogit
from ..model import assemble_layout, incidence, log_hyperprior, log_prior_density, prior_precision

NEWTON_TOL = 1e-6
NEWTON_MAXITER = 50
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class Problem:
    """A compiled model: layout, incidence matrix and observation model."""

    layout: object
    A: object
    likelihood: object
    spec: object = None

    @property
    def n(self):
        return self.layout.n

    @property
    def n_hyper(self):
        return self.layout.n_hyper

    @property
    def constraints(self):
        return self.layout.constraint_rows


def build_problem(spec, data, graphs=None, likelihood=None):
    layout = assemble_layout(spec, data, graphs)
    lik = BinomialLogit(data.y, data.n) if likelihood is None else likelihood
    return Problem(layout, incidence(layout, data), lik, spec)


def log_joint(problem, x, theta):
    """``log pi(y | x) + log pi(x | theta) + log pi(theta)`` (theta on the log scale)."""
    eta = problem.A @ x
    return (
        float(np.sum(problem.likelihood.loglik(eta)))
        + float(log_prior_density(problem.layout, x, theta))
        + log_hyperprior(problem.layout, theta)
    )


@dataclass(frozen=True, eq=False)
class GaussianApprox:
    theta: np.ndarray
    mode: np.ndarray
    eta: np.ndarray
    factor: gmrf.CholeskyFactor
    cmat: np.ndarray
    crhs: np.ndarray
    log_density_at_mode: float
    log_posterior: float
    iterations: int
    covariance: np.ndarray = None

    @property
    def mu(self):
        return self.mode

    @property
    def sigma(self):
        if self.covariance is None:
            raise NumericalError("approximation was built without variances")
        return np.sqrt(np.diag(self.covariance))

    def covariance_column(self, i):
        """Column ``i`` of the constrained covariance, from one solve against ``e_i``."""
        e = np.zeros(len(self.mode))
        e[i] = 1.0
        col = gmrf.solve(self.factor, e)
        if len(self.cmat):
            v = gmrf.solve(self.factor, self.cmat.T)
            w = self.cmat @ v
            col = col - v @ linalg.solve(w, self.cmat @ col, assume_a="pos")
        return col


class _Constrained:
    """Kriging correction for one factorization."""

    def __init__(self, factor, cmat):
        self.factor = factor
        self.cmat = cmat
        if len(cmat):
            self.v = gmrf.solve(factor, cmat.T)
            self.w = cmat @ self.v
            self.w_chol = linalg.cho_factor(self.w, lower=True)
        else:
            self.v = self.w = self.w_chol = None

    def solve(self, b, rhs):
        x = gmrf.solve(self.factor, b)
        if self.v is not None:
            x = x - self.v @ linalg.cho_solve(self.w_chol, self.cmat @ x - rhs)
        return x

    def log_det_w(self):
        if self.w_chol is None:
            return 0.0
        return 2.0 * float(np.sum(np.log(np.diag(self.w_chol[0]))))

    def covariance(self):
        cov = gmrf.covariance(self.factor)
        if self.v is not None:
            cov = cov - self.v @ linalg.cho_solve(self.w_chol, self.v.T)
        return 0.5 * (cov + cov.T)


def _project(x, cmat, rhs):
    if not len(cmat):
        return x
    return x - cmat.T @ np.linalg.solve(cmat @ cmat.T, cmat @ x - rhs)


def newton_mode(problem, theta, cmat=None, crhs=None, x0=None, tol=NEWTON_TOL, maxiter=NEWTON_MAXITER):
    """Constrained Newton iterations for the mode of ``pi(x | theta, y)``.

    Returns ``(x, factor, constrained, iterations)`` where ``factor`` is the
    Cholesky factor of ``Q_prior + A' diag(-d2) A`` at the returned mode.
    """
    layout = problem.layout
    cmat = layout.constraint_rows if cmat is None else np.asarray(cmat, dtype=float)
    crhs = np.zeros(len(cmat)) if crhs is None else np.asarray(crhs, dtype=float)
    qp = prior_precision(layout, theta).to_dense()
    A = problem.A
    lik = problem.likelihood
    if len(cmat):
        # kappa * C'C vanishes on {Cx = e}: the constrained Gaussian is unchanged,
        # but confounded intrinsic null spaces no longer make the system singular
        kappa = float(np.mean(np.diag(qp))) or 1.0
        qp = qp + kappa * (cmat.T @ cmat)
    x = np.zeros(layout.n) if x0 is None else np.array(x0, dtype=float)
    x = _project(x, cmat, crhs)

    def objective(x):
        # constant on the constraint set, so the augmented precision is fine here too
        eta = A @ x
        return float(np.sum(lik.loglik(eta))) - 0.5 * float(x @ qp @ x), eta

    f, eta = objective(x)
    trace = []
    for it in range(1, maxiter + 1):
        d1, d2, _ = lik.derivatives(eta)
        c = -d2
        q = qp + (A.T @ A.multiply(c[:, None])).toarray()
        factor = gmrf.cholesky(q)
        con = _Constrained(factor, cmat)
        x_new = con.solve(A.T @ (d1 + c * eta), crhs)
        step = x_new - x
        t = 1.0
        for _ in range(40):
            f_new, eta_new = objective(x + t * step)
            if f_new >= f - 1e-10 * (1.0 + abs(f)):
                break
            t *= 0.5
        else:
            raise NewtonDivergence("line search failed to increase the objective", trace)
        x = x + t * step
        f, eta = f_new, eta_new
        size = float(np.max(np.abs(t * step))) if step.size else 0.0
        trace.append(size)
        if not np.isfinite(size):
            raise NewtonDivergence("non-finite Newton step", trace)
        if size < tol:
            d1, d2, _ = lik.derivatives(eta)
            q = qp + (A.T @ A.multiply((-d2)[:, None])).toarray()
            factor = gmrf.cholesky(q)
            return x, factor, _Constrained(factor, cmat), it
    raise NewtonDivergence(f"Newton iterations did not converge in {maxiter} steps", trace)


def _log_gaussian_at_mode(factor, con):
    """Log-density of the constrained Gaussian approximation at its own mode.

    ``pi(x* | Cx = e) = pi(x*) / pi_Cx(e)`` per unit area of the constraint
    surface; the quadratic forms cancel and what is left is
    ``(log|Q| + log|W| - log|CC'|) / 2 - (n - k)/2 log(2 pi)`` with
    ``W = C Q^-1 C'``. The sum ``log|Q| + log|W|`` does not change when
    ``Q`` picks up a multiple of ``C'C``.
    """
    n = factor.source_dim
    k = len(con.cmat)
    out = 0.5 * factor.log_det - 0.5 * (n - k) * LOG_2PI
    if k:
        out += 0.5 * con.log_det_w()
        out -= 0.5 * float(np.linalg.slogdet(con.cmat @ con.cmat.T)[1])
    return out


def gaussian_approximation(theta, problem, x0=None, variances=True):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    cmat = problem.constraints
    crhs = np.zeros(len(cmat))
    x, factor, con, iters = newton_mode(problem, theta, cmat, crhs, x0=x0)
    log_g = _log_gaussian_at_mode(factor, con)
    lp = log_joint(problem, x, theta) - log_g
    return GaussianApprox(
        theta=theta, mode=x, eta=np.asarray(problem.A @ x), factor=factor, cmat=cmat, crhs=crhs,
        log_density_at_mode=log_g, log_posterior=lp, iterations=iters,
        covariance=con.covariance() if variances else None,
    )


def log_posterior_theta(theta, problem, x0=None):
    """Unnormalized ``log pi~(theta | y)`` from the Laplace ratio at ``x*(theta)``."""
    return gaussian_approximation(theta, problem, x0=x0, variances=False).log_posterior


def laplace_log_ratio(problem, theta, cmat, crhs, x0=None):
    """Laplace ratio under extra linear constraints; returns ``(value, mode)``."""
    x, factor, con, _ = newton_mode(problem, theta, cmat, crhs, x0=x0)
    return log_joint(problem, x, theta) - _log_gaussian_at_mode(factor, con), x
