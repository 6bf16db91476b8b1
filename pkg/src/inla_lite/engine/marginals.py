"""Posterior marginals for latent components: Gaussian, simplified Laplace
and full Laplace densities at one hyperparameter point, and their mixture
over the explored hyperparameter points.
"""

from dataclasses import dataclass, field
import warnings

import numpy as np
from scipy import interpolate

from ..errors import InlaError
from .gaussian import laplace_log_ratio

QUANTILES = (0.025, 0.5, 0.975)

# standardized evaluation grid for the simplified Laplace density
SLA_STEP = 0.05
SLA_GRID = np.arange(-120, 121) * SLA_STEP
DAMP_START, DAMP_END = 3.0, 6.0


class SkewnessOverflow(UserWarning):
    """The cubic correction made a density bimodal; the Gaussian was used instead."""


def trapezoid_weights(grid):
    """Trapezoid-rule weights along the last axis of ``grid``."""
    grid = np.asarray(grid, dtype=float)
    d = np.diff(grid, axis=-1)
    w = np.zeros_like(grid)
    w[..., :-1] += 0.5 * d
    w[..., 1:] += 0.5 * d
    return w


def _cumulative(grid, dens):
    inc = 0.5 * (dens[..., 1:] + dens[..., :-1]) * np.diff(grid, axis=-1)
    out = np.zeros_like(dens)
    out[..., 1:] = np.cumsum(inc, axis=-1)
    return out


@dataclass(frozen=True, eq=False)
class PosteriorMarginal:
    """Gridded density with trapezoid summaries."""

    target: str
    grid: np.ndarray
    density: np.ndarray
    mean: float
    sd: float
    quantiles: dict = field(default_factory=dict)

    @classmethod
    def from_grid(cls, target, grid, density):
        grid = np.asarray(grid, dtype=float)
        dens = np.clip(np.asarray(density, dtype=float), 0.0, None)
        w = trapezoid_weights(grid)
        z = float(w @ dens)
        if not z > 0 or not np.isfinite(z):
            raise InlaError(f"marginal for {target} has no mass on its grid")
        dens = dens / z
        mean = float(w @ (grid * dens))
        var = float(w @ ((grid - mean) ** 2 * dens))
        cdf = _cumulative(grid, dens)
        q = {p: float(np.interp(p, cdf, grid)) for p in QUANTILES}
        return cls(target, grid, dens, mean, float(np.sqrt(max(var, 0.0))), q)

    def cdf(self, x):
        return np.interp(x, self.grid, _cumulative(self.grid, self.density))

    def quantile(self, p):
        return np.interp(p, _cumulative(self.grid, self.density), self.grid)

    def expect(self, fn):
        w = trapezoid_weights(self.grid)
        return float(w @ (fn(self.grid) * self.density))

    def transformed(self, fn, target=None):
        """Summaries of ``fn(x)`` for increasing ``fn``, computed on the transformed grid."""
        w = trapezoid_weights(self.grid)
        fx = fn(self.grid)
        mean = float(w @ (fx * self.density))
        var = float(w @ ((fx - mean) ** 2 * self.density))
        cdf = _cumulative(self.grid, self.density)
        q = {p: float(fn(np.interp(p, cdf, self.grid))) for p in QUANTILES}
        return mean, float(np.sqrt(max(var, 0.0))), q


# ---------------------------------------------------------------------------
# simplified Laplace


def _damping(xs):
    a = np.abs(xs)
    return np.clip((DAMP_END - a) / (DAMP_END - DAMP_START), 0.0, 1.0)


def sla_log_density(xs, gamma1, gamma3):
    """Unnormalized standardized log-density with the damped cubic term."""
    xs = np.asarray(xs, dtype=float)
    g1 = np.asarray(gamma1, dtype=float)[..., None]
    g3 = np.asarray(gamma3, dtype=float)[..., None]
    return -0.5 * xs * xs + g1 * xs + g3 * xs ** 3 * _damping(xs) / 6.0


def skewness_terms(cov_tx, sd_target, sd_eta, d3, exclude=None):
    """``gamma1`` and ``gamma3`` for a batch of targets.

    ``cov_tx[t, j]`` is the covariance between target ``t`` and the linear
    predictor of observation ``j`` under the Gaussian approximation; ``d3``
    holds the third log-likelihood derivatives at the Gaussian means. Pairs
    flagged in ``exclude`` (the target *is* that predictor) are skipped.
    """
    sd_target = np.asarray(sd_target, dtype=float)
    corr = cov_tx / np.outer(sd_target, sd_eta)
    corr = np.clip(np.nan_to_num(corr), -1.0, 1.0)
    sa = sd_eta[None, :] * corr
    cond_var = sd_eta[None, :] ** 2 * (1.0 - corr * corr)
    contrib1 = cond_var * d3[None, :] * sa
    contrib3 = d3[None, :] * sa ** 3
    if exclude is not None:
        contrib1 = np.where(exclude, 0.0, contrib1)
        contrib3 = np.where(exclude, 0.0, contrib3)
    return 0.5 * contrib1.sum(axis=1), contrib3.sum(axis=1)


def _n_local_maxima(logd):
    inner = (logd[..., 1:-1] > logd[..., :-2]) & (logd[..., 1:-1] >= logd[..., 2:])
    edges = (logd[..., 0] > logd[..., 1]).astype(int) + (logd[..., -1] > logd[..., -2]).astype(int)
    return inner.sum(axis=-1) + edges


@dataclass(frozen=True, eq=False)
class SLADensity:
    """Simplified Laplace density(ies) in standardized coordinates.

    Fields may be scalars (one target) or arrays (a batch of targets).
    """

    index: object
    mu: np.ndarray
    sigma: np.ndarray
    gamma1: np.ndarray
    gamma3: np.ndarray
    log_norm: np.ndarray
    fallback: np.ndarray
    grid: np.ndarray = SLA_GRID

    @property
    def log_density(self):
        g1 = np.where(self.fallback, 0.0, self.gamma1)
        g3 = np.where(self.fallback, 0.0, self.gamma3)
        return sla_log_density(self.grid, g1, g3) - np.asarray(self.log_norm)[..., None]

    @property
    def density(self):
        return np.exp(self.log_density)

    def pdf_natural(self, x):
        """Density of the original-scale variable at ``x`` (rows = targets)."""
        mu = np.asarray(self.mu, dtype=float)[..., None]
        sd = np.asarray(self.sigma, dtype=float)[..., None]
        xs = (np.asarray(x, dtype=float) - mu) / sd
        g1 = np.where(self.fallback, 0.0, self.gamma1)
        g3 = np.where(self.fallback, 0.0, self.gamma3)
        logd = sla_log_density(xs, g1, g3) - np.asarray(self.log_norm)[..., None]
        out = np.exp(logd) / sd
        return np.where(np.abs(xs) <= SLA_GRID[-1] + 1e-12, out, 0.0)

    def summary(self):
        """Mean and sd on the natural scale (trapezoid on the standardized grid)."""
        d = self.density
        w = trapezoid_weights(self.grid)
        m = (d * self.grid) @ w
        v = (d * self.grid ** 2) @ w - m * m
        return self.mu + self.sigma * m, self.sigma * np.sqrt(v)


def sla_batch(index, mu, sigma, gamma1, gamma3, warn=True):
    """Normalize a batch of SLA densities, falling back to Gaussians where bimodal."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    gamma1 = np.atleast_1d(np.asarray(gamma1, dtype=float))
    gamma3 = np.atleast_1d(np.asarray(gamma3, dtype=float))
    logd = sla_log_density(SLA_GRID, gamma1, gamma3)
    fallback = _n_local_maxima(logd) > 1
    if fallback.any():
        if warn:
            warnings.warn(
                f"simplified Laplace density bimodal for {int(fallback.sum())} target(s); "
                "using the Gaussian marginal there", SkewnessOverflow, stacklevel=2)
        logd = sla_log_density(SLA_GRID, np.where(fallback, 0.0, gamma1), np.where(fallback, 0.0, gamma3))
    top = logd.max(axis=-1)
    w = trapezoid_weights(SLA_GRID)
    log_norm = top + np.log(np.exp(logd - top[:, None]) @ w)
    return SLADensity(index, mu, np.atleast_1d(np.asarray(sigma, dtype=float)), gamma1, gamma3,
                      log_norm, fallback)


def latent_exclusion(A):
    """``exclude[i, j]`` is True when observation ``j`` has ``eta_j == x_i`` exactly."""
    A = A.tocsr()
    n = A.shape[1]
    out = np.zeros((n, A.shape[0]), dtype=bool)
    nnz = np.diff(A.indptr)
    for j in np.nonzero(nnz == 1)[0]:
        k = A.indptr[j]
        if A.data[k] == 1.0:
            out[A.indices[k], j] = True
    return out


def sla_all(ga, problem, gaussian=False):
    """SLA densities for every latent component and every linear predictor at one theta."""
    A = problem.A
    cov = ga.covariance
    sd_x = np.sqrt(np.diag(cov))
    cov_ex = (A @ cov).T  # (n, m): cov(x_i, eta_j)
    cov_ee = np.asarray(A @ cov_ex)  # (m, m)
    sd_eta = np.sqrt(np.clip(np.diag(cov_ee), 0.0, None))
    _, _, d3 = problem.likelihood.derivatives(ga.eta)
    if gaussian:
        g1x = g3x = np.zeros(problem.n)
        g1e = g3e = np.zeros(len(sd_eta))
    else:
        g1x, g3x = skewness_terms(cov_ex, sd_x, sd_eta, d3, latent_exclusion(A))
        g1e, g3e = skewness_terms(cov_ee, sd_eta, sd_eta, d3, np.eye(len(sd_eta), dtype=bool))
    lat = sla_batch("latent", ga.mode, sd_x, g1x, g3x)
    pred = sla_batch("predictor", ga.eta, sd_eta, g1e, g3e)
    return lat, pred


def sla_marginal(i, ga, problem):
    """Simplified Laplace density of latent component ``i`` at ``ga.theta``."""
    A = problem.A
    col = ga.covariance_column(i)
    sd_i = np.sqrt(col[i])
    cov_tx = np.asarray(A @ col)[None, :]
    if ga.covariance is None:
        raise InlaError("sla_marginal needs an approximation built with variances")
    var_eta = np.sum(np.asarray(A @ ga.covariance) * A.toarray(), axis=1)
    sd_eta = np.sqrt(np.clip(var_eta, 0.0, None))
    _, _, d3 = problem.likelihood.derivatives(ga.eta)
    excl = latent_exclusion(A)[i][None, :]
    g1, g3 = skewness_terms(cov_tx, [sd_i], sd_eta, d3, excl)
    return sla_batch(i, [ga.mode[i]], [sd_i], g1, g3)


# ---------------------------------------------------------------------------
# full Laplace


@dataclass(frozen=True, eq=False)
class LaplaceDensity:
    index: int
    points: np.ndarray
    log_density: np.ndarray

    def pdf_natural(self, x):
        x = np.asarray(x, dtype=float)
        spline = interpolate.CubicSpline(self.points, self.log_density)
        inside = (x >= self.points[0]) & (x <= self.points[-1])
        out = np.zeros_like(x)
        out[inside] = np.exp(spline(x[inside]))
        return out


def laplace_marginal(i, theta, problem, ga, grid=None, n_points=21, width=4.0):
    """Full Laplace density of latent ``i`` on a grid of fixed ``x_i`` values."""
    mu = ga.mode[i]
    sd = float(np.sqrt(ga.covariance_column(i)[i]))
    if grid is None:
        grid = mu + sd * np.linspace(-width, width, n_points)
    grid = np.asarray(grid, dtype=float)
    e = np.zeros(problem.n)
    e[i] = 1.0
    cmat = np.vstack([problem.constraints, e]) if len(problem.constraints) else e[None, :]
    base = np.zeros(len(cmat))
    keep, vals = [], []
    x0 = ga.mode
    for v in grid:
        rhs = base.copy()
        rhs[-1] = v
        try:
            lv, x0 = laplace_log_ratio(problem, theta, cmat, rhs, x0=x0)
        except InlaError as exc:
            warnings.warn(f"Laplace point x[{i}]={v:.6g} dropped: {exc}", stacklevel=2)
            x0 = ga.mode
            continue
        keep.append(v)
        vals.append(lv)
    if len(keep) < 5:
        raise InlaError(f"only {len(keep)} Laplace points survived for component {i}")
    pts = np.array(keep)
    logd = np.array(vals)
    logd -= logd.max()
    fine = np.linspace(pts[0], pts[-1], 801)
    spline = interpolate.CubicSpline(pts, logd)
    z = float(trapezoid_weights(fine) @ np.exp(spline(fine)))
    return LaplaceDensity(i, pts, logd - np.log(z))


# ---------------------------------------------------------------------------
# mixture over hyperparameter points


@dataclass(frozen=True, eq=False)
class MarginalTable:
    """Gridded marginals for a batch of targets (one row per target)."""

    labels: tuple
    grid: np.ndarray
    density: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    quantiles: dict

    def __len__(self):
        return len(self.labels)

    def marginal(self, k):
        return PosteriorMarginal(
            self.labels[k], self.grid[k], self.density[k], float(self.mean[k]), float(self.sd[k]),
            {p: float(v[k]) for p, v in self.quantiles.items()},
        )

    def transformed(self, fn):
        """Mean and quantiles of ``fn(x)`` for increasing ``fn``, per target."""
        w = trapezoid_weights(self.grid)
        fx = fn(self.grid)
        mean = np.sum(w * fx * self.density, axis=1)
        cdf = _cumulative(self.grid, self.density)
        q = {p: fn(np.array([np.interp(p, cdf[k], self.grid[k]) for k in range(len(self))]))
             for p in QUANTILES}
        return mean, q


def common_grid(mus, sds, half_width=6.0, min_points=241, max_points=2001):
    """Uniform grids per target covering ``mu +- half_width * sd`` for all points."""
    mus = np.atleast_2d(mus)
    sds = np.atleast_2d(sds)
    lo = np.min(mus - half_width * sds, axis=0)
    hi = np.max(mus + half_width * sds, axis=0)
    step = np.min(sds, axis=0) / 10.0
    npts = int(np.clip(np.max(np.ceil((hi - lo) / step)) + 1, min_points, max_points))
    return lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, npts)[None, :]


def table_from_density(labels, grid, dens):
    dens = np.clip(dens, 0.0, None)
    w = trapezoid_weights(grid)
    z = np.sum(w * dens, axis=1)
    if np.any(~(z > 0)):
        raise InlaError("a mixture marginal has no mass on its grid")
    dens = dens / z[:, None]
    mean = np.sum(w * grid * dens, axis=1)
    var = np.sum(w * (grid - mean[:, None]) ** 2 * dens, axis=1)
    cdf = _cumulative(grid, dens)
    q = {p: np.array([np.interp(p, cdf[k], grid[k]) for k in range(len(labels))]) for p in QUANTILES}
    return MarginalTable(tuple(labels), grid, dens, mean, np.sqrt(np.clip(var, 0.0, None)), q)


def integrate_marginals(components, weights, labels, grid=None):
    """Weighted mixture ``sum_k w_k pi(x | theta_k, y)`` on a common grid.

    ``components[k]`` is any object with ``pdf_natural(grid)`` evaluated
    row-wise, or a list of such objects (one per target). ``grid`` defaults
    to :func:`common_grid` built from the components' ``mu``/``sigma``.
    """
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    if grid is None:
        mus = np.array([np.atleast_1d(c.mu) for c in components])
        sds = np.array([np.atleast_1d(c.sigma) for c in components])
        grid = common_grid(mus, sds)
    dens = np.zeros_like(grid)
    for w, c in zip(weights, components):
        if isinstance(c, (list, tuple)):
            dens += w * np.array([ci.pdf_natural(grid[k]) for k, ci in enumerate(c)])
        else:
            dens += w * c.pdf_natural(grid)
    return table_from_density(labels, grid, dens)
