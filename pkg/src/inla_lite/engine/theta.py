"""Hyperparameter posterior: mode search, curvature, grid exploration in
standardized coordinates, and marginals from an interpolant of the explored
log-density.
"""

from dataclasses import dataclass, field
import collections
import itertools
import math

import numpy as np
from scipy import interpolate, optimize

from ..errors import ExplorationTooLarge, MarginalUnavailable, ModeSearchFailure, NonConcaveMode
from .marginals import PosteriorMarginal, trapezoid_weights

GRAD_STEP = 1e-4
GRAD_TOL = 1e-4
HESS_STEP = 1e-3
MAX_QN_ITER = 100
MAX_AXIS_STEPS = 20
MAX_GRID_EVALUATIONS = 2000


def fd_gradient(f, x, h=GRAD_STEP):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_hessian(f, x, h=HESS_STEP, f0=None):
    """Central second differences; off-diagonals from the four-point stencil."""
    x = np.asarray(x, dtype=float)
    d = len(x)
    f0 = f(x) if f0 is None else f0
    hess = np.empty((d, d))
    eye = np.eye(d) * h
    for a in range(d):
        hess[a, a] = (f(x + eye[a]) - 2.0 * f0 + f(x - eye[a])) / h ** 2
        for b in range(a):
            v = (f(x + eye[a] + eye[b]) - f(x + eye[a] - eye[b])
                 - f(x - eye[a] + eye[b]) + f(x - eye[a] - eye[b])) / (4.0 * h * h)
            hess[a, b] = hess[b, a] = v
    return hess


@dataclass(frozen=True)
class ModeResult:
    theta: np.ndarray
    value: float
    gradient: np.ndarray
    iterations: int
    evaluations: int


def find_mode(log_post, init, grad_step=GRAD_STEP, gtol=GRAD_TOL, maxiter=MAX_QN_ITER):
    """Maximize ``log_post`` by BFGS with central finite-difference gradients."""
    init = np.atleast_1d(np.asarray(init, dtype=float))
    cache = {}
    best = [None, -np.inf]

    def f(t):
        key = tuple(np.round(t, 14))
        if key not in cache:
            v = float(log_post(np.asarray(t, dtype=float)))
            cache[key] = v
            if v > best[1]:
                best[0], best[1] = np.array(t, dtype=float), v
        return cache[key]

    res = optimize.minimize(
        lambda t: -f(t), init, jac=lambda t: -fd_gradient(f, t, grad_step), method="BFGS",
        options={"gtol": gtol, "norm": np.inf, "maxiter": maxiter},
    )
    theta = np.asarray(res.x, dtype=float)
    grad = fd_gradient(f, theta, grad_step)
    if not np.all(np.isfinite(grad)) or np.max(np.abs(grad)) >= gtol:
        raise ModeSearchFailure(
            f"hyperparameter mode search stopped with gradient max-norm "
            f"{np.max(np.abs(grad)):.3g} after {res.nit} iterations ({res.message})",
            best_theta=best[0], best_value=best[1],
        )
    return ModeResult(theta, f(theta), grad, int(res.nit), len(cache))


@dataclass(frozen=True, eq=False)
class ThetaPoint:
    z: tuple
    theta: np.ndarray
    log_post: float
    weight: float


@dataclass(frozen=True, eq=False)
class ThetaExploration:
    theta_star: np.ndarray
    log_post_star: float
    hessian: np.ndarray  # negative Hessian of log pi(theta | y) at the mode
    sigma: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    points: tuple
    axis_evaluations: dict = field(default_factory=dict)
    delta_z: float = 1.0
    delta_pi: float = 2.5

    @property
    def dim(self):
        return len(self.theta_star)

    @property
    def transform(self):
        """``M`` with ``theta(z) = theta_star + M z``."""
        return self.eigvecs * np.sqrt(self.eigvals)[None, :]

    def theta_of(self, z):
        return self.theta_star + self.transform @ np.asarray(z, dtype=float)

    def accepted_offsets(self, axis):
        """Sorted accepted z offsets (multiples of ``delta_z``) along one axis."""
        return sorted(z for z, _, ok in self.axis_evaluations[axis] if ok)


def _orient(vecs):
    # sign convention: largest-magnitude entry of each eigenvector positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs[None, :]


def explore(log_post, theta_star, delta_z=1.0, delta_pi=2.5, hess_step=HESS_STEP, log_post_star=None):
    """Walk the standardized axes from the mode while the log-density deficit stays below ``delta_pi``.

    With two hyperparameters the accepted set is grown from the axis points to
    every lattice point connected to them that passes the same deficit rule. All kept points get the equal-area weight
    ``delta_z ** dim`` before normalization.
    """
    theta_star = np.atleast_1d(np.asarray(theta_star, dtype=float))
    dim = len(theta_star)
    lp0 = float(log_post(theta_star)) if log_post_star is None else float(log_post_star)
    hess = -fd_hessian(log_post, theta_star, hess_step, f0=lp0)
    hess = 0.5 * (hess + hess.T)
    evals, evecs = np.linalg.eigh(hess)
    if not np.all(evals > 0):
        raise NonConcaveMode(
            f"negative Hessian at the hyperparameter mode has eigenvalues {evals}; "
            "the model may be unidentified"
        )
    sigma = np.linalg.inv(hess)
    sigma = 0.5 * (sigma + sigma.T)
    lam = 1.0 / evals
    vecs = _orient(evecs)
    m = vecs * np.sqrt(lam)[None, :]

    values = {(0,) * dim: lp0}

    def at(kz):
        if kz not in values:
            values[kz] = float(log_post(theta_star + m @ (np.array(kz, dtype=float) * delta_z)))
        return values[kz]

    axis_evals = {}
    for a in range(dim):
        rec = [(0.0, lp0, True)]
        for sgn in (1, -1):
            for k in range(1, MAX_AXIS_STEPS + 1):
                kz = tuple(sgn * k if b == a else 0 for b in range(dim))
                v = at(kz)
                ok = lp0 - v < delta_pi
                rec.append((sgn * k * delta_z, v, ok))
                if not ok:
                    break
        axis_evals[a] = sorted(rec)

    accepted = {kz for kz, v in values.items() if lp0 - v < delta_pi}
    if dim == 2:
        # flood fill from the accepted axis points: any lattice neighbour of an
        # accepted point is tried, so curved ridges beyond the axis box are kept
        frontier = collections.deque(sorted(accepted))
        while frontier:
            kz = frontier.popleft()
            for a, step in itertools.product(range(dim), (1, -1)):
                nb = tuple(k + step if b == a else k for b, k in enumerate(kz))
                if nb in accepted or (nb in values and lp0 - values[nb] >= delta_pi):
                    continue
                if len(values) >= MAX_GRID_EVALUATIONS:
                    raise ExplorationTooLarge(
                        f"more than {MAX_GRID_EVALUATIONS} grid evaluations without closing the "
                        "accepted region; the hyperparameter posterior is too flat for delta_pi"
                    )
                if lp0 - at(nb) < delta_pi:
                    accepted.add(nb)
                    frontier.append(nb)

    keys = sorted(accepted)
    lps = np.array([values[k] for k in keys])
    area = delta_z ** dim
    w = np.exp(lps - lps.max()) * area
    w /= w.sum()
    points = tuple(
        ThetaPoint(tuple(k * delta_z for k in kz), theta_star + m @ (np.array(kz, dtype=float) * delta_z),
                   float(lp), float(wk))
        for kz, lp, wk in zip(keys, lps, w)
    )
    return ThetaExploration(theta_star, lp0, hess, sigma, vecs, lam, points, axis_evals, delta_z, delta_pi)


def _axis_density(records, delta_z, n_fine=401):
    """Normalized density of one standardized coordinate from its axis walk."""
    z = np.array([r[0] for r in records])
    lp = np.array([r[1] for r in records])
    if sum(r[2] for r in records) < 3:
        raise MarginalUnavailable("need at least three accepted points on every axis")
    lp = lp - lp.max()
    spline = interpolate.CubicSpline(z, lp)
    lo, hi = z[0], z[-1]

    def tail(zs, side):
        # parabola through the three outermost points, or a decreasing line
        idx = slice(0, 3) if side < 0 else slice(-3, None)
        c = np.polyfit(z[idx], lp[idx], 2)
        if c[0] < 0:
            return np.polyval(c, zs)
        slope = (lp[1] - lp[0]) / (z[1] - z[0]) if side < 0 else (lp[-1] - lp[-2]) / (z[-1] - z[-2])
        edge = lp[0] if side < 0 else lp[-1]
        zb = lo if side < 0 else hi
        if side * slope < 0:
            return edge + slope * (zs - zb)
        return np.full_like(zs, -np.inf)

    ext = 2.0 * delta_z
    fine = np.linspace(lo - ext, hi + ext, n_fine)
    val = np.empty_like(fine)
    inside = (fine >= lo) & (fine <= hi)
    val[inside] = spline(fine[inside])
    val[fine < lo] = tail(fine[fine < lo], -1)
    val[fine > hi] = tail(fine[fine > hi], 1)
    dens = np.exp(val - np.max(val))
    dens /= trapezoid_weights(fine) @ dens
    return fine, dens


def _density_of_sum(parts, n_target=2001):
    """Density of ``sum_a c_a z_a`` for independent ``z_a`` given on grids."""
    scaled = []
    for c, zg, dz in parts:
        u = c * zg
        d = dz / abs(c)
        if c < 0:
            u, d = u[::-1], d[::-1]
        scaled.append((u, d))
    widths = [u[-1] - u[0] for u, _ in scaled]
    h = max(min(widths) / 400.0, max(widths) / n_target)
    start = 0.0
    total = None
    for u, d in scaled:
        g = u[0] + h * np.arange(int(math.ceil((u[-1] - u[0]) / h)) + 1)
        p = np.interp(g, u, d, left=0.0, right=0.0)
        if total is None:
            total, start = p, g[0]
        else:
            total = np.convolve(total, p) * h
            start += g[0]
    grid = start + h * np.arange(len(total))
    return grid, total


def hyperparameter_marginals(expl, names=None, scale="natural"):
    """Posterior marginal of every hyperparameter.

    The log-density is interpolated along each standardized axis and the
    axes are treated as independent (separable product); each ``theta_j``
    is a linear combination of the axes, so its density is the convolution
    of the scaled axis densities. ``scale="natural"`` maps ``theta = log tau``
    to ``tau`` with the Jacobian ``1 / tau``.
    """
    dim = expl.dim
    names = names or [f"theta[{j}]" for j in range(dim)]
    axes = [_axis_density(expl.axis_evaluations[a], expl.delta_z) for a in range(dim)]
    m = expl.transform
    out = []
    for j in range(dim):
        row = m[j]
        keep = [a for a in range(dim) if abs(row[a]) > 1e-12 * np.max(np.abs(row))]
        grid, dens = _density_of_sum([(row[a], axes[a][0], axes[a][1]) for a in keep])
        grid = grid + expl.theta_star[j]
        if scale == "natural":
            tau = np.exp(grid)
            out.append(PosteriorMarginal.from_grid(names[j], tau, dens / tau))
        else:
            out.append(PosteriorMarginal.from_grid(names[j], grid, dens))
    return out
