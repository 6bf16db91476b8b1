"""The full three-step pipeline: hyperparameter mode and exploration,
per-point latent marginals, and the weighted mixture over points.
"""

from dataclasses import dataclass, field
import math
import time
import warnings

import numpy as np

from ..errors import ConfigError
from . import gaussian as _g
from . import marginals as _m
from . import theta as _t

DEFAULT_INIT_LOG_PRECISION = math.log(10.0)


@dataclass(frozen=True)
class FitOptions:
    delta_z: float = 1.0
    delta_pi: float = 2.5
    marginal: str = "sla"  # "sla", "la" or "gaussian"
    la_indices: tuple = None  # latent indices for the full Laplace path (None = all)
    init: tuple = None

    def __post_init__(self):
        if self.marginal not in ("sla", "la", "gaussian"):
            raise ConfigError(f"marginal path must be sla, la or gaussian, got {self.marginal!r}")
        if self.delta_z <= 0 or self.delta_pi <= 0:
            raise ConfigError("delta_z and delta_pi must be positive")

    def provenance(self):
        return {
            "delta_z": self.delta_z,
            "delta_pi": self.delta_pi,
            "marginal": self.marginal,
            "la_indices": list(self.la_indices) if self.la_indices is not None else None,
            "init": list(self.init) if self.init is not None else None,
            "newton_tol": _g.NEWTON_TOL,
            "newton_maxiter": _g.NEWTON_MAXITER,
            "gradient_step": _t.GRAD_STEP,
            "gradient_tol": _t.GRAD_TOL,
            "hessian_step": _t.HESS_STEP,
            "max_quasi_newton_iterations": _t.MAX_QN_ITER,
            "sla_grid": [float(_m.SLA_GRID[0]), float(_m.SLA_GRID[-1]), _m.SLA_STEP],
            "sla_cubic_damping": [_m.DAMP_START, _m.DAMP_END],
            "area_weights": "equal-area delta_z**dim on the z grid",
        }


@dataclass(frozen=True, eq=False)
class PointState:
    """What the diagnostics need from one explored hyperparameter point."""

    theta: np.ndarray
    z: tuple
    log_post: float
    weight: float
    mode: np.ndarray
    eta: np.ndarray
    sigma: np.ndarray
    var_eta: np.ndarray


@dataclass(frozen=True, eq=False)
class FitResult:
    problem: object
    options: FitOptions
    mode: object
    exploration: object
    points: tuple
    latent: _m.MarginalTable
    predictor: _m.MarginalTable
    hyper: tuple
    hyper_log: tuple
    notes: tuple = ()
    timing: dict = field(default_factory=dict)

    @property
    def layout(self):
        return self.problem.layout

    def block_table(self, name):
        b = self.layout.block(name)
        return b, np.arange(b.offset, b.offset + b.length)


def fit(problem, options=None):
    """Run the approximation end to end on a compiled :class:`~inla_lite.engine.gaussian.Problem`."""
    options = options or FitOptions()
    t0 = time.perf_counter()
    notes = list(problem.layout.notes)
    dim = problem.n_hyper
    warm = {"x": None}

    def log_post(theta):
        ga = _g.gaussian_approximation(theta, problem, x0=warm["x"], variances=False)
        warm["x"] = ga.mode
        return ga.log_posterior

    if dim == 0:
        mode = None
        expl = None
        thetas = [(np.zeros(0), (), 0.0, 1.0)]
        hyper, hyper_log = (), ()
        t_mode = t_explore = time.perf_counter()
    else:
        init = np.full(dim, DEFAULT_INIT_LOG_PRECISION) if options.init is None else np.asarray(options.init, float)
        mode = _t.find_mode(log_post, init)
        t_mode = time.perf_counter()
        expl = _t.explore(log_post, mode.theta, options.delta_z, options.delta_pi, log_post_star=mode.value)
        t_explore = time.perf_counter()
        thetas = [(p.theta, p.z, p.log_post, p.weight) for p in expl.points]
        names = list(problem.layout.hyper_names)
        try:
            hyper = tuple(_t.hyperparameter_marginals(expl, names, scale="natural"))
            hyper_log = tuple(_t.hyperparameter_marginals(expl, [f"log {n}" for n in names], scale="log"))
        except Exception as exc:  # marginals are a summary; the latent fit stands without them
            notes.append(f"hyperparameter marginals unavailable: {exc}")
            hyper, hyper_log = (), ()

    states, lat_parts, pred_parts = [], [], []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", _m.SkewnessOverflow)
        for theta, z, lp, w in thetas:
            ga = _g.gaussian_approximation(theta, problem, x0=warm["x"], variances=True)
            lat, pred = _m.sla_all(ga, problem, gaussian=options.marginal == "gaussian")
            if options.marginal == "la":
                idx = range(problem.n) if options.la_indices is None else options.la_indices
                la = {i: _m.laplace_marginal(i, theta, problem, ga) for i in idx}
                lat = _LatentMix(lat, la)
            lat_parts.append(lat)
            pred_parts.append(pred)
            states.append(PointState(theta, z, lp, w, ga.mode, ga.eta, ga.sigma, pred.sigma ** 2))
    for c in caught:
        notes.append(str(c.message))
    weights = [s.weight for s in states]
    labels = problem.layout.latent_labels()
    latent = _m.integrate_marginals(lat_parts, weights, labels)
    predictor = _m.integrate_marginals(pred_parts, weights, [f"eta[{j}]" for j in range(len(states[0].eta))])
    t_end = time.perf_counter()
    timing = {
        "mode_search_s": t_mode - t0,
        "exploration_s": t_explore - t_mode,
        "marginals_s": t_end - t_explore,
        "total_s": t_end - t0,
    }
    return FitResult(problem, options, mode, expl, tuple(states), latent, predictor,
                     hyper, hyper_log, tuple(dict.fromkeys(notes)), timing)


class _LatentMix:
    """SLA batch with selected rows replaced by full Laplace densities."""

    def __init__(self, sla, la):
        self.sla = sla
        self.la = la
        self.mu = sla.mu
        self.sigma = sla.sigma

    def pdf_natural(self, grid):
        out = self.sla.pdf_natural(grid)
        for i, d in self.la.items():
            out[i] = d.pdf_natural(grid[i])
        return out
