"""Ground-truth engines used to check the approximation.

Two independent routes to the posterior: brute-force tensor-grid
quadrature for tiny models and a blockwise random-walk Metropolis sampler
for small ones. Neither touches the mode finding, factorization or
marginal code of :mod:`inla_lite.engine`; they share only the likelihood
and prior densities. The module also generates seeded synthetic data.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import interpolate, linalg, spatial

from .errors import ConfigError, OracleNotConverged, OracleTooLarge
from .likelihood import expit
from .model import Dataset, log_hyperprior, log_prior_density
from .priors import AdjacencyGraph, icar_precision

RNG_NAME = "numpy.random.Generator(PCG64)"
MARGINAL_POINTS = 121
ADAPT_POINTS = 15
MARGINAL_REST_POINTS = 21
MAX_CELLS = 10 ** 8
QUANTILES = (0.025, 0.5, 0.975)


def _rng(seed):
    if seed is None:
        raise ConfigError("a seed is mandatory")
    return np.random.Generator(np.random.PCG64(int(seed)))


def _null_basis(cmat, n):
    if not len(cmat):
        return np.eye(n)
    b = linalg.null_space(cmat)
    # deterministic orientation
    idx = np.argmax(np.abs(b), axis=0)
    return b * np.sign(b[idx, np.arange(b.shape[1])])[None, :]


def _summaries(grid, dens):
    w = np.diff(grid)
    w = np.concatenate([[w[0] / 2], (w[:-1] + w[1:]) / 2, [w[-1] / 2]])
    dens = dens / np.sum(w * dens)
    mean = float(np.sum(w * grid * dens))
    sd = float(np.sqrt(max(np.sum(w * (grid - mean) ** 2 * dens), 0.0)))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    q = {p: float(np.interp(p, cdf, grid)) for p in QUANTILES}
    return dens, mean, sd, q


# ---------------------------------------------------------------------------
# tensor-grid quadrature


@dataclass(frozen=True)
class QuadratureSpec:
    """Grid sizes and box rules for :func:`quadrature_posterior`.

    At each theta the latent box spans mean +- ``width`` sd along the
    principal axes of the conditional posterior, refined up to
    ``refinements`` times. With no ``theta_range`` the theta interval is
    grown or trimmed to where the log-marginal is within ``theta_drop`` of
    its peak.
    """

    latent_points: int = 41
    theta_points: int = 61
    theta_range: tuple = None
    width: float = 7.0
    theta_drop: float = 16.0
    refinements: int = 6

    def __post_init__(self):
        if not 3 <= self.latent_points <= 61:
            raise ConfigError("latent grid needs 3..61 points per dimension")
        if not 3 <= self.theta_points <= 81:
            raise ConfigError("theta grid needs 3..81 points")
        if self.theta_range is not None:
            lo, hi = self.theta_range
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ConfigError("theta range must be finite and increasing")


@dataclass(frozen=True, eq=False)
class QuadratureResult:
    labels: tuple
    mean: np.ndarray
    sd: np.ndarray
    covariance: np.ndarray
    marginals: tuple  # (grid, density) per latent component
    quantiles: tuple
    theta_grid: np.ndarray
    theta_density: np.ndarray
    theta_mean: np.ndarray
    theta_sd: np.ndarray
    tau_mean: np.ndarray
    log_evidence_theta: np.ndarray  # log pi(theta, y) up to a constant, per theta grid point
    latent_ranges: tuple
    theta_range: tuple = None
    spec: QuadratureSpec = None
    dic: dict = field(default_factory=dict)


def _slice(problem, frame, ranges, th, npts):
    """Posterior mass on a box grid ``x = frame @ u`` at one hyperparameter value.

    ``frame`` has orthonormal columns spanning the constraint null space, so
    the cell volume in ``x`` is the product of the ``u`` spacings.
    """
    axes = [np.linspace(lo, hi, k) for (lo, hi), k in zip(ranges, npts)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    xs = mesh @ frame.T
    eta = xs @ problem.A.toarray().T
    th = np.atleast_1d(th)
    logp = (np.sum(problem.likelihood.loglik(eta), axis=-1) + log_prior_density(problem.layout, xs, th)
            + log_hyperprior(problem.layout, th))
    top = logp.max()
    p = np.exp(logp - top)
    mass = p.sum()
    p /= mass
    cell = float(np.prod([ax[1] - ax[0] for ax in axes]))
    mean = p @ xs
    cov = (xs * p[:, None]).T @ xs - np.outer(mean, mean)
    return dict(log_mass=math.log(mass) + top + math.log(cell), p=p, xs=xs, eta=eta, mean=mean,
                cov=0.5 * (cov + cov.T), axes=axes)


def _frame(basis, mean, cov, width, floor):
    """Grid frame and box aligned with the principal axes of ``cov`` in the null space."""
    c = basis.T @ cov @ basis
    vals, vecs = np.linalg.eigh(0.5 * (c + c.T))
    frame = basis @ vecs
    sd = np.sqrt(np.maximum(vals, floor ** 2))
    centre = frame.T @ mean
    return frame, [(m - width * s, m + width * s) for m, s in zip(centre, sd)]


def _adapt(problem, qs, basis, th, mean, cov, coarse=False):
    """Refine one theta slice until its box tracks the conditional posterior.

    Refinement runs on a coarse lattice; unless ``coarse`` the slice is then
    recomputed at full resolution in the final box.
    """
    k = min(ADAPT_POINTS, qs.latent_points)
    npts = [k] * basis.shape[1]
    out = None
    for _ in range(qs.refinements + 1):
        frame, ranges = _frame(basis, mean, cov, qs.width, 1e-9)
        out = _slice(problem, frame, ranges, th, npts)
        spacing = min(hi - lo for lo, hi in ranges) / (k - 1)
        sd_new = np.sqrt(np.clip(np.linalg.eigvalsh(basis.T @ out["cov"] @ basis), 0.0, None))
        sd_old = np.sqrt(np.clip(np.linalg.eigvalsh(basis.T @ cov @ basis), 0.0, None))
        shift = np.abs(basis.T @ (out["mean"] - mean))
        mean = out["mean"]
        # a collapsed first pass (all mass in one cell) shrinks the box by at most the cell size
        cov = out["cov"] + (0.3 * spacing) ** 2 * (basis @ basis.T) * (sd_new.max() < 0.3 * spacing)
        if np.all(np.abs(sd_new - sd_old) < 0.02 * sd_old) and np.all(shift < 0.02 * sd_old.max()):
            break
    if not coarse:
        frame, ranges = _frame(basis, mean, cov, qs.width, 1e-9)
        out = _slice(problem, frame, ranges, th, [qs.latent_points] * basis.shape[1])
    out.update(frame=frame, ranges=ranges)
    return out


def _sweep(problem, qs, basis, thetas, start, coarse=False):
    """Adaptive slices for every theta, warm-started outward from index ``start``."""
    slices = [None] * len(thetas)
    order = list(range(start, len(thetas))) + list(range(start - 1, -1, -1))
    for k in order:
        near = k - 1 if k > start else k + 1
        seed = slices[near] if 0 <= near < len(thetas) and slices[near] is not None else None
        mean, cov = (seed["mean"], seed["cov"]) if seed else (np.zeros(basis.shape[0]), 9.0 * basis @ basis.T)
        slices[k] = _adapt(problem, qs, basis, thetas[k], mean, cov, coarse)
    return slices


def _aligned_marginal(problem, qs, basis, i, sl, th):
    """Marginal of ``x_i`` at one theta on a grid whose first axis is ``x_i`` itself.

    The null-space basis is rotated so that ``x_i`` depends on the first
    coordinate only; summing out the remaining axes is then an exact
    marginalization on a regular 1-d lattice (no histogram binning).
    """
    v = basis @ basis[i]
    scale = float(np.linalg.norm(v))  # x_i = |v| * u1
    b1 = v / scale
    rest = basis @ linalg.null_space((basis.T @ b1)[None, :])
    if rest.shape[1]:
        c = rest.T @ sl["cov"] @ rest
        rest = rest @ np.linalg.eigh(0.5 * (c + c.T))[1]
    rot = np.column_stack([b1, rest])
    m = rot.T @ sl["mean"]
    sd = np.sqrt(np.clip(np.diag(rot.T @ sl["cov"] @ rot), 1e-18, None))
    ranges = [(a - qs.width * s, a + qs.width * s) for a, s in zip(m, sd)]
    npts = [MARGINAL_POINTS] + [min(MARGINAL_REST_POINTS, qs.latent_points)] * rest.shape[1]
    out = _slice(problem, rot, ranges, th, npts)
    u1 = out["axes"][0]
    dens = out["p"].reshape(len(u1), -1).sum(axis=1) / (u1[1] - u1[0])
    return scale * u1, dens / scale


def _mix_marginals(parts, weights):
    """Mix per-theta gridded densities on the union of their grids."""
    grid = np.unique(np.concatenate([g for g, _ in parts]))
    span = grid[-1] - grid[0]
    grid = grid[np.concatenate([[True], np.diff(grid) > 1e-9 * span])]
    dens = np.zeros_like(grid)
    for (g, d), w in zip(parts, weights):
        inside = (grid >= g[0]) & (grid <= g[-1])
        dens[inside] += w * interpolate.CubicSpline(g, d)(grid[inside])
    return grid, np.maximum(dens, 0.0)


def quadrature_posterior(problem, qs=None):
    """Posterior of a tiny model by brute force over the (constrained) latent space and theta.

    Each theta value gets its own latent box, aligned with and scaled to
    the conditional posterior at that theta, so sharply concentrated
    conditionals (large precisions) are resolved as well as diffuse ones.
    """
    qs = qs or QuadratureSpec()
    layout = problem.layout
    if problem.n_hyper > 1:
        raise ConfigError("quadrature handles at most one hyperparameter")
    basis = _null_basis(np.asarray(layout.constraint_rows), layout.n)
    dim = basis.shape[1]
    if dim > 4:
        raise ConfigError(f"quadrature handles at most 4 free latent dimensions, got {dim}")
    n_theta = qs.theta_points if problem.n_hyper else 1
    cells = qs.latent_points ** dim * n_theta
    if cells > MAX_CELLS:
        raise OracleTooLarge(f"quadrature grid has {cells} cells (limit {MAX_CELLS})")
    if problem.n_hyper:
        t_lo, t_hi = (-8.0, 14.0) if qs.theta_range is None else qs.theta_range
        t_peak = 0.5 * (t_lo + t_hi)
        for _ in range(qs.refinements if qs.theta_range is None else 0):
            thetas = np.linspace(t_lo, t_hi, qs.theta_points)
            start = int(np.argmin(np.abs(thetas - t_peak)))
            slices = _sweep(problem, qs, basis, thetas, start, coarse=True)
            lt = np.array([s["log_mass"] for s in slices])
            t_peak = thetas[int(np.argmax(lt))]
            lt -= lt.max()
            # keep theta where the log-marginal is within theta_drop of its peak
            ok = np.nonzero(lt > -qs.theta_drop)[0]
            step = (t_hi - t_lo) / (qs.theta_points - 1)
            new_lo = max(t_lo + (ok[0] - 1) * step if ok[0] > 0 else t_lo - 4.0, -30.0)
            new_hi = min(t_hi - (len(lt) - 2 - ok[-1]) * step if ok[-1] < len(lt) - 1 else t_hi + 4.0, 30.0)
            if (new_lo, new_hi) == (t_lo, t_hi):
                break
            t_lo, t_hi = new_lo, new_hi
        thetas = np.linspace(t_lo, t_hi, qs.theta_points)
        # warm starts run outward from the bulk of the mass
        slices = _sweep(problem, qs, basis, thetas, int(np.argmin(np.abs(thetas - t_peak))))
    else:
        t_lo = t_hi = None
        thetas = np.zeros((1, 0))
        slices = _sweep(problem, qs, basis, thetas, 0)
    log_theta = np.array([s["log_mass"] for s in slices])
    w = np.exp(log_theta - log_theta.max())
    w /= w.sum()

    mean = sum(wk * s["mean"] for wk, s in zip(w, slices))
    second = sum(wk * (s["cov"] + np.outer(s["mean"], s["mean"])) for wk, s in zip(w, slices))
    cov = second - np.outer(mean, mean)
    cov = 0.5 * (cov + cov.T)
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    live = [k for k in range(len(slices)) if w[k] > 1e-14]
    marg, quants = [], []
    for i in range(layout.n):
        if not sd[i] > 1e-12:
            marg.append((np.array([mean[i]]), np.array([1.0])))
            quants.append({p: float(mean[i]) for p in QUANTILES})
            continue
        parts = [_aligned_marginal(problem, qs, basis, i, slices[k], thetas[k]) for k in live]
        grid, dens = _mix_marginals(parts, w[live])
        dens, _, _, q = _summaries(grid, dens)
        marg.append((grid, dens))
        quants.append(q)
    if problem.n_hyper:
        tg = thetas
        pt = w / (tg[1] - tg[0])
        t_mean = float(w @ tg)
        theta_mean = np.array([t_mean])
        theta_sd = np.array([math.sqrt(float(w @ (tg - t_mean) ** 2))])
        tau = np.array([float(w @ np.exp(tg))])
    else:
        tg = pt = np.zeros(0)
        theta_mean = theta_sd = tau = np.zeros(0)
    # deviance summaries under the exact posterior, plug-in at the posterior mean of eta
    lik = problem.likelihood
    dbar = float(sum(wk * (s["p"] @ (-2.0 * np.sum(lik.loglik(s["eta"]), axis=-1))) for wk, s in zip(w, slices)))
    dhat = float(-2.0 * np.sum(lik.loglik(problem.A @ mean)))
    dic = {"mean_deviance": dbar, "deviance_at_mean": dhat, "p_D": dbar - dhat, "DIC": 2 * dbar - dhat}
    top = int(np.argmax(log_theta))
    return QuadratureResult(
        labels=tuple(layout.latent_labels()), mean=mean, sd=sd, covariance=cov, marginals=tuple(marg),
        quantiles=tuple(quants), theta_grid=tg, theta_density=pt, theta_mean=theta_mean,
        theta_sd=theta_sd, tau_mean=tau, log_evidence_theta=log_theta if problem.n_hyper else np.zeros(0),
        latent_ranges=tuple(slices[top]["ranges"]),
        theta_range=(t_lo, t_hi) if problem.n_hyper else None, spec=qs, dic=dic,
    )


# ---------------------------------------------------------------------------
# random-walk Metropolis


@dataclass(frozen=True)
class McmcSpec:
    iterations: int
    seed: int
    burn_in: int = None
    chains: int = 4
    thin: int = 10
    step_sizes: dict = None  # block name (or "theta") -> proposal sd; tuned when absent
    tune_iterations: int = 4000
    target_acceptance: float = 0.3
    rhat_limit: float = 1.05

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("the sampler needs an explicit seed")
        if self.iterations < 1:
            raise ConfigError("the sampler needs at least one iteration")
        burn = self.iterations // 5 if self.burn_in is None else self.burn_in
        if not 0 <= burn < self.iterations:
            raise ConfigError("burn-in must satisfy 0 <= burn_in < iterations")
        object.__setattr__(self, "burn_in", burn)
        if self.chains < 2:
            raise ConfigError("split-R-hat needs at least two chains")
        if self.step_sizes and any(not v > 0 for v in self.step_sizes.values()):
            raise ConfigError("proposal step sizes must be positive")


@dataclass(frozen=True, eq=False)
class McmcResult:
    labels: tuple
    hyper_names: tuple
    samples: np.ndarray  # (chains, draws, n) latent
    theta_samples: np.ndarray  # (chains, draws, n_hyper)
    acceptance: dict
    step_sizes: dict
    rhat: float
    mean: np.ndarray
    sd: np.ndarray
    mcse: np.ndarray
    theta_mean: np.ndarray
    theta_sd: np.ndarray
    dic: dict
    spec: McmcSpec
    rng: str = RNG_NAME

    @property
    def latent_draws(self):
        return self.samples.reshape(-1, self.samples.shape[-1])


def _block_bases(layout):
    """Per latent block: orthonormal basis of the block's constrained subspace."""
    cmat = np.asarray(layout.constraint_rows)
    out = []
    for b in layout.blocks:
        rows = cmat[:, b.slice] if len(cmat) else np.zeros((0, b.length))
        own = [r for r, full in zip(rows, cmat) if np.any(r) and np.allclose(full[: b.offset], 0)
               and np.allclose(full[b.offset + b.length:], 0)]
        out.append(_null_basis(np.array(own), b.length) if own else np.eye(b.length))
    return out


def split_rhat(draws):
    """Split-chain potential scale reduction; ``draws`` is (chains, iterations, ...). Returns the max."""
    c, n = draws.shape[:2]
    half = n // 2
    parts = np.concatenate([draws[:, :half], draws[:, half: 2 * half]], axis=0)
    m = parts.shape[1]
    means = parts.mean(axis=1)
    w = parts.var(axis=1, ddof=1).mean(axis=0)
    b = m * means.var(axis=0, ddof=1)
    var_hat = (m - 1) / m * w + b / m
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(np.where(w > 0, var_hat / w, 1.0))
    return float(np.max(r))


def batch_means_se(draws, n_batches=25):
    """Monte Carlo standard error of the pooled mean from per-chain batch means."""
    c, n = draws.shape[:2]
    size = n // n_batches
    trimmed = draws[:, : size * n_batches]
    bm = trimmed.reshape(c, n_batches, size, *draws.shape[2:]).mean(axis=2)
    bm = bm.reshape(c * n_batches, *draws.shape[2:])
    return bm.std(axis=0, ddof=1) / math.sqrt(c * n_batches)


def metropolis(problem, ms, force=False):
    """Blockwise random-walk Metropolis on the free latent coordinates and the log-precisions."""
    layout = problem.layout
    rng = _rng(ms.seed)
    bases = _block_bases(layout)
    nfree = [B.shape[1] for B in bases]
    offsets = np.concatenate([[0], np.cumsum(nfree)])
    basis = linalg.block_diag(*bases)
    h = problem.n_hyper
    chains = ms.chains
    A = problem.A.toarray()
    lik = problem.likelihood
    names = [b.name for b in layout.blocks]
    blocks = [(nm, slice(offsets[k], offsets[k + 1])) for k, nm in enumerate(names) if nfree[k]]

    def logpost(w, th):
        x = w @ basis.T
        ll = np.sum(lik.loglik(x @ A.T), axis=-1)
        return ll + log_prior_density(layout, x, th) + log_hyperprior(layout, th)

    # per-chain seeds by fixed offsets from the master seed
    chain_rngs = [_rng(ms.seed + c) for c in range(chains)]
    w = np.stack([0.1 * r.standard_normal(offsets[-1]) for r in chain_rngs])
    th = np.stack([math.log(10.0) + 0.1 * r.standard_normal(h) for r in chain_rngs]) if h else np.zeros((chains, 0))
    lp = logpost(w, th)
    # coupled moves: shift one log-precision and rescale its latent block so the
    # standardized block stays put (random walk on log tau along the funnel)
    scaled = [(f"scale:{b.name}", b.hyper, slice(offsets[k], offsets[k + 1]), nfree[k])
              for k, b in enumerate(layout.blocks) if b.hyper is not None and nfree[k]]
    steps = {nm: 0.1 for nm, _ in blocks}
    if h:
        steps["theta"] = 0.3
        steps.update({nm: 0.3 for nm, *_ in scaled})
    if ms.step_sizes:
        steps.update(ms.step_sizes)
    counts = {k: np.zeros(chains) for k in steps}

    def sweep(steps, counts):
        nonlocal w, th, lp
        for nm, sl in blocks:
            prop = w.copy()
            prop[:, sl] += steps[nm] * rng.standard_normal((chains, sl.stop - sl.start))
            lq = logpost(prop, th)
            acc = np.log(rng.random(chains)) < lq - lp
            w = np.where(acc[:, None], prop, w)
            lp = np.where(acc, lq, lp)
            counts[nm] += acc
        if h:
            prop = th + steps["theta"] * rng.standard_normal((chains, h))
            lq = logpost(w, prop)
            acc = np.log(rng.random(chains)) < lq - lp
            th = np.where(acc[:, None], prop, th)
            lp = np.where(acc, lq, lp)
            counts["theta"] += acc
        for nm, k, sl, m in scaled:
            delta = steps[nm] * rng.standard_normal(chains)
            pt = th.copy()
            pt[:, k] += delta
            pw = w.copy()
            pw[:, sl] *= np.exp(-0.5 * delta)[:, None]
            lq = logpost(pw, pt)
            acc = np.log(rng.random(chains)) < lq - lp - 0.5 * m * delta
            w = np.where(acc[:, None], pw, w)
            th = np.where(acc[:, None], pt, th)
            lp = np.where(acc, lq, lp)
            counts[nm] += acc

    # fixed pre-run tuning of scalar step sizes toward the target acceptance
    if not ms.step_sizes:
        rounds = 10
        per = max(ms.tune_iterations // rounds, 1)
        for _ in range(rounds):
            tc = {k: np.zeros(chains) for k in steps}
            for _ in range(per):
                sweep(steps, tc)
            for k in steps:
                rate = tc[k].mean() / per
                steps[k] *= math.exp(2.0 * (rate - ms.target_acceptance))
    keep_w, keep_t = [], []
    for it in range(ms.iterations):
        sweep(steps, counts)
        if it >= ms.burn_in and (it - ms.burn_in) % ms.thin == 0:
            keep_w.append(w.copy())
            keep_t.append(th.copy())
    draws_w = np.stack(keep_w, axis=1)
    draws_t = np.stack(keep_t, axis=1)
    x = draws_w @ basis.T
    rhat = split_rhat(np.concatenate([x, draws_t], axis=-1))
    if rhat > ms.rhat_limit and not force:
        raise OracleNotConverged(f"split R-hat {rhat:.3f} exceeds {ms.rhat_limit}")
    flat = x.reshape(-1, layout.n)
    eta = flat @ A.T
    dev = -2.0 * np.sum(lik.loglik(eta), axis=-1)
    dbar = float(dev.mean())
    dhat = float(-2.0 * np.sum(lik.loglik(eta.mean(axis=0))))
    tflat = draws_t.reshape(draws_t.shape[0] * draws_t.shape[1], h)
    return McmcResult(
        labels=tuple(layout.latent_labels()), hyper_names=tuple(layout.hyper_names), samples=x,
        theta_samples=draws_t,
        acceptance={k: float(v.mean() / ms.iterations) for k, v in counts.items()},
        step_sizes=dict(steps), rhat=rhat, mean=flat.mean(axis=0), sd=flat.std(axis=0, ddof=1),
        mcse=batch_means_se(x), theta_mean=tflat.mean(axis=0), theta_sd=tflat.std(axis=0, ddof=1),
        dic={"mean_deviance": dbar, "deviance_at_mean": dhat, "p_D": dbar - dhat, "DIC": 2 * dbar - dhat},
        spec=ms,
    )


# ---------------------------------------------------------------------------
# synthetic data


def sample_icar(graph, tau, rng):
    """Draw from an ICAR prior restricted to sum-to-zero per connected component."""
    q = icar_precision(graph, tau).to_dense()
    vals, vecs = np.linalg.eigh(q)
    keep = vals > 1e-9 * vals.max()
    z = rng.standard_normal(int(keep.sum()))
    return vecs[:, keep] @ (z / np.sqrt(vals[keep]))


@dataclass(frozen=True, eq=False)
class SyntheticData:
    dataset: Dataset
    graph: AdjacencyGraph
    eta: np.ndarray
    effects: dict
    seed: int
    coords: np.ndarray = None

    @property
    def truth(self):
        return {"eta": self.eta, **self.effects}


def simulate_dataset(graph, effects, populations, seed, covariates=None, intercept=0.0):
    """Binomial counts from ``eta = intercept + sum(effects)`` with a seeded generator.

    ``effects`` maps names to per-unit additive contributions (one row per
    unit); ``covariates`` are carried through into the dataset.
    """
    rng = _rng(seed)
    n = graph.n_units
    populations = np.broadcast_to(np.asarray(populations, dtype=np.int64), (n,))
    eta = np.full(n, float(intercept))
    for name, v in effects.items():
        v = np.asarray(v, dtype=float)
        if v.shape != (n,):
            raise ConfigError(f"effect {name!r} has shape {v.shape}, expected ({n},)")
        eta = eta + v
    y = rng.binomial(populations, expit(eta))
    ds = Dataset(np.arange(n), y, populations, dict(covariates or {}), n)
    return SyntheticData(ds, graph, eta, {"intercept": np.full(n, float(intercept)), **effects}, seed)


def delaunay_graph(points):
    tri = spatial.Delaunay(points)
    edges = set()
    for s in tri.simplices:
        for a in range(3):
            for b in range(a + 1, 3):
                i, j = sorted((int(s[a]), int(s[b])))
                edges.add((i, j))
    return AdjacencyGraph.from_edges(len(points), sorted(edges))


def access_time_effect(t):
    """Smooth decreasing recruitment effect of access time (minutes)."""
    t = np.asarray(t, dtype=float)
    return 1.5 * np.exp(-t / 20.0) - 0.75


def region_covariates(coords, rng, n_zones=7, extent=60.0):
    """Distance, access time, proximity zone and medical density for unit centroids."""
    n = len(coords)
    hcp = np.array([[0.45, 0.5], [0.75, 0.3]]) * extent
    d1 = np.linalg.norm(coords - hcp[0], axis=1)
    d2 = np.linalg.norm(coords - hcp[1], axis=1)
    # road distance plus unit-specific travel conditions, so time is not a pure function of place
    access = 0.8 * d1 + rng.gamma(2.0, 8.0, n)
    centres = coords[rng.choice(n, min(n_zones, n), replace=False)]
    centres[0] = hcp[0]
    zone = np.argmin(np.linalg.norm(coords[:, None, :] - centres[None], axis=2), axis=1) + 1
    density = np.exp(rng.normal(0.0, 0.5, n) - d1 / extent)
    return {
        "distance": d1, "access_time": access, "distance2": d2,
        "zone": zone.astype(float), "density": density,
    }


def simulate_region(n_units=377, seed=0, extent=60.0, intercept=-4.0, tau_icar=4.0, time_effect=True,
                    mean_population=2500.0):
    """Synthetic region: random centroids, Delaunay adjacency, covariates and binomial counts.

    The truth is ICAR + a smooth access-time effect (when ``time_effect``).
    """
    rng = _rng(seed)
    coords = rng.random((n_units, 2)) * extent
    graph = delaunay_graph(coords)
    covs = region_covariates(coords, rng, extent=extent)
    pops = np.maximum(np.round(rng.lognormal(math.log(mean_population), 0.8, n_units)), 20).astype(np.int64)
    effects = {"icar": sample_icar(graph, tau_icar, rng)}
    if time_effect:
        effects["access_time"] = access_time_effect(covs["access_time"])
    sim = simulate_dataset(graph, effects, pops, int(rng.integers(2 ** 63)), covs, intercept)
    return SyntheticData(sim.dataset, graph, sim.eta, sim.effects, seed, coords)


def simulate_lattice(n_rows, n_cols, seed, intercept=-2.0, tau_icar=4.0, population=400, time_effect=True,
                     tau_iid=None):
    """Grid-lattice variant of :func:`simulate_region` with rook adjacency.

    ``tau_iid`` adds an unstructured per-unit effect (convolution truth).
    """
    from .priors import grid_graph

    rng = _rng(seed)
    graph = grid_graph(n_rows, n_cols)
    extent = 60.0
    rr, cc = np.divmod(np.arange(n_rows * n_cols), n_cols)
    coords = np.column_stack([(cc + 0.5) / n_cols, (rr + 0.5) / n_rows]) * extent
    covs = region_covariates(coords, rng, extent=extent)
    effects = {"icar": sample_icar(graph, tau_icar, rng)}
    if tau_iid is not None:
        effects["iid"] = rng.standard_normal(graph.n_units) / math.sqrt(tau_iid)
    if time_effect:
        effects["access_time"] = access_time_effect(covs["access_time"])
    sim = simulate_dataset(graph, effects, population, int(rng.integers(2 ** 63)), covs, intercept)
    return SyntheticData(sim.dataset, graph, sim.eta, sim.effects, seed, coords)
