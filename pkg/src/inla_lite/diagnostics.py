"""Deviance information criterion and exponentiated effect summaries."""

from dataclasses import dataclass

import numpy as np

from .errors import DiagnosticsUnavailable
from .likelihood import expit

DIC_CONVENTION = (
    "Dbar = sum_k w_k E_G[D | theta_k] with a second-order Taylor expansion of the deviance "
    "around eta*(theta_k); plug-in at the posterior mean of the linear predictor; "
    "deviance keeps the binomial coefficient"
)


@dataclass(frozen=True)
class DicResult:
    mean_deviance: float
    deviance_at_point_estimate: float
    p_D: float
    dic: float
    convention: str = DIC_CONVENTION


def dic_from_parts(dbar, dhat):
    p_d = dbar - dhat
    return DicResult(float(dbar), float(dhat), float(p_d), float(dbar + p_d))


def dic(fit):
    points = getattr(fit, "points", None)
    if not points or any(p.var_eta is None for p in points):
        raise DiagnosticsUnavailable("fit carries no per-hyperparameter Gaussian approximations")
    lik = fit.problem.likelihood
    w = np.array([p.weight for p in points])
    w = w / w.sum()
    dbar = 0.0
    eta_bar = np.zeros_like(points[0].eta)
    for wk, p in zip(w, points):
        _, d2, _ = lik.derivatives(p.eta)
        # E[-2 l(eta)] ~ -2 l(eta*) - sum_j d2_j var(eta_j)
        dk = -2.0 * float(np.sum(lik.loglik(p.eta))) - float(np.sum(d2 * p.var_eta))
        dbar += wk * dk
        eta_bar += wk * p.eta
    dhat = -2.0 * float(np.sum(lik.loglik(eta_bar)))
    return dic_from_parts(dbar, dhat)


# ---------------------------------------------------------------------------
# effect tables


@dataclass(frozen=True)
class EffectRow:
    block: str
    level: str
    mean: float
    sd: float
    exp_mean: float
    exp_lower: float
    exp_upper: float


def effect_summaries(fit):
    """Per latent block, the posterior mean and 95% interval of ``exp(x_j)``.

    Summaries transform the marginal grids, not the summaries. A fixed zone
    factor gets an extra "Reference zone" row pinned at 1.
    """
    table = fit.latent
    exp_mean, q = table.transformed(np.exp)
    out = {}
    for b in fit.layout.blocks:
        rows = []
        if b.kind == "zone":
            ref = _reference_label(fit, b)
            rows.append(EffectRow(b.name, f"Reference zone ({ref})" if ref else "Reference zone",
                                  0.0, 0.0, 1.0, 1.0, 1.0))
        for k, lab in enumerate(b.labels):
            i = b.offset + k
            rows.append(EffectRow(b.name, lab, float(table.mean[i]), float(table.sd[i]),
                                  float(exp_mean[i]), float(q[0.025][i]), float(q[0.975][i])))
        out[b.name] = rows
    return out


def _reference_label(fit, block):
    spec = fit.problem.spec
    for t in spec.terms if spec is not None else ():
        if getattr(t, "covariate", None) == block.covariate and hasattr(t, "reference"):
            return t.reference
    return None


@dataclass(frozen=True)
class UnitRow:
    unit_id: int
    y: float
    n: float
    srr: float
    p_mean: float
    p_lower: float
    p_upper: float
    exp_spatial_mean: float
    exp_spatial_lower: float
    exp_spatial_upper: float


def unit_summaries(fit, data):
    """Fitted probability and exponentiated spatial effect per observation row."""
    p_mean, pq = fit.predictor.transformed(expit)
    try:
        icar = fit.layout.block("icar")
    except KeyError:
        icar = None
    if icar is not None:
        e_mean, eq = fit.latent.transformed(np.exp)
    rows = []
    for j in range(len(data)):
        u = int(data.unit_id[j])
        if icar is not None:
            i = icar.offset + u
            sp = (float(e_mean[i]), float(eq[0.025][i]), float(eq[0.975][i]))
        else:
            sp = (float("nan"),) * 3
        rows.append(UnitRow(u, float(data.y[j]), float(data.n[j]), float(data.srr[j]),
                            float(p_mean[j]), float(pq[0.025][j]), float(pq[0.975][j]), *sp))
    return rows
