"""Declarative additive predictors and their latent-field layout.

A :class:`ModelSpec` lists the terms of the linear predictor

    eta_i = mu + sum_a f_a(u_ai) + sum_k beta_k z_ki + f_s[unit_i] + f_u[unit_i]

and :func:`assemble_layout` turns it, together with a :class:`Dataset`, into
contiguous latent blocks, linear constraints and everything needed to build
``Q_prior(theta)`` and the incidence matrix ``A`` with ``eta = A @ x``.
"""

from dataclasses import dataclass, field
import json
import math
from pathlib import Path
import warnings

import numpy as np
from scipy import sparse

from . import gmrf, priors
from .errors import ConfigError, SpecError

MAX_HYPERPARAMETERS = 6


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True, eq=False)
class Dataset:
    """One row per observation; ``unit_id`` indexes the areal units 0..n_units-1."""

    unit_id: np.ndarray
    y: np.ndarray
    n: np.ndarray
    covariates: dict = field(default_factory=dict)
    n_units: int = None

    def __post_init__(self):
        unit = np.asarray(self.unit_id, dtype=np.int64)
        y = np.asarray(self.y, dtype=float)
        n = np.asarray(self.n, dtype=float)
        if not (unit.shape == y.shape == n.shape) or unit.ndim != 1:
            raise SpecError("unit_id, y and N must be 1-d arrays of equal length")
        n_units = int(unit.max()) + 1 if self.n_units is None else int(self.n_units)
        if unit.size and (unit.min() < 0 or unit.max() >= n_units):
            raise SpecError(f"unit ids must lie in 0..{n_units - 1}")
        covs = {}
        for name, col in self.covariates.items():
            col = np.asarray(col)
            if col.shape != y.shape:
                raise SpecError(f"covariate {name!r} has {col.shape[0]} values for {y.size} rows")
            covs[name] = col
        object.__setattr__(self, "unit_id", unit)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "covariates", covs)
        object.__setattr__(self, "n_units", n_units)

    def __len__(self):
        return len(self.y)

    @property
    def srr(self):
        return self.y / self.n

    def numeric(self, name):
        col = self.covariates[name]
        try:
            return np.asarray(col, dtype=float)
        except (TypeError, ValueError):
            raise SpecError(f"covariate {name!r} is not numeric") from None

    def labels(self, name):
        """Covariate values as category labels (integral floats print without decimals)."""
        out = []
        for v in self.covariates[name]:
            if isinstance(v, (float, np.floating)) and float(v).is_integer():
                out.append(str(int(v)))
            else:
                out.append(str(v))
        return np.array(out, dtype=object)

    def permuted_units(self, perm):
        """Same data with unit ``perm[k]`` renamed ``k`` (rows reordered accordingly)."""
        new_of_old = np.empty(len(perm), dtype=np.int64)
        new_of_old[np.asarray(perm)] = np.arange(len(perm))
        unit = new_of_old[self.unit_id]
        order = np.argsort(unit, kind="stable")
        return Dataset(
            unit[order], self.y[order], self.n[order],
            {k: v[order] for k, v in self.covariates.items()}, self.n_units,
        )


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class BinRule:
    rule: str = "fixed"
    width: float = None
    origin: float = None
    k: int = None
    edges: tuple = None

    def __post_init__(self):
        if self.rule == "fixed":
            if not self.width or self.width <= 0:
                raise SpecError("fixed-width binning needs a positive width")
        elif self.rule == "quantile":
            if not self.k or self.k < 3:
                raise SpecError("quantile binning needs k >= 3")
        elif self.rule == "edges":
            if not self.edges or len(self.edges) < 4 or list(self.edges) != sorted(self.edges):
                raise SpecError("explicit edges must be sorted and define at least 3 bins")
        else:
            raise SpecError(f"unknown binning rule {self.rule!r}")


@dataclass(frozen=True)
class Intercept:
    pass


@dataclass(frozen=True)
class Linear:
    covariate: str


@dataclass(frozen=True)
class SmoothRW2:
    covariate: str
    bin: BinRule = BinRule("quantile", k=10)


@dataclass(frozen=True)
class SpatialICAR:
    graph: str = "adjacency"


@dataclass(frozen=True)
class IIDUnit:
    pass


@dataclass(frozen=True)
class ZoneFactor:
    covariate: str
    reference: str
    effect: str = "fixed"

    def __post_init__(self):
        if self.effect not in ("fixed", "random"):
            raise SpecError(f"zone effect must be 'fixed' or 'random', got {self.effect!r}")


@dataclass(frozen=True)
class ModelSpec:
    terms: tuple
    hyperprior: priors.HyperPrior = priors.HyperPrior()
    fixed_prior_precision: float = 0.01
    # how to read the 0.01 in "N(0, 0.01)": as a precision (vague) or a variance
    fixed_prior_parameterization: str = "precision"
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        kinds = [type(t) for t in self.terms]
        for once in (Intercept, SpatialICAR, IIDUnit):
            if kinds.count(once) > 1:
                raise SpecError(f"at most one {once.__name__} term is allowed")
        if self.fixed_prior_precision <= 0:
            raise SpecError("fixed_prior_precision must be positive")
        if self.fixed_prior_parameterization not in ("precision", "variance"):
            raise SpecError("fixed_prior_parameterization must be 'precision' or 'variance'")
        if self.n_hyper > MAX_HYPERPARAMETERS:
            raise SpecError(
                f"model has {self.n_hyper} hyperparameters; the grid-based engine is designed "
                f"for at most {MAX_HYPERPARAMETERS}"
            )

    @property
    def n_hyper(self):
        return sum(
            isinstance(t, (SmoothRW2, SpatialICAR, IIDUnit))
            or (isinstance(t, ZoneFactor) and t.effect == "random")
            for t in self.terms
        )

    @property
    def fixed_precision(self):
        p = self.fixed_prior_precision
        return p if self.fixed_prior_parameterization == "precision" else 1.0 / p

    def covariates(self):
        return [t.covariate for t in self.terms if hasattr(t, "covariate")]


# ---------------------------------------------------------------------------
# binning


@dataclass(frozen=True, eq=False)
class BinnedCovariate:
    bin_edges: np.ndarray
    level_of_row: np.ndarray
    level_values: np.ndarray
    merged: tuple = ()

    @property
    def n_levels(self):
        return len(self.level_values)


def bin_covariate(values, rule, min_levels=3):
    """Assign each value to an ordered bin; empty bins are merged into the nearest occupied one."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise SpecError("cannot bin non-finite covariate values")
    if rule.rule == "fixed":
        w = float(rule.width)
        origin = math.floor(v.min() / w) * w if rule.origin is None else float(rule.origin)
        if v.min() < origin:
            raise SpecError(f"values below the binning origin {origin}")
        nb = int(math.floor((v.max() - origin) / w)) + 1
        edges = origin + w * np.arange(nb + 1)
        level = np.minimum(np.floor((v - origin) / w).astype(np.int64), nb - 1)
    elif rule.rule == "quantile":
        edges = np.unique(np.quantile(v, np.linspace(0.0, 1.0, rule.k + 1)))
        if len(edges) < 2:
            raise SpecError("covariate is constant; it cannot carry a smooth effect")
        level = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, len(edges) - 2)
    else:
        edges = np.asarray(rule.edges, dtype=float)
        if v.min() < edges[0] or v.max() > edges[-1]:
            raise SpecError("covariate values fall outside the explicit bin edges")
        level = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, len(edges) - 2)

    nbins = len(edges) - 1
    counts = np.bincount(level, minlength=nbins)
    occupied = np.nonzero(counts)[0]
    if len(occupied) < min_levels:
        raise SpecError(
            f"only {len(occupied)} non-empty bins; a second-order random walk needs {min_levels}"
        )
    # nearest occupied bin for every bin, ties to the lower one
    target = np.array([occupied[np.argmin(np.abs(occupied - b))] for b in range(nbins)])
    merged = tuple(
        (float(edges[b]), float(edges[b + 1]), float(edges[t]), float(edges[t + 1]))
        for b, t in enumerate(target) if b != t
    )
    new_index = np.searchsorted(occupied, target)
    new_edges = [edges[0]] + [edges[b + 1] for b in range(nbins - 1) if new_index[b] != new_index[b + 1]] + [edges[-1]]
    new_edges = np.asarray(new_edges)
    level = new_index[level]
    mids = 0.5 * (new_edges[:-1] + new_edges[1:])
    return BinnedCovariate(new_edges, level, mids, merged)


# ---------------------------------------------------------------------------
# layout


@dataclass(frozen=True, eq=False)
class Block:
    name: str
    kind: str
    offset: int
    length: int
    labels: tuple
    hyper: int = None
    structure: gmrf.SymmetricSparseMatrix = None
    rank_deficiency: int = 0
    level_values: np.ndarray = None
    row_column: np.ndarray = None
    row_value: np.ndarray = None
    covariate: str = None

    @property
    def slice(self):
        return slice(self.offset, self.offset + self.length)

    @property
    def intrinsic(self):
        return self.kind in ("icar", "rw2")


@dataclass(frozen=True, eq=False)
class LatentLayout:
    n: int
    blocks: tuple
    constraint_rows: np.ndarray
    hyper_names: tuple
    fixed_precision: float
    hyperprior: priors.HyperPrior
    n_units: int
    notes: tuple = ()

    @property
    def n_hyper(self):
        return len(self.hyper_names)

    def block(self, name):
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def latent_labels(self):
        return [f"{b.name}[{lab}]" for b in self.blocks for lab in b.labels]


def _graph_for(term, graphs):
    if isinstance(graphs, priors.AdjacencyGraph):
        return graphs
    if graphs is None:
        raise SpecError("an ICAR term needs an adjacency graph")
    if isinstance(term.graph, priors.AdjacencyGraph):
        return term.graph
    if term.graph in graphs:
        return graphs[term.graph]
    if len(graphs) == 1:
        return next(iter(graphs.values()))
    raise SpecError(f"unknown graph {term.graph!r}")


def assemble_layout(spec, data, graphs=None):
    """Map the model terms onto contiguous latent blocks."""
    for cov in spec.covariates():
        if cov not in data.covariates:
            raise SpecError(f"unknown covariate {cov!r}")
    order = {Intercept: 0, Linear: 1, ZoneFactor: 1, SmoothRW2: 2, SpatialICAR: 3, IIDUnit: 4}
    terms = sorted(spec.terms, key=lambda t: order[type(t)])  # stable: keeps spec order within a rank
    blocks = []
    notes = []
    hyper_names = []
    offset = 0
    fixed = spec.fixed_precision
    n_rows = len(data)

    def add(**kw):
        nonlocal offset
        b = Block(offset=offset, **kw)
        blocks.append(b)
        offset += b.length
        return b

    def hyper(name):
        hyper_names.append(name)
        return len(hyper_names) - 1

    names_seen = {}

    def unique_name(base):
        k = names_seen.get(base, 0)
        names_seen[base] = k + 1
        return base if k == 0 else f"{base}#{k + 1}"

    for t in terms:
        if isinstance(t, Intercept):
            add(name="intercept", kind="intercept", length=1, labels=("mu",),
                row_column=np.zeros(n_rows, dtype=np.int64), row_value=np.ones(n_rows))
        elif isinstance(t, Linear):
            z = data.numeric(t.covariate)
            add(name=unique_name(f"beta:{t.covariate}"), kind="linear", length=1, labels=(t.covariate,),
                row_column=np.zeros(n_rows, dtype=np.int64), row_value=z, covariate=t.covariate)
        elif isinstance(t, ZoneFactor):
            labels = data.labels(t.covariate)
            levels = sorted(set(labels), key=_natural_key)
            if t.effect == "fixed":
                if t.reference not in levels:
                    raise SpecError(f"reference zone {t.reference!r} not present in {t.covariate!r}")
                cols = [lv for lv in levels if lv != t.reference]
                if not cols:
                    raise SpecError(f"zone covariate {t.covariate!r} has a single level")
                pos = {lv: k for k, lv in enumerate(cols)}
                col = np.array([pos.get(lab, -1) for lab in labels], dtype=np.int64)
                add(name=unique_name(f"zone:{t.covariate}"), kind="zone", length=len(cols),
                    labels=tuple(cols), row_column=col,
                    row_value=(col >= 0).astype(float), covariate=t.covariate)
            else:
                pos = {lv: k for k, lv in enumerate(levels)}
                col = np.array([pos[lab] for lab in labels], dtype=np.int64)
                name = unique_name(f"zone:{t.covariate}")
                add(name=name, kind="zone_random", length=len(levels), labels=tuple(levels),
                    hyper=hyper(f"tau[{name}]"), row_column=col, row_value=np.ones(n_rows),
                    covariate=t.covariate)
        elif isinstance(t, SmoothRW2):
            binned = bin_covariate(data.numeric(t.covariate), t.bin)
            if binned.merged:
                notes.append(f"rw2:{t.covariate}: merged {len(binned.merged)} empty bin(s)")
            m = binned.n_levels
            name = unique_name(f"rw2:{t.covariate}")
            add(name=name, kind="rw2", length=m,
                labels=tuple(_fmt(v) for v in binned.level_values), hyper=hyper(f"tau[{name}]"),
                structure=priors.rw2_precision(m, 1.0), rank_deficiency=2,
                level_values=binned.level_values, row_column=binned.level_of_row,
                row_value=np.ones(n_rows), covariate=t.covariate)
        elif isinstance(t, SpatialICAR):
            g = _graph_for(t, graphs)
            if g.n_units != data.n_units:
                raise SpecError(f"graph has {g.n_units} units but the data index {data.n_units}")
            ncomp = g.n_components
            if ncomp > 1:
                msg = f"adjacency graph has {ncomp} connected components"
                notes.append(msg)
                warnings.warn(msg, stacklevel=2)
            # level_values holds the connected-component label of each unit
            add(name="icar", kind="icar", length=g.n_units, labels=tuple(str(i) for i in range(g.n_units)),
                hyper=hyper("tau[icar]"), structure=priors.icar_precision(g, 1.0),
                rank_deficiency=ncomp, level_values=g.components().astype(float),
                row_column=data.unit_id.copy(), row_value=np.ones(n_rows))
        elif isinstance(t, IIDUnit):
            add(name="iid", kind="iid", length=data.n_units,
                labels=tuple(str(i) for i in range(data.n_units)), hyper=hyper("tau[iid]"),
                row_column=data.unit_id.copy(), row_value=np.ones(n_rows))

    n = offset
    has_intercept = any(b.kind == "intercept" for b in blocks)
    linear_covs = {b.covariate for b in blocks if b.kind == "linear"}
    rows = []
    first_intrinsic = True
    for b in blocks:
        if not b.intrinsic:
            continue
        if not has_intercept and first_intrinsic:
            # without an intercept the first intrinsic block carries the overall level
            first_intrinsic = False
            if b.kind == "rw2" and b.covariate in linear_covs:
                rows.append(_embed(n, b, np.arange(b.length) - 0.5 * (b.length - 1)))
            continue
        first_intrinsic = False
        if b.kind == "icar":
            comp = b.level_values.astype(np.int64)
            for c in range(comp.max() + 1):
                rows.append(_embed(n, b, (comp == c).astype(float)))
        else:
            rows.append(_embed(n, b, np.ones(b.length)))
            if b.covariate in linear_covs:
                rows.append(_embed(n, b, np.arange(b.length) - 0.5 * (b.length - 1)))
    constraints = np.array(rows) if rows else np.zeros((0, n))
    constraints.setflags(write=False)
    return LatentLayout(
        n=n, blocks=tuple(blocks), constraint_rows=constraints, hyper_names=tuple(hyper_names),
        fixed_precision=fixed, hyperprior=spec.hyperprior, n_units=data.n_units, notes=tuple(notes),
    )


def _embed(n, block, vec):
    row = np.zeros(n)
    row[block.slice] = vec
    return row


def _natural_key(label):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def _fmt(v):
    return f"{v:.6g}"


def prior_precision(layout, theta):
    """Block-diagonal ``Q_prior(theta)`` with ``theta`` the log-precisions."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (layout.n_hyper,):
        raise SpecError(f"expected {layout.n_hyper} hyperparameters, got {theta.shape[0]}")
    parts = []
    for b in layout.blocks:
        if b.kind in ("intercept", "linear", "zone"):
            parts.append(priors.fixed_effect_precision(b.length, layout.fixed_precision))
        elif b.kind in ("icar", "rw2"):
            parts.append(b.structure.scaled(math.exp(theta[b.hyper])))
        else:
            parts.append(priors.iid_precision(b.length, math.exp(theta[b.hyper])))
    return gmrf.block_diag(parts)


def incidence(layout, data):
    """Sparse ``A`` (rows = observations) with ``eta = A @ x``."""
    rows, cols, vals = [], [], []
    obs = np.arange(len(data))
    for b in layout.blocks:
        keep = (b.row_column >= 0) & (b.row_value != 0)
        rows.append(obs[keep])
        cols.append(b.offset + b.row_column[keep])
        vals.append(b.row_value[keep])
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(data), layout.n),
    )


def log_prior_density(layout, x, theta):
    """``log pi(x | theta)`` under the convention of :mod:`inla_lite.priors`.

    ``x`` may carry leading batch axes, and so may ``theta`` (shape
    ``(..., n_hyper)``) as long as the two broadcast.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0:
        theta = theta[None]
    total = np.zeros(np.broadcast_shapes(x.shape[:-1], theta.shape[:-1]))
    for b in layout.blocks:
        xb = x[..., b.slice]
        if b.kind in ("intercept", "linear", "zone"):
            total = total + priors.iid_log_density(xb, layout.fixed_precision)
        elif b.kind in ("icar", "rw2"):
            total = total + priors.intrinsic_log_density(
                b.structure, np.exp(theta[..., b.hyper]), xb, b.rank_deficiency)
        else:
            total = total + priors.iid_log_density(xb, np.exp(theta[..., b.hyper]))
    return total


def log_hyperprior(layout, theta):
    """Sum of the hyperprior log-densities on the log-precision scale (batched on leading axes)."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0:
        theta = theta[None]
    out = np.sum(priors.log_hyperprior_theta(theta, layout.hyperprior), axis=-1) if theta.shape[-1] else np.zeros(theta.shape[:-1])
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# configuration files and presets

_TERM_KEYS = {
    "intercept": {"kind"},
    "linear": {"kind", "covariate"},
    "rw2": {"kind", "covariate", "bin"},
    "icar": {"kind", "graph"},
    "iid": {"kind"},
    "zone_factor": {"kind", "covariate", "reference", "effect"},
}
_TOP_KEYS = {"terms", "hyperprior", "fixed_prior_precision", "fixed_prior_parameterization", "name"}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    extra = set(obj) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}")


def _bin_rule(obj):
    if obj is None:
        return BinRule("quantile", k=10)
    _check_keys(obj, {"rule", "width", "origin", "k", "edges"}, "bin")
    rule = obj.get("rule", "fixed")
    edges = obj.get("edges")
    return BinRule(rule, width=obj.get("width"), origin=obj.get("origin"), k=obj.get("k"),
                   edges=tuple(edges) if edges is not None else None)


def spec_from_dict(cfg, name=None):
    _check_keys(cfg, _TOP_KEYS, "model config")
    if "terms" not in cfg or not isinstance(cfg["terms"], list):
        raise ConfigError("model config needs a 'terms' list")
    terms = []
    for k, t in enumerate(cfg["terms"]):
        kind = t.get("kind") if isinstance(t, dict) else None
        if kind not in _TERM_KEYS:
            raise ConfigError(f"term {k}: unknown kind {kind!r}")
        _check_keys(t, _TERM_KEYS[kind], f"term {k} ({kind})")
        try:
            if kind == "intercept":
                terms.append(Intercept())
            elif kind == "linear":
                terms.append(Linear(t["covariate"]))
            elif kind == "rw2":
                terms.append(SmoothRW2(t["covariate"], _bin_rule(t.get("bin"))))
            elif kind == "icar":
                terms.append(SpatialICAR(t.get("graph", "adjacency")))
            elif kind == "iid":
                terms.append(IIDUnit())
            else:
                terms.append(ZoneFactor(t["covariate"], str(t["reference"]), t.get("effect", "fixed")))
        except KeyError as exc:
            raise ConfigError(f"term {k} ({kind}): missing key {exc}") from None
    hp = cfg.get("hyperprior", {"a": 0.001, "b": 0.001})
    _check_keys(hp, {"a", "b"}, "hyperprior")
    return ModelSpec(
        terms=tuple(terms),
        hyperprior=priors.HyperPrior(float(hp.get("a", 0.001)), float(hp.get("b", 0.001))),
        fixed_prior_precision=float(cfg.get("fixed_prior_precision", 0.01)),
        fixed_prior_parameterization=cfg.get("fixed_prior_parameterization", "precision"),
        name=cfg.get("name", name or "model"),
    )


def spec_to_dict(spec):
    terms = []
    for t in spec.terms:
        if isinstance(t, Intercept):
            terms.append({"kind": "intercept"})
        elif isinstance(t, Linear):
            terms.append({"kind": "linear", "covariate": t.covariate})
        elif isinstance(t, SmoothRW2):
            b = {k: v for k, v in (("rule", t.bin.rule), ("width", t.bin.width), ("origin", t.bin.origin),
                                   ("k", t.bin.k), ("edges", list(t.bin.edges) if t.bin.edges else None))
                 if v is not None}
            terms.append({"kind": "rw2", "covariate": t.covariate, "bin": b})
        elif isinstance(t, SpatialICAR):
            terms.append({"kind": "icar", "graph": str(t.graph)})
        elif isinstance(t, IIDUnit):
            terms.append({"kind": "iid"})
        else:
            terms.append({"kind": "zone_factor", "covariate": t.covariate,
                          "reference": t.reference, "effect": t.effect})
    return {
        "name": spec.name,
        "terms": terms,
        "hyperprior": {"a": spec.hyperprior.a, "b": spec.hyperprior.b},
        "fixed_prior_precision": spec.fixed_prior_precision,
        "fixed_prior_parameterization": spec.fixed_prior_parameterization,
    }


def load_model_config(path):
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return spec_from_dict(cfg, name=path.stem)


_BASE = [{"kind": "intercept"}, {"kind": "icar", "graph": "adjacency"}]

PRESETS = {
    "icar-only": ("ICAR alone", []),
    "convolution": ("ICAR and heterogeneity (convolution)", [{"kind": "iid"}]),
    "icar-dist": ("ICAR and distance to provider",
                  [{"kind": "rw2", "covariate": "distance", "bin": {"rule": "fixed", "width": 5}}]),
    "icar-time": ("ICAR and access time to provider",
                  [{"kind": "rw2", "covariate": "access_time", "bin": {"rule": "fixed", "width": 5}}]),
    "icar-dist2": ("ICAR and distance to the second provider",
                   [{"kind": "rw2", "covariate": "distance2", "bin": {"rule": "fixed", "width": 5}}]),
    "icar-zone": ("ICAR and proximity zone (as factor)",
                  [{"kind": "zone_factor", "covariate": "zone", "reference": "7"}]),
    "icar-density": ("ICAR and medical density",
                     [{"kind": "rw2", "covariate": "density", "bin": {"rule": "quantile", "k": 10}}]),
}

# the six explicative rows of the DIC comparison, in table order
TABLE1_PRESETS = ("icar-only", "icar-dist", "icar-time", "icar-dist2", "icar-zone", "icar-density")


def preset(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    label, extra = PRESETS[name]
    return spec_from_dict({"name": label, "terms": _BASE + extra})
