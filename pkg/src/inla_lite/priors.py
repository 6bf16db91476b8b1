"""Prior precisions and hyperprior densities for the additive predictor terms.

ICAR, RW2, iid and fixed-effect precisions are returned as
:class:`~inla_lite.gmrf.SymmetricSparseMatrix`. Hyperparameters are gamma
distributed precisions; the engine works with ``theta = log(tau)``.
"""

from dataclasses import dataclass
import math
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.special import gammaln

from . import gmrf
from .errors import InlaError, InputError, IsolatedUnit, TooFewLevels

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class AdjacencyGraph:
    """Undirected neighbourhood structure over ``n_units`` areas."""

    n_units: int
    neighbors: tuple

    def __post_init__(self):
        if self.n_units < 1:
            raise InputError("graph must have at least one unit")
        if len(self.neighbors) != self.n_units:
            raise InputError(f"expected {self.n_units} neighbour lists, got {len(self.neighbors)}")
        for i, nb in enumerate(self.neighbors):
            if list(nb) != sorted(set(nb)):
                raise InputError(f"neighbours of unit {i} must be sorted and unique")
            for j in nb:
                if j == i:
                    raise InputError(f"unit {i} lists itself as a neighbour")
                if not 0 <= j < self.n_units:
                    raise InputError(f"unit {i} has unknown neighbour {j}")
                if i not in self.neighbors[j]:
                    raise InputError(f"adjacency is not symmetric: {i} -> {j} but not {j} -> {i}")

    @classmethod
    def from_edges(cls, n_units, edges):
        nb = [set() for _ in range(n_units)]
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                continue
            nb[i].add(j)
            nb[j].add(i)
        return cls(n_units, tuple(tuple(sorted(s)) for s in nb))

    @property
    def n_i(self):
        return np.array([len(nb) for nb in self.neighbors], dtype=np.int64)

    def edges(self):
        return [(i, j) for i, nb in enumerate(self.neighbors) for j in nb if i < j]

    def components(self):
        """Connected-component label per unit, numbered by first appearance."""
        e = np.array(self.edges(), dtype=np.int64).reshape(-1, 2)
        adj = sparse.coo_matrix(
            (np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(self.n_units, self.n_units)
        )
        _, labels = csgraph.connected_components(adj, directed=False)
        # relabel in order of first occurrence so labels are deterministic
        order = {}
        return np.array([order.setdefault(lab, len(order)) for lab in labels], dtype=np.int64)

    @property
    def n_components(self):
        return int(self.components().max()) + 1

    def permuted(self, perm):
        """Graph with unit ``perm[k]`` relabelled as ``k``."""
        perm = list(perm)
        new_of_old = {old: new for new, old in enumerate(perm)}
        return AdjacencyGraph.from_edges(
            self.n_units, [(new_of_old[i], new_of_old[j]) for i, j in self.edges()]
        )


def path_graph(n):
    return AdjacencyGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def grid_graph(n_rows, n_cols):
    """Rook adjacency on a rectangular lattice, units numbered row-major."""
    edges = []
    for r in range(n_rows):
        for c in range(n_cols):
            k = r * n_cols + c
            if c + 1 < n_cols:
                edges.append((k, k + 1))
            if r + 1 < n_rows:
                edges.append((k, k + n_cols))
    return AdjacencyGraph.from_edges(n_rows * n_cols, edges)


def read_adjacency(path):
    """Read ``unit_id n_neighbors id1 ... idk`` lines (0-based ids)."""
    try:
        lines = [ln.split() for ln in Path(path).read_text().splitlines()]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    rows = {}
    for lineno, parts in enumerate(lines, start=1):
        if not parts or parts[0].startswith("#"):
            continue
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-integer token") from None
        unit, count, ids = nums[0], nums[1] if len(nums) > 1 else -1, nums[2:]
        if count != len(ids):
            raise InputError(f"{path}:{lineno}: unit {unit} declares {count} neighbours, lists {len(ids)}")
        if unit in rows:
            raise InputError(f"{path}:{lineno}: unit {unit} listed twice")
        rows[unit] = ids
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise InputError(f"{path}: unit ids must be exactly 0..{n - 1}")
    for i, ids in rows.items():
        for j in ids:
            if j not in rows:
                raise InputError(f"{path}: unit {i} refers to unknown unit {j}")
            if j == i:
                raise InputError(f"{path}: unit {i} lists itself as a neighbour")
            if i not in rows[j]:
                raise InputError(f"{path}: asymmetric adjacency, pair ({i}, {j})")
    return AdjacencyGraph(n, tuple(tuple(sorted(set(rows[i]))) for i in range(n)))


def write_adjacency(graph, path):
    with open(path, "w", newline="\n") as fh:
        for i, nb in enumerate(graph.neighbors):
            fh.write(" ".join(str(v) for v in (i, len(nb), *nb)) + "\n")


@dataclass(frozen=True)
class HyperPrior:
    """Gamma(shape, rate) prior on a precision."""

    a: float = 0.001
    b: float = 0.001

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InlaError(f"gamma hyperprior needs a > 0 and b > 0, got ({self.a}, {self.b})")


def icar_precision(g, tau):
    if tau <= 0:
        raise InlaError("ICAR precision must be positive")
    isolated = [i for i, nb in enumerate(g.neighbors) if not nb]
    if isolated:
        raise IsolatedUnit(isolated)
    entries = [(i, i, tau * len(nb)) for i, nb in enumerate(g.neighbors)]
    entries += [(i, j, -tau) for i, j in g.edges()]
    return gmrf.build(g.n_units, entries)


def rw2_precision(m, tau):
    if m < 3:
        raise TooFewLevels(f"a second-order random walk needs at least 3 levels, got {m}")
    if tau <= 0:
        raise InlaError("RW2 precision must be positive")
    d = np.zeros((m - 2, m))
    for k in range(m - 2):
        d[k, k : k + 3] = (1.0, -2.0, 1.0)
    return gmrf.from_dense(tau * (d.T @ d))


def iid_precision(m, tau):
    if tau <= 0:
        raise InlaError("iid precision must be positive")
    return gmrf.build(m, [(i, i, tau) for i in range(m)])


def fixed_effect_precision(count, prior_precision):
    if count < 1 or prior_precision <= 0:
        raise InlaError("fixed-effect block needs count >= 1 and a positive prior precision")
    return gmrf.build(count, [(i, i, prior_precision) for i in range(count)])


def iid_log_density(f, tau):
    """Normalized log-density of ``f ~ N(0, I / tau)``.

    ``f`` may be batched on leading axes; ``tau`` then broadcasts against them.
    """
    f = np.asarray(f, dtype=float)
    m = f.shape[-1]
    return 0.5 * m * (np.log(tau) - LOG_2PI) - 0.5 * tau * np.sum(f * f, axis=-1)


def log_gamma_density(tau, hp):
    tau = np.asarray(tau, dtype=float)
    if np.any(~(tau > 0)):
        raise InlaError(f"gamma density needs tau > 0, got {tau}")
    out = hp.a * math.log(hp.b) - gammaln(hp.a) + (hp.a - 1.0) * np.log(tau) - hp.b * tau
    return float(out) if out.ndim == 0 else out


def log_hyperprior_theta(theta, hp):
    """Gamma prior on ``tau = exp(theta)`` expressed as a density on ``theta``."""
    return log_gamma_density(np.exp(theta), hp) + theta


def quadratic_form(q, f):
    """``f' Q f`` for a symmetric matrix ``q``, batched over leading axes of ``f``."""
    f = np.asarray(f, dtype=float)
    if isinstance(q, gmrf.SymmetricSparseMatrix):
        q = q.to_scipy()
    qf = (q @ f.reshape(-1, f.shape[-1]).T).T.reshape(f.shape)
    return np.sum(f * qf, axis=-1)


def intrinsic_log_density(q_structure, tau, f, rank_deficiency):
    """Unnormalized intrinsic GMRF log-density with rank-based exponent.

    The ``-(rank/2) log(2 pi)`` and generalized-determinant constants are
    dropped; they do not depend on ``tau``.
    """
    f = np.asarray(f, dtype=float)
    dim = q_structure.dim if isinstance(q_structure, gmrf.SymmetricSparseMatrix) else q_structure.shape[0]
    if f.shape[-1] != dim:
        raise InlaError(f"effect vector has length {f.shape[-1]}, structure has dimension {dim}")
    return 0.5 * (dim - rank_deficiency) * np.log(tau) - 0.5 * tau * quadratic_form(q_structure, f)
