"""Binomial observations with a logit link.

All functions broadcast over numpy arrays. The binomial coefficient is kept
in every log-likelihood so deviances are comparable across models.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InlaError


def expit(eta):
    return special.expit(eta)


def logit(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise InlaError("logit is only defined on the open interval (0, 1)")
    out = special.logit(p)
    return float(out) if out.ndim == 0 else out


def log_binomial_coefficient(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return special.gammaln(n + 1.0) - special.gammaln(k + 1.0) - special.gammaln(n - k + 1.0)


def log_likelihood(y, n, eta):
    """Pointwise ``y*eta - N*log(1 + e^eta) + log C(N, y)``."""
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    eta = np.asarray(eta, dtype=float)
    # y*eta is 0 (not nan) at y=0, eta=-inf
    with np.errstate(invalid="ignore"):
        lin = np.where(y == 0, 0.0, y * eta)
    return lin - n * np.logaddexp(0.0, eta) + log_binomial_coefficient(n, y)


def derivatives(y, n, eta):
    """First three derivatives of :func:`log_likelihood` with respect to ``eta``."""
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    eta = np.asarray(eta, dtype=float)
    p = special.expit(eta)
    q = special.expit(-eta)
    v = n * p * q
    return y - n * p, -v, -v * (q - p)


@dataclass(frozen=True, eq=False)
class BinomialLogit:
    """Observation model consumed by the engine: ``y_j ~ Bin(N_j, expit(eta_j))``."""

    y: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        n = np.asarray(self.n, dtype=float)
        if y.shape != n.shape or y.ndim != 1:
            raise InlaError("y and N must be 1-d arrays of equal length")
        if np.any(n < 1) or np.any(y < 0) or np.any(y > n):
            raise InlaError("binomial data need N >= 1 and 0 <= y <= N")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "_log_coef", log_binomial_coefficient(n, y))

    def __len__(self):
        return len(self.y)

    def loglik(self, eta):
        # same as log_likelihood() with the coefficient cached; the oracles call this on large grids
        eta = np.asarray(eta, dtype=float)
        with np.errstate(invalid="ignore"):
            lin = np.where(self.y == 0, 0.0, self.y * eta)
        return lin - self.n * np.logaddexp(0.0, eta) + self._log_coef

    def derivatives(self, eta):
        return derivatives(self.y, self.n, eta)


@dataclass(frozen=True, eq=False)
class GaussianSurrogate:
    """Test hook: ``y_j ~ N(eta_j, 1 / precision_j)``.

    Every Laplace-type approximation is exact under this likelihood, which
    makes it the reference for wiring checks. ``third`` injects an artificial
    constant third derivative so that the skewness plumbing can be probed
    without changing anything else.
    """

    y: np.ndarray
    precision: np.ndarray
    third: np.ndarray = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        prec = np.broadcast_to(np.asarray(self.precision, dtype=float), y.shape).copy()
        third = np.zeros_like(y) if self.third is None else np.broadcast_to(
            np.asarray(self.third, dtype=float), y.shape).copy()
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "precision", prec)
        object.__setattr__(self, "third", third)

    def __len__(self):
        return len(self.y)

    def loglik(self, eta):
        r = self.y - eta
        return 0.5 * (np.log(self.precision) - np.log(2 * np.pi)) - 0.5 * self.precision * r * r

    def derivatives(self, eta):
        eta = np.asarray(eta, dtype=float)
        d1 = self.precision * (self.y - eta)
        d2 = np.broadcast_to(-self.precision, d1.shape).copy()
        d3 = np.broadcast_to(self.third, d1.shape).copy()
        return d1, d2, d3
