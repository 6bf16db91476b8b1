"""Approximate Bayesian inference for binomial-logit latent Gaussian models
with integrated nested Laplace approximations."""

from .engine import FitOptions, FitResult, build_problem, fit
from .model import Dataset, ModelSpec, PRESETS, TABLE1_PRESETS, preset
from .priors import AdjacencyGraph

__version__ = "0.1.0"
