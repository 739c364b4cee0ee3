"""Desk-scale numerical verification of Gaussian sprinkled decoupling
inequalities, threshold random variables, capacity and maximum-correlation
solvers, and the multi-scale bootstrap behind level-set percolation bounds."""

from . import analytic, bootstrap, events, kernels, mc, measures, sampler
from .errors import SdlabError

__all__ = ["analytic", "bootstrap", "events", "kernels", "mc", "measures", "sampler", "SdlabError"]

__version__ = "0.1.0"
