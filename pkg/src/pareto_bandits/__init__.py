"""Stochastic bandits with post-action contexts.

UCB, C-UCB, phased elimination over context marginals and dynamic
balancing between them, plus the hard instance families and a seeded
simulation harness.
"""
__version__ = "0.1.0"

from .env import (Bernoulli, Deterministic, Environment, dim_span, is_conditionally_benign,
                  load_environment, sample_step)
from .policies import CUCB, UCB, FixedArm
from .elimination import PhasedElimination
from .balancing import DynamicBalancing, corollary_rates, db_hyperparams
from .design import frank_wolfe_design, kw_gap

__all__ = [
    "Bernoulli", "Deterministic", "Environment", "dim_span", "is_conditionally_benign",
    "load_environment", "sample_step", "CUCB", "UCB", "FixedArm", "PhasedElimination",
    "DynamicBalancing", "corollary_rates", "db_hyperparams", "frank_wolfe_design", "kw_gap",
]
