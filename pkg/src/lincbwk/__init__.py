"""Budget-constrained linear contextual bandits: learner, oracle and harness."""

from . import bootstrap, dual, envs, estimation, harness, packing, policy
from .errors import ConfigError, LpNumericsError

__all__ = [
    "bootstrap",
    "dual",
    "envs",
    "estimation",
    "harness",
    "packing",
    "policy",
    "ConfigError",
    "LpNumericsError",
]

__version__ = "0.1.0"
