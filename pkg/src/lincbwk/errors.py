"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Experiment configuration is malformed (unknown key, missing field, bad value)."""


class LpNumericsError(RuntimeError):
    """The LP solver failed to converge or to certify its solution.

    The offending instance is dumped to a text file for triage; the path is
    included in the message.
    """
