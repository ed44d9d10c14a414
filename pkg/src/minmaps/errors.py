"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes, so scenario code should raise
the most specific class that applies.
"""


class ConfigError(ValueError):
    """Malformed scenario configuration (bad key, bad value, bad expression)."""


class ChartDomainError(ValueError):
    """A point left the chart domain of a conformal factor (e.g. |z| >= 1 on a disc)."""


class NumericalError(RuntimeError):
    """Numerical failure: non-SPD metric, time-step underflow, diverging flow."""


class StencilError(ValueError):
    """A finite-difference stencil does not fit inside the grid."""
