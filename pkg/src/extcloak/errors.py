"""Exception types shared across the package.

The CLI maps DomainError to exit code 3 and NumericalError to exit
code 4; configuration parse problems are reported separately.
"""


class DomainError(ValueError):
    """Input violates a mathematical precondition (branch cut,
    singularity, divergence region, unsupported wavenumber regime)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or produced an
    unusable result (singular system, non-convergent series)."""
