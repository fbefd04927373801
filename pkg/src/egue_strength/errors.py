"""Exception types shared across the package."""


class DomainError(ValueError):
    """Raised when (N, m, k, k0) fall outside a formula's domain."""


class CostGuardError(RuntimeError):
    """Raised when an exact or sampled computation would exceed its size cap."""
