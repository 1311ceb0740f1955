"""Exception types shared across the package."""


class KnapeaError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(KnapeaError, ValueError):
    """A value has the wrong length or structure (e.g. bitstring vs. instance size)."""


class FeasibilityError(KnapeaError, ValueError):
    """An operation that requires a feasible solution received an infeasible one."""


class ConfigError(KnapeaError, ValueError):
    """An algorithm, generator, or experiment configuration violates its invariants."""


class OracleLimitError(KnapeaError, ValueError):
    """An exact oracle was asked for an instance beyond its stated capacity limits."""
