"""Exception types shared across the library."""


class BilliardError(Exception):
    """Base class for all domain errors raised by this package."""


class NumericalError(BilliardError):
    """A linear solve hit a singular or unacceptably ill-conditioned matrix."""


class ConstraintDegeneracyError(BilliardError):
    """Constraint covectors (possibly together with dh) are linearly dependent."""


class DegenerateChartError(BilliardError):
    """The boundary function has a vanishing differential at the impact point."""


class ImpactPreconditionError(BilliardError):
    """The pre-impact velocity violates the constraints beyond tolerance."""


class NonPhysicalImpactError(BilliardError):
    """The impact solution leaves the velocity still exiting the billiard."""


class InvalidStateError(BilliardError):
    """The engine was handed a state outside the table or otherwise unusable."""


class SimultaneousImpactError(BilliardError):
    """Front and back contact points reach the boundary at the same instant."""


class ConfigError(BilliardError):
    """A scenario configuration is malformed or inconsistent."""
