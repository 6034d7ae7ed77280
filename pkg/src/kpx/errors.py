"""Exception hierarchy shared by all kpx modules."""


class KPError(Exception):
    """Base class for every error raised by kpx."""


class ParameterError(KPError, ValueError):
    """Invalid model parameter."""


class NonPositiveParameter(ParameterError):
    def __init__(self, field: str, value: float):
        super().__init__(f"parameter {field!r} must be positive, got {value!r}")
        self.field = field
        self.value = value


class NonFinite(ParameterError):
    def __init__(self, field: str, value: float):
        super().__init__(f"parameter {field!r} must be finite, got {value!r}")
        self.field = field
        self.value = value


class EnergyOutOfBranch(KPError, ValueError):
    """Energy lies outside the domain of the requested energy branch."""


class BranchDomainViolation(KPError, ValueError):
    """Energy window extends outside the branch domain."""


class BadRange(KPError, ValueError):
    pass


class DegenerateDenominator(KPError, ArithmeticError):
    """A closed-form coefficient ratio has a vanishing denominator.

    This happens when the amplitude the ratio is normalized to (B or D)
    vanishes; the state itself may still be perfectly regular.
    """


class NotOnDispersionLocus(KPError, ValueError):
    """(E, alpha) does not satisfy the dispersion relation to tolerance."""


class RankDeficiencyTooHigh(KPError, ArithmeticError):
    """Matching system has rank < 3 or cannot be normalized as requested."""


class RequiresEqualMasses(KPError, ValueError):
    pass


class NoBandFound(KPError, ValueError):
    pass
