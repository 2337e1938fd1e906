"""Exception types raised by the library."""

from __future__ import annotations


class DisagreementRiskError(ValueError):
    """Base class for all validation errors raised by this package."""


class InvalidPrior(DisagreementRiskError):
    pass


class InvalidSigma(DisagreementRiskError):
    pass


class NonIntegrableTail(DisagreementRiskError):
    pass


class NonCenteredPrior(DisagreementRiskError):
    pass


class NegativeInput(DisagreementRiskError):
    pass


class DegeneratePrior(DisagreementRiskError):
    pass


class InfeasibleConfig(DisagreementRiskError):
    pass
