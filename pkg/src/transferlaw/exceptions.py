"""Exception and warning classes shared across the package."""


class TransferLawError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(TransferLawError, ValueError):
    """Input failed a precondition (bad shape, sign, domain...)."""


class NonIdentifiableError(TransferLawError):
    """The data cannot determine the requested parameters."""


class NonIdentifiableWarning(UserWarning):
    """A fit succeeded but some parameters are not determined by the data."""


class AdmissibilityWarning(UserWarning):
    """A learning rate violates the sufficient stability condition."""
