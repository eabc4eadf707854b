"""Exception hierarchy.

Every failure a caller can act on has its own class; the CLI maps
:class:`InputError` subclasses to exit code 2.
"""


class BSTError(Exception):
    """Base class for all package errors."""


class InputError(BSTError):
    """Malformed or unusable input (bad spec file, bad arguments)."""


class NotStarShaped(InputError):
    pass


class NotEmbedded(InputError):
    pass


class OddModePresent(InputError):
    pass


class NotAGraph(BSTError):
    pass


class OnCoincidenceSet(BSTError):
    pass


class GrazingRay(BSTError):
    pass


class NoConvergence(BSTError):
    pass


class NoneFound(BSTError):
    pass


class DegenerateOrbit(BSTError):
    pass


class DegenerateDenominator(BSTError):
    pass


class ZeroEigenvalue(BSTError):
    pass


class InsufficientJet(BSTError):
    pass


class BadSetSingular(BSTError):
    pass


class VanishingThirdDerivative(BSTError):
    pass


class InconsistentSignature(BSTError):
    pass


class ConditionViolated(BSTError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
