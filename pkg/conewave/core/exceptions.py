"""Error types raised by conewave services.

Every error derives from :class:`ConewaveError`; most also derive from the builtin
they specialise so callers can catch either. The CLI maps
:class:`InvalidConfigError` to exit code 2 and :class:`AccuracyBudgetError` to 3.
"""


class ConewaveError(Exception):
    pass


class InvalidConfigError(ConewaveError, ValueError):
    pass


class AccuracyBudgetError(ConewaveError):
    pass


class RefinementBudgetError(AccuracyBudgetError):
    pass


class BesselOverflowError(ConewaveError, OverflowError):
    pass


class AliasingError(ConewaveError, ValueError):
    pass


class GridMismatchError(ConewaveError, ValueError):
    pass


class SobolevDivergenceError(ConewaveError, ValueError):
    pass


class TripleValidityError(ConewaveError, ValueError):
    pass


class ZeroDataError(ConewaveError, ValueError):
    pass


class HarmonicLeakageError(ConewaveError, ValueError):
    pass


class SymmetryViolationError(ConewaveError, ValueError):
    pass
