"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class QkzError(Exception):
    """Base class for every error raised by the package."""


class ConfigInvalid(QkzError, ValueError):
    """A configuration or parameter invariant does not hold."""


class InvalidProfile(ConfigInvalid):
    """A weight profile violates the monotonicity constraint."""


class NotConvergent(ConfigInvalid):
    """The weight profile lies outside the positive Weyl chamber."""


class PoleOrZero(QkzError, ArithmeticError):
    """Evaluation point lies on (or within tolerance of) a pole or zero lattice."""

    def __init__(self, message: str, lattice: str = "", point: complex | None = None):
        super().__init__(message)
        self.lattice = lattice
        self.point = point


class NonConvergence(QkzError, ArithmeticError):
    """An internal quadrature did not reach its tolerance."""


class SingularDenominator(QkzError, ArithmeticError):
    """The R-matrix denominator vanishes."""


class LegOutOfRange(QkzError, IndexError):
    """A tensor leg index is outside 1..N or the two legs coincide."""


class ContourPinch(QkzError, ArithmeticError):
    """Two singularities are too close to separate by the contour rule."""


class PoleCrossing(QkzError, ArithmeticError):
    """An analytic continuation path runs into a pinch of the contour."""


class ToleranceNotMet(QkzError, ArithmeticError):
    """A numerical result failed its requested accuracy."""


EXIT_CODES = {"ok": 0, "check_failed": 1, "config": 2, "numerical": 3}


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(exc, ConfigInvalid):
        return EXIT_CODES["config"]
    if isinstance(exc, QkzError):
        return EXIT_CODES["numerical"]
    return EXIT_CODES["numerical"]
