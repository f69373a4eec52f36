"""Exception hierarchy shared by every twedge module.

The CLI reports ``type(exc).__name__`` verbatim, so class names are part of
the public interface.
"""
from __future__ import annotations


class TwEdgeError(Exception):
    """Base class for all library errors."""


# model
class EmptySpectrum(TwEdgeError, ValueError):
    pass


class NonPositiveValue(TwEdgeError, ValueError):
    pass


class NonPositiveWeight(TwEdgeError, ValueError):
    pass


class UnknownName(TwEdgeError, ValueError):
    pass


class ModelError(TwEdgeError, ValueError):
    """A ModelSpec violates the dimension or aspect-ratio constraints."""


# sampler
class DegenerateDraw(TwEdgeError, RuntimeError):
    pass


class InvalidLaw(TwEdgeError, ValueError):
    pass


class WeightRoundingMismatch(TwEdgeError, ValueError):
    pass


class NegativeStrength(TwEdgeError, ValueError):
    pass


# mp_law
class PoleAtZero(TwEdgeError, ZeroDivisionError):
    pass


class PoleAtAtom(TwEdgeError, ZeroDivisionError):
    def __init__(self, atom: float):
        super().__init__(f"1 + w*x vanishes at atom x={atom!r}")
        self.atom = atom


class BracketFailure(TwEdgeError, ArithmeticError):
    pass


class ConditionViolated(TwEdgeError, ArithmeticError):
    pass


class NoConvergence(TwEdgeError, ArithmeticError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class WrongBranch(TwEdgeError, ArithmeticError):
    pass


# spectral
class EigenFailure(TwEdgeError, ArithmeticError):
    pass


class DegenerateGap(TwEdgeError, ArithmeticError):
    pass


# tw_reference / experiments
class MissingCalibration(TwEdgeError, LookupError):
    pass
