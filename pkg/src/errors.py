"""
Exception hierarchy shared by the spectral modules and the CLI.
"""


class PseudolapError(Exception):
    """Base class; the CLI exits with ``exit_code`` when one escapes."""
    exit_code = 1


class DomainError(PseudolapError, ValueError):
    """Argument outside the operation's domain."""
    exit_code = 2


class FriedrichsError(DomainError):
    """Operation undefined for the Friedrichs extension (alpha = 0)."""


class PoleError(PseudolapError, ArithmeticError):
    exit_code = 2

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


class ConvergenceError(PseudolapError, RuntimeError):
    """Iteration or quadrature budget exhausted."""


class CutoffError(PseudolapError):
    """Spectral cutoff too small for the requested tolerance."""


class SpectrumTooLargeError(CutoffError):
    """Lattice scan would exceed the memory budget."""
    exit_code = 2


class OutputError(PseudolapError, OSError):
    exit_code = 2
