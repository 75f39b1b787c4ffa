"""Exceptions raised by the kinetic laboratory."""


class BoltzlabError(Exception):
    """Base class for every error raised by the laboratory."""


class GridError(BoltzlabError, ValueError):
    """Invalid velocity grid, mismatched grids, or aliasing on the periodic box."""


class KernelError(BoltzlabError, ValueError):
    """Invalid collision kernel parameters or angles outside the kernel's domain."""


class DomainError(BoltzlabError, ValueError):
    """An operation was called outside its precondition."""


class StabilityError(BoltzlabError, RuntimeError):
    """Explicit time stepping increased the energy; the step is too large."""


class NoCrossingError(BoltzlabError, RuntimeError):
    """A decay trajectory never reached the critical level."""
