"""Exception types shared across the package."""


class Bloch1dError(Exception):
    """Base class for all package-specific failures."""


class BadRatio(Bloch1dError):
    """A period ratio in a limit-periodic family is not an integer >= 2."""


class ScheduleViolation(Bloch1dError):
    """An amplitude schedule fails the exponential-class decay test."""


class LevelOutOfRange(Bloch1dError):
    """A family level index exceeds the stored depth."""


class StepUnderflow(Bloch1dError):
    """The adaptive ODE integrator could not meet tolerance."""


class BracketFailure(Bloch1dError):
    """A discriminant sign change could not be refined to tolerance."""


class RootNotBracketed(Bloch1dError):
    """A band-function root solve received an inconsistent bracket."""


class GridTooCoarse(Bloch1dError):
    """A quasimomentum grid is too coarse for the requested resolution."""


class CutoffTooSmall(Bloch1dError):
    """The plane-wave cutoff does not retain enough reliable eigenpairs."""


class IncommensurateBox(Bloch1dError):
    """A simulation box is not an integer number of potential periods."""


class BoundaryContamination(Bloch1dError):
    """Wave-packet mass reached the edges of the simulation box."""


class DepthExceeded(Bloch1dError):
    """A cascade was asked for more levels than the family stores."""


class WindowTooShort(Bloch1dError):
    """A fitting window does not span enough of a time series."""
