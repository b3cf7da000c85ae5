"""Exception and warning types raised across gwlab."""


class GWLabError(Exception):
    """Base class for all gwlab errors."""


class NotExpanding(GWLabError, ValueError):
    """The circle map fails the expansion check ``inf |Df| > 1``."""


class ConvergenceFailure(GWLabError, RuntimeError):
    """An iterative solver hit its iteration cap."""


class BudgetExceeded(GWLabError, ValueError):
    """A requested enumeration exceeds the configured work cap."""


class DegenerateDynamics(GWLabError, ValueError):
    """The Lyapunov exponent came out non-positive."""


class CriteriaDisagree(GWLabError, RuntimeError):
    """Periodic-orbit and variance criteria gave conflicting regularity answers."""


class ZeroVariance(GWLabError, ValueError):
    """sigma(phi) is (numerically) zero, so the CLT/LIL normalisation is undefined."""


class NonSummableWarning(RuntimeWarning):
    """Green-Kubo correlation terms did not decay below the requested tolerance."""
