"""Exception types raised across the package."""


class MecError(Exception):
    """Base class for all package errors."""


class ConfigError(MecError, ValueError):
    pass


class EmptyScenario(MecError, ValueError):
    pass


class InvalidRange(MecError, ValueError):
    pass


class TooFewPoints(MecError, ValueError):
    pass


class DegenerateGeometry(MecError, ValueError):
    pass


class ZeroRateWithLoad(MecError, ValueError):
    pass


class ZeroCpuWithLoad(MecError, ValueError):
    pass


class DimensionMismatch(MecError, ValueError):
    pass


class InfeasibleStart(MecError, ValueError):
    pass


class Infeasible(MecError):
    """No decision vector satisfies the deadline/capacity constraints."""


class InstanceTooLarge(MecError, ValueError):
    pass


class NoFeasiblePoint(MecError):
    pass


class MissingInput(MecError, FileNotFoundError):
    pass
