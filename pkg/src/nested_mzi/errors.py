"""Exception types raised by the simulator."""


class MZIError(Exception):
    """Base class for simulator errors."""


class InvalidNetwork(MZIError, ValueError):
    pass


class PostSelectionSingular(MZIError):
    """Pre- and post-selected states are orthogonal, so weak values are undefined."""


class RampUnresolved(MZIError, ValueError):
    """A phase ramp or displacement is too large for the transverse grid."""


class FreqOutOfRange(MZIError, ValueError):
    pass


class DegenerateSweep(MZIError, ValueError):
    """A scaling sweep cannot be fitted (too few points, too narrow, or lost in round-off)."""


class UnknownScenario(MZIError, KeyError):
    pass


class InvalidOverride(MZIError, ValueError):
    pass


class InvalidParamPath(MZIError, ValueError):
    pass


class ConfigError(MZIError, ValueError):
    pass
