"""Exception types raised by the simulator."""


class WalkError(Exception):
    """Base class for all domain errors."""


class BoundaryOverflow(WalkError):
    """Nonzero amplitude would be shifted off the finite lattice."""


class ZeroNorm(WalkError):
    """The walker state has fully decayed."""


class DegenerateBand(WalkError):
    """The band gap closes (or the winding vector vanishes) on the k-loop."""


class EmptyDistribution(WalkError):
    """A probability row or count table carries no weight."""


class MalformedTable(WalkError):
    """A count table is ragged, negative or otherwise unreadable."""


class ConfigError(WalkError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
