"""Exception hierarchy shared by all aeronet modules."""

from __future__ import annotations


class AeronetError(Exception):
    """Base class for data errors raised by the toolkit."""


class ValidationError(AeronetError, ValueError):
    """Invalid user input (bad configuration, bad arguments)."""


# geometry
class InvalidGeometry(AeronetError, ValueError):
    pass


class OverlappingRegions(InvalidGeometry):
    pass


class DegenerateSegment(AeronetError, ValueError):
    pass


class CoincidentPoints(AeronetError, ValueError):
    pass


class SamplingStalled(AeronetError, RuntimeError):
    pass


# trajectory
class MalformedRow(AeronetError, ValueError):
    def __init__(self, line: int, reason: str = ""):
        self.line = line
        msg = f"malformed row at line {line}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class NonMonotoneTime(AeronetError, ValueError):
    def __init__(self, traj_id: str):
        self.traj_id = traj_id
        super().__init__(f"fix times of trajectory {traj_id!r} are not strictly increasing")


class MixedDeltaSign(AeronetError, ValueError):
    pass


class EmptyCorpus(AeronetError, ValueError):
    pass


class DeltaMismatch(AeronetError, ValueError):
    pass


# flowsim
class BlowUp(AeronetError, ArithmeticError):
    pass


# connectivity
class MissingJacobian(AeronetError, KeyError):
    pass


class MissingCovariate(AeronetError, KeyError):
    pass


class NoSamples(AeronetError, ValueError):
    pass


# network
class UnresolvedReceptor(AeronetError, ValueError):
    def __init__(self, traj_id: str):
        self.traj_id = traj_id
        super().__init__(f"cannot resolve receptor region of trajectory {traj_id!r}")


class FormatVersionMismatch(AeronetError, ValueError):
    pass


# metrics
class TooFewNodes(AeronetError, ValueError):
    pass


class NoEdges(AeronetError, ValueError):
    pass


class NoTriplets(AeronetError, ValueError):
    pass


class InsufficientDegrees(AeronetError, ValueError):
    pass


class ZeroVariance(AeronetError, ValueError):
    pass


class DegenerateNull(AeronetError, ValueError):
    pass


class IncompleteVectors(AeronetError, ValueError):
    pass


class TooFewEdges(AeronetError, ValueError):
    pass
