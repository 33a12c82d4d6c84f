"""Exception hierarchy shared by all modules.

Errors flagged ``domain = True`` describe inputs outside the mathematical
scope of an operation (resonant data, classes outside a cone, degenerate
paths).  The command-line front end maps them to exit code 2; everything
else is an internal failure (exit code 1).
"""


class ReebTwistError(Exception):
    domain = False


class InvalidInput(ReebTwistError, ValueError):
    domain = True


class IntegrationFailure(ReebTwistError):
    pass


class NumericalFailure(ReebTwistError):
    pass


class ConsistencyFailure(ReebTwistError):
    pass


class DegeneratePath(ReebTwistError):
    domain = True


class IterateDegeneracy(DegeneratePath):
    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class NoCone(ReebTwistError):
    domain = True


class NoTorus(ReebTwistError):
    domain = True


class NoPrediction(ReebTwistError):
    domain = True


class ConstructionFailure(ReebTwistError):
    pass


class ProfileInvalid(ReebTwistError):
    pass


class CoordinateError(ReebTwistError):
    pass


class EpsilonTooLarge(ReebTwistError):
    domain = True


class FrameError(ReebTwistError):
    pass


class TooClose(ReebTwistError):
    domain = True


class ReseedRequired(ReebTwistError):
    domain = True


class NotFound(ReebTwistError):
    domain = True


class ShootingDegeneracy(ReebTwistError):
    domain = True


class LiftDiscontinuity(ReebTwistError):
    pass
