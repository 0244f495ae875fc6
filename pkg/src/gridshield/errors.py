"""Exception types shared across the package."""


class GridShieldError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArena(GridShieldError):
    pass


class InvalidMap(GridShieldError):
    pass


class NotADecisionLocation(GridShieldError):
    pass


class ParseError(GridShieldError):
    pass


class AllZeroWeights(GridShieldError):
    pass


class ActionNotEnabled(GridShieldError):
    pass


class PolicyReturnedBlockedTask(GridShieldError):
    pass


class HorizonZero(GridShieldError):
    pass


class NotPostDecisionState(GridShieldError):
    pass


class TaskNotAvailable(GridShieldError):
    pass


class NoFirstDecisionState(GridShieldError):
    pass


class StateNotInPreviousModel(GridShieldError):
    pass


class DeltaOutOfRange(GridShieldError):
    pass


class ArenaTooSmall(GridShieldError):
    pass


class GameOver(GridShieldError):
    pass


class DivergenceDetected(GridShieldError):
    pass
