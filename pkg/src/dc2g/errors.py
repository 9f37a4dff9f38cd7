"""Exception types shared across the package."""


class Dc2gError(Exception):
    """Base class for all package errors."""


class MalformedPng(Dc2gError):
    pass


class UnknownColor(Dc2gError):
    def __init__(self, row, col, rgb):
        self.row = row
        self.col = col
        self.rgb = tuple(int(v) for v in rgb)
        super().__init__(f"pixel ({row},{col}) has color {self.rgb} not present in palette")


class DimensionMismatch(Dc2gError):
    pass


class GoalNotTraversable(Dc2gError):
    pass


class NoFiniteCells(Dc2gError):
    pass


class InfeasibleLayout(Dc2gError):
    pass


class NoTraversableCells(Dc2gError):
    pass


class AgentOffTraversable(Dc2gError):
    pass


class NonAdjacentHop(Dc2gError):
    pass


class NoPath(Dc2gError):
    pass


class ZeroOracle(Dc2gError):
    pass


class TooFewBlocks(Dc2gError):
    pass


class BeliefWorldMismatch(Dc2gError):
    pass


class BridgeError(Dc2gError):
    """Base class for estimator bridge transport failures."""


class BridgeTimeout(BridgeError):
    def __init__(self, timeout_ms):
        self.timeout_ms = timeout_ms
        super().__init__(f"bridge peer did not respond within {timeout_ms} ms")


class BrokenPipe(BridgeError):
    pass


class MalformedFrame(BridgeError):
    pass


class BadImageDims(BridgeError):
    pass


class PlannerEstimatorError(Dc2gError):
    """Raised when an estimator fails during planning; aborts the episode."""
