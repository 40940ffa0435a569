"""Exception hierarchy shared by all solver layers."""


class QIPMError(Exception):
    """Base class for errors raised by this package."""


class DegenerateSystemError(QIPMError):
    """A linear system that should be nonsingular could not be factorized."""


class RankDeficientError(DegenerateSystemError):
    pass


class BinaryLengthUndefined(QIPMError):
    """L undefined for real data; supply a synthetic L instead."""


class ZeroRHSError(QIPMError):
    """The oracle was asked for the direction of a zero right-hand side."""


class NonConvergenceError(QIPMError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class PositivityLossError(QIPMError):
    def __init__(self, message, iteration, trajectory=None, ledger=None):
        super().__init__(message)
        self.iteration = iteration
        self.trajectory = trajectory
        self.ledger = ledger


class InfeasibleStartError(QIPMError):
    pass


class RoundingFailedError(QIPMError):
    def __init__(self, message, partition=None):
        super().__init__(message)
        self.partition = partition


class MPSParseError(QIPMError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
