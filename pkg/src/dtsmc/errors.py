"""Exception types raised by the library."""


class SemiMarkovError(ValueError):
    """Base class for all errors raised by :mod:`dtsmc`."""


class KernelError(SemiMarkovError):
    """The kernel violates q(0) = 0, nonnegativity or row normalization."""


class NotIrreducible(SemiMarkovError):
    pass


class DimensionMismatch(SemiMarkovError):
    pass


class NonzeroAtZero(SemiMarkovError):
    """Convolution inverse requested for a sequence with A(0) != 0."""


class NegativeTail(SemiMarkovError):
    pass


class EmptySubset(SemiMarkovError):
    pass


class EmptyTrajectory(SemiMarkovError):
    pass


class UnvisitedState(SemiMarkovError):
    """A state needed by an estimator was never left during the observation window."""

    def __init__(self, states):
        self.states = list(states)
        super().__init__(f"state(s) never visited: {', '.join(map(str, self.states))}")


class TimeBeyondHorizon(SemiMarkovError):
    pass


class BadLevel(SemiMarkovError):
    pass
