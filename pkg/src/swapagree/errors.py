"""Exception hierarchy shared across the simulator."""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for every error raised by swapagree."""


class UsageError(SimulationError):
    """A caller violated an operation's contract (bad index, wrong mode)."""


class InvalidInputError(UsageError):
    """A process input lies outside the value domain."""


class ParameterError(UsageError):
    """Protocol or scenario parameters are inconsistent."""


class CorruptionError(SimulationError):
    """A value or trace is not something the simulator could have produced.

    ``index`` points at the first offending trace event when known.
    """

    def __init__(self, message: str, index: int | None = None) -> None:
        super().__init__(message)
        self.index = index


class ScheduleError(SimulationError):
    """A schedule named a decided or nonexistent process."""

    def __init__(self, message: str, index: int) -> None:
        super().__init__(message)
        self.index = index


class IndistinguishabilityError(SimulationError):
    """Mirroring an execution from another configuration failed."""

    def __init__(self, message: str, index: int | None = None) -> None:
        super().__init__(message)
        self.index = index


class StaleCoverError(SimulationError):
    """A cover member is no longer poised on the object it was recorded with."""


class SearchExhausted(SimulationError):
    """A bounded search ran out of budget. This is not a refutation."""


class NotObstructionFree(SimulationError):
    """A solo run exceeded its step cap."""

    def __init__(self, message: str, pid: int, steps: int) -> None:
        super().__init__(message)
        self.pid = pid
        self.steps = steps
