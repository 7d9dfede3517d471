"""Executions of a protocol: configurations, schedulers, traces and replay.

A configuration is the value of every object plus the state of every process.
An execution is produced by a scheduler picking, at each configuration, an
undecided process to take its next step. Traces record every step so that an
execution can be replayed, mirrored from another configuration, or checked.

Random schedules use :class:`random.Random` (Mersenne Twister) seeded with the
run's 64-bit seed; at every step the scheduler draws
``rng.randrange(len(undecided))`` and picks that position in the ascending list
of undecided process ids.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable, Iterable, NamedTuple, Sequence

from .errors import (
    CorruptionError,
    IndistinguishabilityError,
    NotObstructionFree,
    ScheduleError,
    UsageError,
)
from .memory import ObjectStore
from .protocols import OpKind


class Decision(NamedTuple):
    process: int
    value: int
    step_index: int | None  # event index of the deciding step; None if decided at initialisation


class TraceEvent(NamedTuple):
    step: int
    pid: int
    op: str
    obj: int
    arg: Any
    resp: Any
    decide: int | None


@dataclass(eq=True)
class Configuration:
    store: ObjectStore
    processes: tuple
    decisions: tuple[Decision, ...] = ()
    step_count: int = 0

    @property
    def n(self) -> int:
        return len(self.processes)

    def key(self) -> tuple:
        """Canonical hashable key: every object value and every process state."""
        return (self.store.snapshot(), self.processes)

    def decided_values(self) -> set[int]:
        return {d.value for d in self.decisions}

    def undecided(self, algorithm: Any) -> list[int]:
        return [p for p, s in enumerate(self.processes) if algorithm.decision(s) is None]

    def is_decided(self, algorithm: Any, pid: int) -> bool:
        return algorithm.decision(self.processes[pid]) is not None


def initial_configuration(algorithm: Any, inputs: Sequence[int]) -> Configuration:
    if len(inputs) != algorithm.n:
        raise UsageError(f"expected {algorithm.n} inputs, got {len(inputs)}")
    processes = tuple(algorithm.init_process(p, v) for p, v in enumerate(inputs))
    decisions = tuple(
        Decision(p, algorithm.decision(s), None) for p, s in enumerate(processes) if algorithm.decision(s) is not None
    )
    return Configuration(algorithm.initial_store(), processes, decisions, 0)


def step(algorithm: Any, config: Configuration, pid: int) -> tuple[Configuration, TraceEvent]:
    """Let ``pid`` take its next step in ``config``; returns the successor and the event."""
    if not 0 <= pid < len(config.processes):
        raise UsageError(f"no process p{pid}")
    state = config.processes[pid]
    op = algorithm.poised_op(state, pid)
    if op is None:
        raise UsageError(f"p{pid} has decided and cannot be scheduled")
    store = config.store.clone()
    if op.kind is OpKind.SWAP:
        resp = store.swap(op.obj, op.argument)
    else:
        resp = store.read(op.obj)
    new_state = algorithm.apply_response(state, pid, resp)
    decided = algorithm.decision(new_state)
    index = config.step_count
    decisions = config.decisions
    if decided is not None:
        decisions = decisions + (Decision(pid, decided, index),)
    processes = config.processes[:pid] + (new_state,) + config.processes[pid + 1 :]
    event = TraceEvent(index, pid, op.kind.value, op.obj, op.argument, resp, decided)
    return Configuration(store, processes, decisions, index + 1), event


# ---------------------------------------------------------------------------
# Schedules


@dataclass(frozen=True)
class Solo:
    pid: int

    def describe(self) -> str:
        return f"solo:p{self.pid}"


@dataclass(frozen=True)
class RoundRobin:
    order: tuple[int, ...] | None = None

    def describe(self) -> str:
        if self.order is None:
            return "roundrobin"
        return "roundrobin:" + ",".join(str(p) for p in self.order)


@dataclass(frozen=True)
class SeededRandom:
    seed: int
    step_limit: int | None = None

    def describe(self) -> str:
        return "random"


@dataclass(frozen=True)
class Explicit:
    pids: tuple[int, ...]

    def __init__(self, pids: Iterable[int]) -> None:
        object.__setattr__(self, "pids", tuple(pids))

    def describe(self) -> str:
        return "explicit:" + ",".join(str(p) for p in self.pids)


@dataclass(frozen=True)
class AdversarySchedule:
    """Delegates every choice to ``handle(config)``; returning ``None`` stops the run."""

    handle: Callable[[Configuration], int | None]

    def describe(self) -> str:
        return "adversary"


Schedule = Solo | RoundRobin | SeededRandom | Explicit | AdversarySchedule


@dataclass
class Trace:
    algorithm: Any
    inputs: tuple[int, ...]
    events: list[TraceEvent]
    final: Configuration
    start: Configuration
    schedule: str = "explicit"
    seed: int | None = None
    limit_hit: bool = False

    @property
    def decisions(self) -> tuple[Decision, ...]:
        return self.final.decisions

    def decided_values(self) -> set[int]:
        return self.final.decided_values()

    def pids(self) -> list[int]:
        return [e.pid for e in self.events]

    def __len__(self) -> int:
        return len(self.events)


def _schedule_picks(schedule: Schedule, algorithm: Any) -> Callable[[Configuration, int], int | None]:
    """Return ``pick(config, i)``: the i-th scheduling choice, or None to stop."""
    if isinstance(schedule, Solo):
        return lambda config, i: None if config.is_decided(algorithm, schedule.pid) and i > 0 else schedule.pid

    if isinstance(schedule, Explicit):
        pids = schedule.pids
        return lambda config, i: pids[i] if i < len(pids) else None

    if isinstance(schedule, RoundRobin):
        order = schedule.order if schedule.order is not None else tuple(range(algorithm.n))
        cursor = [0]

        def pick_rr(config: Configuration, i: int) -> int | None:
            for _ in range(len(order)):
                pid = order[cursor[0] % len(order)]
                cursor[0] += 1
                if not config.is_decided(algorithm, pid):
                    return pid
            return None

        return pick_rr

    if isinstance(schedule, SeededRandom):
        rng = random.Random(schedule.seed)

        def pick_random(config: Configuration, i: int) -> int | None:
            live = config.undecided(algorithm)
            if not live:
                return None
            return live[rng.randrange(len(live))]

        return pick_random

    if isinstance(schedule, AdversarySchedule):
        return lambda config, i: schedule.handle(config)

    raise UsageError(f"unknown schedule {schedule!r}")


def run(
    algorithm: Any,
    inputs: Sequence[int],
    schedule: Schedule,
    step_limit: int | None = None,
    start: Configuration | None = None,
) -> Trace:
    """Execute ``schedule`` until it stops, every process decides, or ``step_limit`` steps.

    Decided processes are skipped by round-robin and random schedules; an
    explicit or solo schedule that names one raises :class:`ScheduleError`.
    """
    inputs = tuple(inputs)
    config = start if start is not None else initial_configuration(algorithm, inputs)
    origin = config
    if step_limit is None:
        if isinstance(schedule, SeededRandom) and schedule.step_limit is not None:
            step_limit = schedule.step_limit
        elif isinstance(schedule, Explicit):
            step_limit = len(schedule.pids)
        else:
            step_limit = algorithm.default_step_limit
    pick = _schedule_picks(schedule, algorithm)
    events: list[TraceEvent] = []
    limit_hit = False
    i = 0
    while True:
        if isinstance(schedule, AdversarySchedule) and not config.undecided(algorithm):
            break
        pid = pick(config, i)
        if pid is None:
            break
        if i >= step_limit:
            limit_hit = True
            break
        if not isinstance(pid, int) or not 0 <= pid < algorithm.n:
            raise ScheduleError(f"schedule entry {i} names nonexistent process {pid!r}", i)
        if config.is_decided(algorithm, pid):
            raise ScheduleError(f"schedule entry {i} names decided process p{pid}", i)
        config, event = step(algorithm, config, pid)
        events.append(event)
        i += 1
    seed = schedule.seed if isinstance(schedule, SeededRandom) else None
    return Trace(algorithm, inputs, events, config, origin, schedule.describe(), seed, limit_hit)


def solo_run(
    algorithm: Any,
    pid: int,
    start: Configuration | Sequence[int],
    cap: int | None = None,
) -> Trace:
    """Run ``pid`` alone until it decides.

    ``start`` is a configuration or an input vector (meaning the initial
    configuration). More than ``cap`` steps (default: the protocol's solo
    bound plus one pass over the objects) raises :class:`NotObstructionFree`.
    """
    if isinstance(start, Configuration):
        config = start
        inputs = _inputs_of(algorithm, config)
    else:
        inputs = tuple(start)
        config = initial_configuration(algorithm, inputs)
    if config.is_decided(algorithm, pid):
        raise UsageError(f"p{pid} has already decided")
    if cap is None:
        cap = algorithm.solo_bound + algorithm.object_count
    trace = run(algorithm, inputs, Solo(pid), step_limit=cap, start=config)
    if not trace.final.is_decided(algorithm, pid):
        raise NotObstructionFree(f"p{pid} did not decide within {cap} solo steps", pid, len(trace.events))
    return trace


def solo_outcome(algorithm: Any, config: Configuration, pid: int, cap: int) -> tuple[int, int | None]:
    """Length and decided value of ``pid``'s solo run, without recording a trace.

    Returns ``(steps, None)`` when the cap is reached first.
    """
    store = config.store.clone()
    cells = store.cells  # arguments come from the protocol itself, so skip per-swap validation
    state = config.processes[pid]
    decision = algorithm.decision
    steps = 0
    while decision(state) is None:
        if steps >= cap:
            return steps, None
        op = algorithm.poised_op(state, pid)
        if op.kind is OpKind.SWAP:
            resp = cells[op.obj]
            cells[op.obj] = op.argument
        else:
            resp = store.read(op.obj)
        state = algorithm.apply_response(state, pid, resp)
        steps += 1
    return steps, decision(state)


def _inputs_of(algorithm: Any, config: Configuration) -> tuple[int, ...]:
    return tuple(s.input for s in config.processes)


def replay(trace: Trace) -> Configuration:
    """Recompute the final configuration from the recorded events.

    Raises :class:`CorruptionError` at the first event whose recorded
    operation, argument, response or decision differs from re-execution.
    """
    algorithm = trace.algorithm
    config = trace.start
    for i, event in enumerate(trace.events):
        if not 0 <= event.pid < algorithm.n or config.is_decided(algorithm, event.pid):
            raise CorruptionError(f"event {i}: p{event.pid} cannot take a step", i)
        config, redo = step(algorithm, config, event.pid)
        if redo != event:
            raise CorruptionError(f"event {i} diverges: recorded {event}, replayed {redo}", i)
    if config != trace.final:
        raise CorruptionError("replayed final configuration differs from the recorded one", len(trace.events))
    return config


def indistinguishable(a: Configuration, b: Configuration, group: Iterable[int]) -> bool:
    """True iff every process in ``group`` has the same state in ``a`` and ``b``."""
    return all(a.processes[p] == b.processes[p] for p in group)


def extendable_indistinguishably(
    algorithm: Any,
    c: Configuration,
    c_prime: Configuration,
    group: Iterable[int],
    trace_from_c: Trace | Sequence[TraceEvent],
) -> Trace:
    """Re-run the same process sequence from ``c_prime`` and check each step matches.

    This is the mirroring fact: if ``c`` and ``c_prime`` look the same to the
    group and the objects the group touches hold the same values, the group's
    execution from ``c`` has an indistinguishable twin from ``c_prime``.
    """
    group = set(group)
    events = trace_from_c.events if isinstance(trace_from_c, Trace) else list(trace_from_c)
    if not indistinguishable(c, c_prime, group):
        raise IndistinguishabilityError("configurations differ for the group")
    config = c_prime
    mirrored: list[TraceEvent] = []
    for i, event in enumerate(events):
        if event.pid not in group:
            raise IndistinguishabilityError(f"event {i} is by p{event.pid}, outside the group", i)
        config, twin = step(algorithm, config, event.pid)
        if twin[1:] != event[1:]:
            raise IndistinguishabilityError(
                f"event {i} differs: p{event.pid} got {twin.resp!r} instead of {event.resp!r}", i
            )
        mirrored.append(twin)
    inputs = _inputs_of(algorithm, c_prime)
    return Trace(algorithm, inputs, mirrored, config, c_prime, "explicit:" + ",".join(str(e.pid) for e in events))


def concat(first: Trace, second: Trace) -> Trace:
    """Join two traces where ``second`` starts at ``first.final``."""
    if second.start != first.final:
        raise UsageError("second trace does not start where the first ends")
    events = first.events + second.events
    return Trace(first.algorithm, first.inputs, events, second.final, first.start, "explicit:" + ",".join(str(e.pid) for e in events))


def default_step_limit(algorithm: Any) -> int:
    return algorithm.default_step_limit
