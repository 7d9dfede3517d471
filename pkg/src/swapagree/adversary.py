"""Executable form of the overwrite-and-hide lower-bound argument.

Start from an initial configuration ``C`` and an execution ``alpha`` in which
``k`` values are decided without any step by the quiet set ``Q``, whose members
all have input ``v``. Alongside, keep ``D``, the initial configuration in which
everyone has input ``v``. Each quiet process in turn runs solo from the ``D``
side; the longest prefix of that run touching only already-consumed objects
can be mirrored on the ``C`` side, since those objects agree. If the whole run
fits, the process decides ``v`` after ``alpha`` and agreement is broken.
Otherwise its next swap lands on a fresh object on both sides, overwriting
whatever ``alpha`` left there, and that object joins the consumed set.

Against a correct protocol this yields a certificate that ``|Q|`` distinct
objects exist. Against an under-provisioned one it yields a concrete
execution deciding ``k + 1`` values.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Any, Sequence

from .errors import NotObstructionFree, ParameterError, SearchExhausted, UsageError
from .harness import (
    Configuration,
    Explicit,
    Trace,
    TraceEvent,
    extendable_indistinguishably,
    indistinguishable,
    initial_configuration,
    run,
    step,
)
from .memory import value_of
from .protocols import ProtocolParams, SwapKSetAgreement


@dataclass
class ConsumeStep:
    """Witness for one induction step: which quiet process consumed which object."""

    process: int
    prefix_length: int  # length of the mirrored prefix tau
    fresh_object: int
    consumed: tuple[int, ...]
    mirrored: Trace  # tau' from the C side
    reference: Trace  # tau followed by the fresh swap, from the D side
    c_after: Configuration | None = None  # both sides once the fresh swap is applied
    d_after: Configuration | None = None


@dataclass
class ConsumeState:
    i: int
    gamma: list[TraceEvent]
    delta: list[TraceEvent]
    consumed: list[int]
    q_order: tuple[int, ...]
    c_side: Configuration
    d_side: Configuration


@dataclass
class Violation:
    """A single execution from one initial configuration deciding more than ``k`` values."""

    trace: Trace
    raw: Trace
    decided: tuple[int, ...]
    consumed: tuple[int, ...]
    q_count: int
    steps: list[ConsumeStep] = field(default_factory=list)

    kind = "violation"


@dataclass
class Certificate:
    """Each quiet process consumed its own object: at least ``|Q|`` objects exist."""

    consumed: tuple[int, ...]
    q_count: int
    steps: list[ConsumeStep] = field(default_factory=list)

    kind = "certificate"


@dataclass
class NotObstructionFreeVerdict:
    process: int
    steps_taken: int
    kind = "not_obstruction_free"


def _capped_solo(algorithm: Any, config: Configuration, pid: int, cap: int) -> list[TraceEvent]:
    events = []
    while not config.is_decided(algorithm, pid):
        if len(events) >= cap:
            raise NotObstructionFree(f"p{pid} did not decide within {cap} solo steps", pid, len(events))
        config, event = step(algorithm, config, pid)
        events.append(event)
    return events


def build_alpha(
    algorithm: Any,
    inputs: Sequence[int],
    quiet: Sequence[int],
    targets: Sequence[int],
    *,
    budget: int = 10_000,
    step_limit: int | None = None,
    seed: int = 0,
) -> Trace:
    """Find an execution without steps by ``quiet`` in which every value in ``targets`` is decided.

    With one target the solo run of the lowest active process holding that
    input is tried first. Otherwise up to ``budget`` random schedules over the
    active processes are tried. Raises :class:`SearchExhausted` when none works.
    """
    quiet = set(quiet)
    targets = set(targets)
    active = [p for p in range(algorithm.n) if p not in quiet]
    if not active:
        raise UsageError("every process is quiet")
    start = initial_configuration(algorithm, inputs)
    if step_limit is None:
        step_limit = algorithm.default_step_limit

    if len(targets) == 1:
        (value,) = targets
        for p in active:
            if inputs[p] == value:
                events = _capped_solo(algorithm, start, p, algorithm.solo_bound + algorithm.object_count)
                trace = run(algorithm, inputs, Explicit(e.pid for e in events))
                if targets <= trace.decided_values():
                    return trace

    rng = random.Random(seed)
    for _ in range(budget):
        pids = []
        config = start
        while len(pids) < step_limit:
            live = [p for p in active if not config.is_decided(algorithm, p)]
            if not live or targets <= config.decided_values():
                break
            pid = live[rng.randrange(len(live))]
            config, _ = step(algorithm, config, pid)
            pids.append(pid)
        if targets <= config.decided_values():
            return run(algorithm, inputs, Explicit(pids))
    raise SearchExhausted(f"no execution deciding {sorted(targets)} within {budget} schedules")


def _events_trace(algorithm: Any, inputs: Sequence[int], events: Sequence[TraceEvent]) -> Trace:
    return run(algorithm, inputs, Explicit(e.pid for e in events))


def minimize_violation(algorithm: Any, trace: Trace, k: int) -> Trace:
    """Greedily drop steps while the re-executed schedule still decides more than ``k`` values."""
    pids = list(trace.pids())
    i = len(pids) - 1
    while i >= 0:
        candidate = pids[:i] + pids[i + 1 :]
        try:
            shorter = run(algorithm, trace.inputs, Explicit(candidate))
        except Exception:
            shorter = None
        if shorter is not None and len(shorter.decided_values()) > k:
            pids = candidate
        i -= 1
    return run(algorithm, trace.inputs, Explicit(pids))


def consume(
    algorithm: Any,
    inputs: Sequence[int],
    alpha: Trace,
    quiet: Sequence[int],
    v: int,
    *,
    k: int | None = None,
    solo_cap: int | None = None,
    minimize: bool = True,
) -> Violation | Certificate | NotObstructionFreeVerdict:
    """Run the consume induction over ``quiet`` (in ascending order) after ``alpha``.

    ``alpha`` must start at the initial configuration for ``inputs``, take no
    step by a quiet process, and decide ``k`` values all different from ``v``.
    Every induction step asserts that consumed objects agree across the two
    sides and that the next quiet process cannot tell the sides apart.
    """
    k = algorithm.k if k is None else k
    q_order = tuple(sorted(quiet))
    if solo_cap is None:
        solo_cap = 64 * algorithm.object_count
    c0 = initial_configuration(algorithm, inputs)
    if alpha.start != c0:
        raise UsageError("alpha must start at the initial configuration for the given inputs")
    if any(e.pid in q_order for e in alpha.events):
        raise UsageError("alpha contains steps by quiet processes")
    if any(inputs[q] != v for q in q_order):
        raise UsageError(f"every quiet process needs input {v}")
    decided = alpha.decided_values()
    if len(decided) != k or v in decided:
        raise UsageError(f"alpha must decide {k} values different from {v}, decided {sorted(decided)}")

    state = ConsumeState(
        i=0,
        gamma=[],
        delta=[],
        consumed=[],
        q_order=q_order,
        c_side=alpha.final,
        d_side=initial_configuration(algorithm, [v] * algorithm.n),
    )
    witnesses: list[ConsumeStep] = []
    for q in q_order:
        if not indistinguishable(state.c_side, state.d_side, [q]):
            raise AssertionError(f"p{q} can tell the two sides apart before its turn")
        try:
            sigma = _capped_solo(algorithm, state.d_side, q, solo_cap)
        except NotObstructionFree as exc:
            return NotObstructionFreeVerdict(q, exc.steps)
        consumed = set(state.consumed)
        cut = 0
        while cut < len(sigma) and sigma[cut].obj in consumed:
            cut += 1
        tau = sigma[:cut]
        mirrored = extendable_indistinguishably(algorithm, state.d_side, state.c_side, [q], tau)
        if cut == len(sigma):
            gamma = state.gamma + mirrored.events
            raw = _events_trace(algorithm, inputs, alpha.events + gamma)
            if len(raw.decided_values()) <= k:
                raise AssertionError("mirrored solo run did not break agreement")
            trace = minimize_violation(algorithm, raw, k) if minimize else raw
            return Violation(
                trace, raw, tuple(sorted(raw.decided_values())), tuple(state.consumed), len(q_order), witnesses
            )

        d_tau = state.d_side
        for e in tau:
            d_tau, _ = step(algorithm, d_tau, e.pid)
        if not indistinguishable(mirrored.final, d_tau, [q]):
            raise AssertionError(f"p{q} can tell the mirrored prefix from the original")
        d_next, s = step(algorithm, d_tau, q)
        c_next, s_prime = step(algorithm, mirrored.final, q)
        if (s.op, s.obj, s.arg) != (s_prime.op, s_prime.obj, s_prime.arg):
            raise AssertionError(f"p{q} applies different operations on the two sides")
        fresh = s.obj
        if fresh in consumed:
            raise AssertionError(f"object {fresh} was already consumed")
        state.consumed.append(fresh)
        state.gamma = state.gamma + mirrored.events + [s_prime]
        state.delta = state.delta + list(tau) + [s]
        reference = Trace(algorithm, tuple([v] * algorithm.n), list(tau) + [s], d_next, state.d_side)
        state.c_side, state.d_side = c_next, d_next
        state.i += 1
        for obj in state.consumed:
            if value_of(state.c_side, obj) != value_of(state.d_side, obj):
                raise AssertionError(f"consumed object {obj} differs between the two sides")
        witnesses.append(
            ConsumeStep(q, cut, fresh, tuple(state.consumed), mirrored, reference, state.c_side, state.d_side)
        )
    return Certificate(tuple(state.consumed), len(q_order), witnesses)


def consensus_scenario(algorithm: Any, *, minimize: bool = True, solo_cap: int | None = None):
    """The k = 1 case: p0 has input 0, everyone else input 1 and stays quiet during p0's solo run."""
    n = algorithm.n
    inputs = [0] + [1] * (n - 1)
    alpha = build_alpha(algorithm, inputs, range(1, n), [0])
    return consume(algorithm, inputs, alpha, range(1, n), 1, k=1, minimize=minimize, solo_cap=solo_cap)


@dataclass
class Reduction:
    """Which branch of the induction on k the evidence supports, and its outcome."""

    n: int
    k: int
    active: tuple[int, ...]  # the processes R whose inputs range over 0..k-1
    quiet: tuple[int, ...]  # P - R
    object_floor: int
    branch: str  # "consume" or "recurse"
    inputs: tuple[int, ...] | None = None
    outcome: Any = None
    sub: "Reduction | None" = None
    heuristic: bool = True


def restriction(n: int, k: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split processes into R (first ceil(n(k-1)/k)) and the quiet rest."""
    if k < 2:
        raise ParameterError("the reduction needs k > 1; k = 1 is the base case")
    r = math.ceil(n * (k - 1) / k)
    return tuple(range(r)), tuple(range(r, n))


def reduce_k(
    algorithm: Any,
    k: int | None = None,
    *,
    participants: Sequence[int] | None = None,
    budget: int = 10_000,
    seed: int = 0,
    minimize: bool = True,
) -> Reduction:
    """Run the induction on ``k`` restricted to ``participants`` (default: everyone).

    The active set R gets inputs from ``0..k-1`` and the quiet rest input ``k``.
    A search for an R-only execution deciding all of ``0..k-1`` picks the
    consume branch; if the search is exhausted the instance is treated as
    (k-1)-set agreement among R and analysed recursively. The case split is
    non-constructive, so a recursive branch records evidence, not proof.
    """
    k = algorithm.k if k is None else k
    people = tuple(range(algorithm.n)) if participants is None else tuple(participants)
    n = len(people)
    if k < 2:
        raise ParameterError("the reduction needs k > 1; k = 1 is the base case")
    idx_active, idx_quiet = restriction(n, k)
    active = tuple(people[i] for i in idx_active)
    quiet = tuple(people[i] for i in idx_quiet)
    floor = math.ceil(n / k) - 1
    if getattr(algorithm, "m", None) is not None and algorithm.m < k + 1:
        raise ParameterError(f"the reduction needs m >= k+1 = {k + 1}")

    rng = random.Random(seed)
    spent = 0
    per_assignment = max(1, budget // 10)
    while spent < budget:
        inputs = [0] * algorithm.n
        for pos, p in enumerate(active):
            inputs[p] = pos % k if spent == 0 else rng.randrange(k)
        for p in quiet:
            inputs[p] = k
        outsiders = [p for p in range(algorithm.n) if p not in people]
        try:
            alpha = build_alpha(
                algorithm,
                inputs,
                list(quiet) + outsiders,
                range(k),
                budget=min(per_assignment, budget - spent),
                seed=rng.randrange(2**63),
            )
        except SearchExhausted:
            spent += per_assignment
            continue
        outcome = consume(algorithm, inputs, alpha, quiet, k, k=k, minimize=minimize)
        return Reduction(n, k, active, quiet, floor, "consume", tuple(inputs), outcome)

    if k - 1 == 1:
        inputs = [0] * algorithm.n
        for p in active[1:]:
            inputs[p] = 1
        outsiders = [p for p in range(algorithm.n) if p not in active]
        alpha = build_alpha(algorithm, inputs, list(active[1:]) + outsiders, [0])
        outcome = consume(algorithm, inputs, alpha, active[1:], 1, k=1, minimize=minimize)
        sub = Reduction(len(active), 1, active[:1], active[1:], len(active) - 1, "consume", tuple(inputs), outcome)
    else:
        sub = reduce_k(algorithm, k - 1, participants=active, budget=budget, seed=seed + 1, minimize=minimize)
    return Reduction(n, k, active, quiet, floor, "recurse", None, None, sub)


def lower_bound(n: int, k: int) -> int:
    """Fewest swap objects any (k+1)-valued k-set agreement protocol for n processes can use."""
    return math.ceil(n / k) - 1


def adversary(params: ProtocolParams, *, budget: int = 10_000, seed: int = 0, minimize: bool = True):
    """Pick the right scenario for the lap-race protocol with the given parameters."""
    algorithm = SwapKSetAgreement(params)
    if params.k == 1:
        return consensus_scenario(algorithm, minimize=minimize)
    return reduce_k(algorithm, budget=budget, seed=seed, minimize=minimize)


def summary(outcome: Any, object_count: int) -> dict:
    """The ``{verdict, consumed, q_count, object_count}`` record for an outcome."""
    if isinstance(outcome, Reduction):
        record = summary(outcome.outcome if outcome.outcome is not None else outcome.sub, object_count)
        record.update({"branch": outcome.branch, "k": outcome.k, "object_floor": outcome.object_floor})
        record["active"] = list(outcome.active)
        record["quiet"] = list(outcome.quiet)
        return record
    if isinstance(outcome, Violation):
        return {
            "verdict": "violation",
            "consumed": len(outcome.consumed),
            "q_count": outcome.q_count,
            "object_count": object_count,
            "decided": list(outcome.decided),
            "expected": "under-provisioned instance: agreement violation is the expected outcome",
        }
    if isinstance(outcome, Certificate):
        return {
            "verdict": "certificate",
            "consumed": len(outcome.consumed),
            "q_count": outcome.q_count,
            "object_count": object_count,
            "objects": list(outcome.consumed),
        }
    if isinstance(outcome, NotObstructionFreeVerdict):
        return {"verdict": "not_obstruction_free", "consumed": None, "q_count": None, "object_count": object_count, "pid": outcome.process}
    raise TypeError(f"unexpected outcome {outcome!r}")
