"""Bounded model checking and valency/covering primitives.

Lap counters grow without bound, so every search here is cut off at a depth.
A cut-off never counts as evidence: a process set is classified univalent
only when every branch of the bounded exploration ended in decisions or was
completed by terminating solo runs, all deciding the same value.
"""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Sequence

from .errors import StaleCoverError, UsageError
from .harness import Configuration, Decision, initial_configuration, solo_outcome, step
from .protocols import OpKind

DEFAULT_MEMORY_BUDGET = 2_000_000


@dataclass
class ExplorationSummary:
    states: int
    depth: int
    max_distinct_decided: int
    validity_ok: bool
    truncated: bool
    decisions_seen: int = 0
    sample_paths: list[tuple[tuple[int, ...], tuple]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "states": self.states,
            "depth": self.depth,
            "max_distinct_decided": self.max_distinct_decided,
            "validity_ok": self.validity_ok,
            "truncated": self.truncated,
        }


def _decided_values(algorithm: Any, config: Configuration, group: Iterable[int] | None = None) -> set[int]:
    states = config.processes
    pids = range(len(states)) if group is None else group
    values = set()
    for p in pids:
        v = algorithm.decision(states[p])
        if v is not None:
            values.add(v)
    return values


def explore(
    algorithm: Any,
    inputs: Sequence[int],
    depth: int,
    *,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    sample: int = 0,
    seed: int = 0,
) -> ExplorationSummary:
    """Visit every schedule of length up to ``depth`` from the initial configuration.

    Configurations are memoised on their full state, remembering the most
    remaining depth each was explored with. ``sample`` paths to distinct
    states are kept (reservoir sampling) so callers can replay them.
    """
    root = initial_configuration(algorithm, inputs)
    allowed = set(inputs)
    seen: dict[tuple, int] = {}
    rng = random.Random(seed)
    reservoir: list[tuple[tuple[int, ...], tuple]] = []
    max_distinct = 0
    validity_ok = True
    truncated = False
    decided_states = 0
    new_states = 0
    stack: list[tuple[Configuration, int, tuple[int, ...]]] = [(root, depth, ())]
    while stack:
        config, remaining, path = stack.pop()
        key = config.key()
        best = seen.get(key)
        if best is not None and best >= remaining:
            continue
        if best is None:
            if len(seen) >= memory_budget:
                truncated = True
                continue
            new_states += 1
            if sample:
                if len(reservoir) < sample:
                    reservoir.append((path, key))
                else:
                    j = rng.randrange(new_states)
                    if j < sample:
                        reservoir[j] = (path, key)
        seen[key] = remaining
        values = _decided_values(algorithm, config)
        if values:
            decided_states += 1
            max_distinct = max(max_distinct, len(values))
            if not values <= allowed:
                validity_ok = False
        if remaining == 0:
            continue
        for pid in reversed(config.undecided(algorithm)):
            child, _ = step(algorithm, config, pid)
            stack.append((child, remaining - 1, path + (pid,)))
    return ExplorationSummary(len(seen), depth, max_distinct, validity_ok, truncated, decided_states, reservoir)


def sample_reachable(
    algorithm: Any,
    count: int,
    *,
    seed: int = 0,
    max_prefix: int | None = None,
    inputs: Sequence[int] | None = None,
) -> list[Configuration]:
    """``count`` configurations reached by independent seeded random prefixes.

    Each sample draws an input vector (unless ``inputs`` is fixed), a prefix
    length uniform in ``0..max_prefix`` (default ``2 * n * object_count``) and
    a uniformly random undecided process at every step.
    """
    rng = random.Random(seed)
    m = getattr(algorithm, "m", None) or 2
    if max_prefix is None:
        max_prefix = 2 * algorithm.n * max(1, algorithm.object_count)
    samples = []
    decision = algorithm.decision
    for _ in range(count):
        vec = list(inputs) if inputs is not None else [rng.randrange(m) for _ in range(algorithm.n)]
        root = initial_configuration(algorithm, vec)
        # walk on mutable copies; only the end point becomes a Configuration
        store = root.store.clone()
        states = list(root.processes)
        decisions = list(root.decisions)
        live = [p for p, s in enumerate(states) if decision(s) is None]
        taken = 0
        for _ in range(rng.randint(0, max_prefix)):
            if not live:
                break
            pid = live[rng.randrange(len(live))]
            op = algorithm.poised_op(states[pid], pid)
            resp = store.swap(op.obj, op.argument) if op.kind is OpKind.SWAP else store.read(op.obj)
            states[pid] = algorithm.apply_response(states[pid], pid, resp)
            value = decision(states[pid])
            if value is not None:
                decisions.append(Decision(pid, value, taken))
                live.remove(pid)
            taken += 1
        samples.append(Configuration(store, tuple(states), tuple(decisions), taken))
    return samples


# ---------------------------------------------------------------------------
# Valency


class Valency(str, enum.Enum):
    BIVALENT = "bivalent"
    UNIVALENT = "univalent"
    UNKNOWN = "unknown_at_depth"


@dataclass
class ValencyReport:
    subject: tuple[int, ...]
    decided_values: frozenset[int]
    classification: Valency
    value: int | None = None  # the v of a v-univalent classification
    witnesses: dict[int, tuple[int, ...]] = field(default_factory=dict)
    closed: bool = False
    states: int = 0
    depth: int = 0

    @property
    def bivalent(self) -> bool:
        return self.classification is Valency.BIVALENT

    def to_json(self) -> dict:
        return {
            "subject": list(self.subject),
            "decided_values": sorted(self.decided_values),
            "classification": self.classification.value,
            "value": self.value,
            "closed": self.closed,
            "states": self.states,
            "depth": self.depth,
            "witnesses": {str(v): list(w) for v, w in sorted(self.witnesses.items())},
        }


def valency(
    algorithm: Any,
    config: Configuration,
    group: Iterable[int],
    depth: int,
    *,
    solo_cap: int | None = None,
    exhaustive: bool = True,
) -> ValencyReport:
    """Classify ``group`` in ``config`` from its group-only executions.

    Every group-only schedule up to ``depth`` steps is explored; at the cut-off
    each undecided group member is run solo (capped at ``solo_cap``) and the
    value it decides is counted too. Each reported value carries a witness
    schedule from ``config``. With ``exhaustive=False`` the search runs
    breadth-first, probes solo runs at every node, and stops as soon as two
    values are found; a non-bivalent answer is then identical to the
    exhaustive one.
    """
    subject = tuple(sorted(set(group)))
    if not subject:
        raise UsageError("valency needs a nonempty process set")
    if solo_cap is None:
        solo_cap = algorithm.solo_bound + algorithm.object_count
    witnesses: dict[int, tuple[int, ...]] = {}
    for v in _decided_values(algorithm, config, subject):
        witnesses[v] = ()
    closed = True
    seen: dict[tuple, int] = {}

    def probe(node: Configuration, path: tuple[int, ...], live: list[int]) -> None:
        nonlocal closed
        for q in live:
            steps, v = solo_outcome(algorithm, node, q, solo_cap)
            if v is None:
                closed = False
            elif v not in witnesses:
                witnesses[v] = path + (q,) * steps

    frontier: deque | list
    frontier = deque([(config, depth, ())]) if not exhaustive else [(config, depth, ())]
    pop = frontier.popleft if not exhaustive else frontier.pop
    while frontier:
        node, remaining, path = pop()
        key = node.key()
        best = seen.get(key)
        if best is not None and best >= remaining:
            continue
        seen[key] = remaining
        for v in _decided_values(algorithm, node, subject):
            witnesses.setdefault(v, path)
        live = [q for q in subject if not node.is_decided(algorithm, q)]
        if not live:
            continue
        if remaining == 0 or not exhaustive:
            probe(node, path, live)
        if not exhaustive and len(witnesses) >= 2:
            break
        if remaining == 0:
            continue
        for q in reversed(live):
            child, _ = step(algorithm, node, q)
            frontier.append((child, remaining - 1, path + (q,)))
    values = frozenset(witnesses)
    if len(values) >= 2:
        cls, value = Valency.BIVALENT, None
    elif len(values) == 1 and closed:
        cls, value = Valency.UNIVALENT, next(iter(values))
    else:
        cls, value = Valency.UNKNOWN, None
    return ValencyReport(subject, values, cls, value, witnesses, closed, len(seen), depth)


# ---------------------------------------------------------------------------
# Covering


class CoverMember(NamedTuple):
    pid: int
    obj: int
    argument: Any


CoverSet = tuple[CoverMember, ...]


def detect_cover(algorithm: Any, config: Configuration, processes: Iterable[int] | None = None) -> CoverSet:
    """Processes poised to swap, one per object, lowest pid winning each object."""
    pids = range(config.n) if processes is None else sorted(set(processes))
    covered: set[int] = set()
    members = []
    for pid in pids:
        op = algorithm.poised_op(config.processes[pid], pid)
        if op is None or op.kind is not OpKind.SWAP or op.obj in covered:
            continue
        covered.add(op.obj)
        members.append(CoverMember(pid, op.obj, op.argument))
    return tuple(members)


def block_swap(
    algorithm: Any,
    config: Configuration,
    cover: CoverSet,
    order: Sequence[int] | None = None,
) -> Configuration:
    """Apply every cover member's pending swap, consecutively, ascending pid unless ``order`` is given."""
    by_pid = {m.pid: m for m in cover}
    if len(by_pid) != len(cover) or len({m.obj for m in cover}) != len(cover):
        raise UsageError("a cover assigns distinct processes to distinct objects")
    sequence = sorted(by_pid) if order is None else list(order)
    if sorted(sequence) != sorted(by_pid):
        raise UsageError("order must be a permutation of the cover's processes")
    for pid in sequence:
        member = by_pid[pid]
        op = algorithm.poised_op(config.processes[pid], pid)
        if op is None or op.kind is not OpKind.SWAP or op.obj != member.obj or op.argument != member.argument:
            raise StaleCoverError(f"p{pid} is no longer poised to swap {member.argument!r} into object {member.obj}")
        config, _ = step(algorithm, config, pid)
    return config


def apply_schedule(algorithm: Any, config: Configuration, pids: Iterable[int]) -> Configuration:
    for pid in pids:
        config, _ = step(algorithm, config, pid)
    return config


# ---------------------------------------------------------------------------
# Bivalence-preserving extension


class PreconditionError(UsageError):
    """The configuration is not bivalent for the group."""


@dataclass
class Extension:
    gamma: tuple[int, ...] | None
    status: str  # "found" or "unknown_at_depth"
    report: ValencyReport | None = None
    probes: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"


def find_extension(
    algorithm: Any,
    config: Configuration,
    cover: CoverSet,
    group: Iterable[int],
    depth: int,
    *,
    solo_cap: int | None = None,
    fallback_probes: int = 64,
) -> Extension:
    """Find a group-only ``gamma`` with the group bivalent after ``gamma`` and the block swap.

    Tries the empty ``gamma`` first. Otherwise, if the block swap leaves the
    group leaning to ``v``, walks a witness execution deciding the other value
    one step at a time; the first prefix after which the block swap leaves the
    group bivalent is returned. A short breadth-first search over group-only
    schedules is the last resort.
    """
    group = tuple(sorted(set(group)))
    if any(m.pid in group for m in cover):
        raise UsageError("cover members must lie outside the group")

    def check(pids: tuple[int, ...]) -> ValencyReport:
        after = block_swap(algorithm, apply_schedule(algorithm, config, pids), cover)
        return valency(algorithm, after, group, depth, solo_cap=solo_cap, exhaustive=False)

    pre = valency(algorithm, config, group, depth, solo_cap=solo_cap, exhaustive=False)
    if not pre.bivalent:
        raise PreconditionError(f"group {list(group)} is {pre.classification.value} in the starting configuration")
    probes = 1
    base = check(())
    if base.bivalent:
        return Extension((), "found", base, probes)

    leaning = base.value if base.value is not None else next(iter(base.decided_values), None)
    candidates = [w for v, w in sorted(pre.witnesses.items()) if v != leaning] or list(pre.witnesses.values())
    for alpha in candidates:
        for j in range(1, len(alpha) + 1):
            probes += 1
            report = check(alpha[:j])
            if report.bivalent:
                return Extension(alpha[:j], "found", report, probes)

    queue: deque[tuple[Configuration, tuple[int, ...]]] = deque([(config, ())])
    budget = fallback_probes
    while queue and budget > 0:
        node, path = queue.popleft()
        if len(path) >= depth:
            continue
        for q in group:
            if node.is_decided(algorithm, q):
                continue
            child, _ = step(algorithm, node, q)
            gamma = path + (q,)
            budget -= 1
            probes += 1
            report = valency(
                algorithm, block_swap(algorithm, child, cover), group, depth, solo_cap=solo_cap, exhaustive=False
            )
            if report.bivalent:
                return Extension(gamma, "found", report, probes)
            queue.append((child, gamma))
    return Extension(None, "unknown_at_depth", None, probes)


def verify_bivalent(algorithm: Any, config: Configuration, report: ValencyReport) -> bool:
    """Independently re-run a report's witnesses and confirm two different group values get decided."""
    values = set()
    for v, pids in report.witnesses.items():
        end = apply_schedule(algorithm, config, pids)
        if any(p not in report.subject for p in pids):
            return False
        if v in _decided_values(algorithm, end, report.subject):
            values.add(v)
    return len(values) >= 2
