"""Trace oracles for the lap-race protocol's safety and liveness properties.

The checkers never re-run the protocol. They reconstruct everything from what
a trace records: each swap's argument is the swapper's local lap counter just
before the step, the response is what it saw, and the final snapshot supplies
each process's counter after its last step. From those, a step's lap increment
is whatever the post-step counter exceeds the merge of argument and response.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Sequence

from .harness import Configuration, Trace, solo_outcome
from .memory import BOT, LapCounter, dominated, merge_counters


@dataclass
class CheckReport:
    name: str
    passed: bool
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.passed and self.witness is None:
            raise ValueError(f"failing report {self.name!r} needs a witness")

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        record = {"property": self.name, "verdict": "pass" if self.passed else "fail", "witness": self.witness}
        if self.details:
            record["details"] = self.details
        return record


def _fail(name: str, step: int | None, pid: int | None, detail: str, **extra: Any) -> CheckReport:
    return CheckReport(name, False, {"step": step, "pid": pid, "detail": detail, **extra})


# ---------------------------------------------------------------------------
# Agreement and validity


def check_k_agreement(traces: Trace | Iterable[Trace], k: int) -> CheckReport:
    """Pass iff the decisions pooled over ``traces`` cover at most ``k`` values."""
    if isinstance(traces, Trace):
        traces = [traces]
    first: dict[int, tuple[int, int, int | None]] = {}
    for t, trace in enumerate(traces):
        for d in trace.decisions:
            first.setdefault(d.value, (t, d.process, d.step_index))
    if len(first) <= k:
        return CheckReport("k_agreement", True, details={"values": sorted(first)})
    decisions = [
        {"trace": t, "pid": p, "value": v, "step": s} for v, (t, p, s) in sorted(first.items(), key=lambda kv: kv[1])
    ]
    last = decisions[k]
    return _fail("k_agreement", last["step"], last["pid"], f"{len(first)} distinct values decided with k={k}", decisions=decisions)


def check_validity(trace: Trace) -> CheckReport:
    inputs = set(trace.inputs)
    for d in trace.decisions:
        if d.value not in inputs:
            return _fail("validity", d.step_index, d.process, f"decided {d.value}, inputs are {sorted(inputs)}")
    return CheckReport("validity", True)


# ---------------------------------------------------------------------------
# Obstruction-freedom


def check_solo_bound(algorithm: Any, configs: Iterable[Configuration], margin: int = 0) -> CheckReport:
    """Run every undecided process solo from every config; pass iff each decides within the bound."""
    bound = algorithm.solo_bound
    longest = 0
    runs = 0
    seen: set[tuple] = set()
    for c, config in enumerate(configs):
        key = config.key()
        if key in seen:
            continue
        seen.add(key)
        for pid in config.undecided(algorithm):
            steps, value = solo_outcome(algorithm, config, pid, bound + margin + 1)
            runs += 1
            if value is None or steps > bound + margin:
                return _fail(
                    "solo_bound", config.step_count, pid, f"solo run took more than {bound + margin} steps", config=c
                )
            longest = max(longest, steps)
    return CheckReport("solo_bound", True, details={"bound": bound, "longest": longest, "runs": runs})


# ---------------------------------------------------------------------------
# Lap-counter reconstruction


def counters_after_steps(trace: Trace) -> list[LapCounter]:
    """Local lap counter of the stepping process after each event."""
    after: list[LapCounter | None] = [None] * len(trace.events)
    pending: dict[int, int] = {}
    for t, e in enumerate(trace.events):
        if e.pid in pending:
            after[pending[e.pid]] = e.arg.counter
        pending[e.pid] = t
    for pid, t in pending.items():
        after[t] = trace.final.processes[pid].u
    return after  # type: ignore[return-value]


def check_lap_observations(trace: Trace) -> CheckReport:
    """Monotone counters, leader-only increments, the ladder of laps, and the decide test."""
    name = "lap_observations"
    events = trace.events
    after = counters_after_steps(trace)
    known = [s.u for s in trace.start.processes]
    m = len(known[0])
    # ladder[j]: largest l such that every lap value 2..l of component j was reached by an increment.
    ladder = [max([1] + [u[j] for u in known] + [c.counter[j] for c in trace.start.store.cells]) for j in range(m)]
    raised: list[set[int]] = [set() for _ in range(m)]
    for t, e in enumerate(events):
        p = e.pid
        before = e.arg.counter
        if before != known[p] and not dominated(known[p], before):
            return _fail(name, e.step, p, f"counter went from {list(known[p])} to {list(before)}")
        if e.arg.owner != p:
            return _fail(name, e.step, p, "swapped an argument carrying another identifier")
        merged = merge_counters(before, e.resp.counter)
        post = after[t]
        if not dominated(merged, post):
            return _fail(name, e.step, p, f"counter {list(post)} forgets part of merge {list(merged)}")
        diff = [b - a for a, b in zip(merged, post)]
        bumped = [j for j, d in enumerate(diff) if d]
        if bumped:
            if len(bumped) != 1 or diff[bumped[0]] != 1:
                return _fail(name, e.step, p, f"counter jumped from {list(merged)} to {list(post)}")
            j = bumped[0]
            if merged[j] != max(merged):
                return _fail(name, e.step, p, f"incremented non-maximal component {j} of {list(merged)}")
            raised[j].add(post[j])
            while ladder[j] + 1 in raised[j]:
                ladder[j] += 1
        for j in range(m):
            if post[j] > ladder[j]:
                return _fail(name, e.step, p, f"component {j} reached {post[j]} without a lap increment to each value")
        if e.decide is not None:
            v = e.decide
            if bumped:
                return _fail(name, e.step, p, "decided in the same step as a lap increment")
            if post[v] < 2 or any(post[v] < post[j] + 2 for j in range(m) if j != v):
                return _fail(name, e.step, p, f"decided {v} with counter {list(post)}")
        known[p] = post
    return CheckReport(name, True)


class TotalConfig(NamedTuple):
    index: int  # configuration index: number of events applied
    pid: int
    counter: LapCounter


def find_total_configurations(trace: Trace) -> list[TotalConfig]:
    """Every configuration in which all objects hold ``<V, p>`` and ``p``'s counter is ``V``."""
    cells = list(trace.start.store.cells)
    counters = [s.u for s in trace.start.processes]
    after = counters_after_steps(trace)
    found: list[TotalConfig] = []

    def probe(index: int) -> None:
        head = cells[0]
        if head.owner is BOT:
            return
        if counters[head.owner] != head.counter:
            return
        if all(c == head for c in cells):
            found.append(TotalConfig(index, head.owner, head.counter))

    probe(0)
    for t, e in enumerate(trace.events):
        cells[e.obj] = e.arg
        counters[e.pid] = after[t]
        probe(t + 1)
    return found


def check_total_witness(trace: Trace) -> CheckReport:
    """Each lap completion or decision sits at the end of a clean pass from a total configuration.

    For a step by ``p`` that completes a lap with counter ``V``, the preceding
    ``object_count`` steps of ``p`` must be swaps on objects 0, 1, ... in order,
    each swapping in and getting back ``<V, p>``, and the configuration right
    after ``p``'s step before that pass must be ``<V, p>``-total.
    """
    name = "total_witness"
    count = len(trace.start.store)
    after = counters_after_steps(trace)
    totals = {(c.index, c.pid, c.counter) for c in find_total_configurations(trace)}
    own: dict[int, list[int]] = {}
    completions = 0
    for t, e in enumerate(trace.events):
        own.setdefault(e.pid, []).append(t)
        merged = merge_counters(e.arg.counter, e.resp.counter)
        completes = e.decide is not None or merged != after[t]
        if not completes:
            continue
        mine = own[e.pid]
        if len(mine) < count + 1:
            if trace.start.step_count == 0:
                return _fail(name, e.step, e.pid, "lap completed without a preceding pass")
            continue  # history before the trace start is unknown
        completions += 1
        window = [trace.events[i] for i in mine[-count:]]
        cell = e.arg
        for offset, w in enumerate(window):
            if w.obj != offset or w.arg != cell or w.resp != cell:
                return _fail(name, e.step, e.pid, f"pass before lap completion is not clean at object {offset}")
        anchor = mine[-count - 1] + 1
        if (anchor, e.pid, cell.counter) not in totals:
            return _fail(name, e.step, e.pid, f"configuration {anchor} is not <{list(cell.counter)}, p{e.pid}>-total")
    return CheckReport(name, True, details={"completions": completions})


def _matching_size(edges: dict[int, set[int]]) -> int:
    """Maximum bipartite matching (objects to processes), by augmenting paths."""
    owner: dict[int, int] = {}

    def augment(obj: int, seen: set[int]) -> bool:
        for pid in edges[obj]:
            if pid in seen:
                continue
            seen.add(pid)
            if pid not in owner or augment(owner[pid], seen):
                owner[pid] = obj
                return True
        return False

    return sum(1 for obj in edges if augment(obj, set()))


def check_manyprocesses(trace: Trace, all_pairs: bool = False) -> CheckReport:
    """Between totals ``<V,p>`` and later ``<V',p'>`` with V ⋠ V', n-k other processes swapped distinct objects.

    Those processes must be distinct, differ from ``p`` and ``p'``, and hold
    counters dominating ``V`` at the later configuration. Only consecutive
    total configurations are compared unless ``all_pairs`` is set.
    """
    name = "manyprocesses"
    count = len(trace.start.store)
    totals = find_total_configurations(trace)
    after = counters_after_steps(trace)
    counters_at: list[list[LapCounter]] = []
    counters = [s.u for s in trace.start.processes]
    counters_at.append(list(counters))
    for t, e in enumerate(trace.events):
        counters[e.pid] = after[t]
        counters_at.append(list(counters))
    if all_pairs:
        pairs = [(a, b) for i, a in enumerate(totals) for b in totals[i + 1 :]]
    else:
        pairs = list(zip(totals, totals[1:]))
    checked = 0
    for first, second in pairs:
        if dominated(first.counter, second.counter):
            continue
        checked += 1
        later = counters_at[second.index]
        edges: dict[int, set[int]] = {obj: set() for obj in range(count)}
        for e in trace.events[first.index : second.index]:
            if e.pid in (first.pid, second.pid):
                continue
            if dominated(first.counter, later[e.pid]):
                edges[e.obj].add(e.pid)
        size = _matching_size(edges)
        if size < count:
            return _fail(
                name,
                second.index,
                second.pid,
                f"only {size} of {count} objects swapped by distinct dominating processes",
                first=[first.index, first.pid, list(first.counter)],
                second=[second.index, second.pid, list(second.counter)],
            )
    return CheckReport(name, True, details={"pairs_checked": checked})


CHECKS = ("k_agreement", "validity", "lap_observations", "total_witness", "manyprocesses")


def run_checks(trace: Trace, properties: Sequence[str], k: int | None = None) -> list[CheckReport]:
    """Run the named checks on one trace. ``k`` defaults to the trace's protocol parameter."""
    k = trace.algorithm.k if k is None else k
    reports = []
    for prop in properties:
        if prop == "k_agreement":
            reports.append(check_k_agreement(trace, k))
        elif prop == "validity":
            reports.append(check_validity(trace))
        elif prop == "lap_observations":
            reports.append(check_lap_observations(trace))
        elif prop == "total_witness":
            reports.append(check_total_witness(trace))
        elif prop == "manyprocesses":
            reports.append(check_manyprocesses(trace))
        else:
            raise KeyError(prop)
    return reports
