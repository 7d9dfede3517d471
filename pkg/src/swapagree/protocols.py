"""Agreement protocols over swap objects, written as deterministic step machines.

Every protocol exposes the same small surface consumed by the harness:

* ``initial_store()`` builds the shared objects,
* ``init_process(pid, input)`` returns a process's state before its first step,
* ``poised_op(state, pid)`` names the operation the process applies next
  (``None`` once it has decided),
* ``apply_response(state, pid, response)`` runs the local computation that
  follows the response, up to the next shared-memory operation or decision.

One simulator step is one shared-memory operation plus that local computation.
States are immutable tuples, so configurations can be forked freely.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, NamedTuple

from .errors import CorruptionError, InvalidInputError, ParameterError
from .memory import BOT, Bottom, LapCounter, ObjectStore, SwapCellValue, check_counter


class OpKind(str, enum.Enum):
    SWAP = "swap"
    READ = "read"


class PendingOp(NamedTuple):
    kind: OpKind
    obj: int
    argument: Any = None


class PC(str, enum.Enum):
    """Resting program counters between steps.

    Initialisation and the loop head are pure local computation, so a process
    at rest is either about to swap object ``index`` or has decided.
    """

    SWAP_AT = "swap"
    DECIDED = "decided"


@dataclass(frozen=True)
class ProtocolParams:
    n: int
    k: int
    m: int
    object_count: int | None = None

    def __post_init__(self) -> None:
        if self.object_count is None:
            object.__setattr__(self, "object_count", self.n - self.k)
        if not (self.n > self.k >= 1):
            raise ParameterError(f"need n > k >= 1, got n={self.n}, k={self.k}")
        if self.m < 2:
            raise ParameterError(f"need m >= 2, got m={self.m}")
        if self.object_count < 1:
            raise ParameterError(f"need object_count >= 1, got {self.object_count}")

    @property
    def provisioned(self) -> bool:
        """True when the instance has the full n-k objects the protocol is proven for."""
        return self.object_count == self.n - self.k


class ProcessState(NamedTuple):
    """Local state of one process running the lap-race protocol."""

    pc: PC
    index: int  # next object to swap, 0-based
    input: int
    u: LapCounter
    conflict: bool
    preference: int | None
    decision: int | None


class SwapKSetAgreement:
    """Obstruction-free m-valued k-set agreement from ``object_count`` swap objects.

    Each process races a value: it swaps ``<U, p>`` into every object in turn,
    merging any foreign lap counter it gets back. A pass in which every swap
    returned ``<U, p>`` completes a lap for the leading value (smallest index on
    ties); the process decides once that value is two laps clear of all others.

    The loop bound is ``object_count``, so under-provisioned instances still run.
    They keep validity and obstruction-freedom but may violate agreement.
    """

    name = "kset"

    def __init__(self, params: ProtocolParams) -> None:
        self.params = params
        self.n = params.n
        self.k = params.k
        self.m = params.m
        self.object_count = params.object_count

    def __repr__(self) -> str:
        p = self.params
        return f"SwapKSetAgreement(n={p.n}, k={p.k}, m={p.m}, objects={p.object_count})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SwapKSetAgreement) and self.params == other.params

    def __hash__(self) -> int:
        return hash(self.params)

    @property
    def solo_bound(self) -> int:
        return 8 * self.object_count

    @property
    def default_step_limit(self) -> int:
        return 16 * self.n * self.object_count

    def initial_store(self) -> ObjectStore:
        return ObjectStore.lap_cells(self.object_count, self.m)

    def check_input(self, value: Any) -> None:
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < self.m:
            raise InvalidInputError(f"input {value!r} outside {{0..{self.m - 1}}}")

    def init_process(self, pid: int, input: int) -> ProcessState:
        self.check_input(input)
        u = [0] * self.m
        u[input] = 1
        return ProcessState(PC.SWAP_AT, 0, input, tuple(u), False, None, None)

    def poised_op(self, state: ProcessState, pid: int) -> PendingOp | None:
        if state.pc is PC.DECIDED:
            return None
        return PendingOp(OpKind.SWAP, state.index, SwapCellValue(state.u, pid))

    def apply_response(self, state: ProcessState, pid: int, response: SwapCellValue) -> ProcessState:
        if state.pc is PC.DECIDED:
            raise CorruptionError(f"p{pid} has decided and takes no further steps")
        seen, owner = response
        if len(seen) != self.m:
            raise CorruptionError(f"response counter {list(seen)!r} has length != m={self.m}")
        u = state.u
        conflict = state.conflict
        if seen != u or owner != pid:
            conflict = True
            if seen != u:
                if min(seen) < 0:
                    check_counter(seen, self.m)
                u = tuple(map(max, u, seen))
        nxt = state.index + 1
        if nxt < self.object_count:
            return ProcessState(PC.SWAP_AT, nxt, state.input, u, conflict, state.preference, None)
        if conflict:
            return ProcessState(PC.SWAP_AT, 0, state.input, u, False, state.preference, None)
        # Completed a lap: every swap in this pass returned <U, p>.
        c = max(u)
        v = u.index(c)
        if all(u[v] >= u[j] + 2 for j in range(self.m) if j != v):
            return ProcessState(PC.DECIDED, 0, state.input, u, False, v, v)
        bumped = u[:v] + (c + 1,) + u[v + 1 :]
        return ProcessState(PC.SWAP_AT, 0, state.input, bumped, False, v, None)

    @staticmethod
    def decision(state: ProcessState) -> int | None:
        return state.decision

    # -- serialization -------------------------------------------------
    @staticmethod
    def value_to_json(value: SwapCellValue) -> list:
        return [list(value.counter), "bot" if value.owner is BOT else value.owner]

    @staticmethod
    def value_from_json(raw: Any) -> SwapCellValue:
        counter, owner = raw
        return SwapCellValue(tuple(int(x) for x in counter), BOT if owner == "bot" else int(owner))

    @staticmethod
    def state_to_json(state: ProcessState) -> dict:
        return {
            "pc": state.pc.value,
            "index": state.index,
            "input": state.input,
            "u": list(state.u),
            "conflict": state.conflict,
            "preference": state.preference,
            "decision": state.decision,
        }

    @staticmethod
    def state_from_json(raw: dict) -> ProcessState:
        return ProcessState(
            PC(raw["pc"]),
            int(raw["index"]),
            int(raw["input"]),
            tuple(int(x) for x in raw["u"]),
            bool(raw["conflict"]),
            raw["preference"],
            raw["decision"],
        )

    def header(self) -> dict:
        return {"protocol": self.name, "n": self.n, "k": self.k, "m": self.m, "objects": self.object_count}


def init_process(params: ProtocolParams, pid: int, input: int) -> ProcessState:
    return SwapKSetAgreement(params).init_process(pid, input)


def poised_op(state: ProcessState, pid: int) -> PendingOp | None:
    if state.pc is PC.DECIDED:
        return None
    return PendingOp(OpKind.SWAP, state.index, SwapCellValue(state.u, pid))


def apply_response(state: ProcessState, pid: int, response: SwapCellValue, params: ProtocolParams) -> ProcessState:
    return SwapKSetAgreement(params).apply_response(state, pid, response)


# ---------------------------------------------------------------------------
# Wait-free two-process consensus from one swap object, and its pairing.


class PairState(NamedTuple):
    pc: PC
    input: int
    obj: int | None  # None for processes that decide without a pair
    decision: int | None


def pairwise_consensus_step(state: PairState, response: Any) -> PairState:
    """Both processes swap their input; whoever receives ⊥ went first and keeps its input."""
    if state.pc is PC.DECIDED:
        raise CorruptionError("decided process takes no further steps")
    value = state.input if response is BOT else response
    return PairState(PC.DECIDED, state.input, state.obj, value)


class PairedKSet:
    """Wait-free k-set agreement for ``ceil(n/2) <= k < n`` from ``n-k`` swap objects.

    Processes ``2i`` and ``2i+1`` (for ``i < n-k``) run two-process consensus on
    object ``i``; the remaining ``2k-n`` processes decide their own input
    without touching shared memory. With ``n=2, k=1`` this is plain two-process
    consensus.
    """

    name = "paired"
    m = None

    def __init__(self, n: int, k: int) -> None:
        if not (math.ceil(n / 2) <= k < n):
            raise ParameterError(f"pairing needs ceil(n/2) <= k < n, got n={n}, k={k}")
        self.n = n
        self.k = k
        self.object_count = n - k

    def __repr__(self) -> str:
        return f"PairedKSet(n={self.n}, k={self.k})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PairedKSet) and (self.n, self.k) == (other.n, other.k)

    def __hash__(self) -> int:
        return hash((self.n, self.k))

    solo_bound = 1

    @property
    def default_step_limit(self) -> int:
        return self.n

    def object_for(self, pid: int) -> int | None:
        return pid // 2 if pid < 2 * self.object_count else None

    def initial_store(self) -> ObjectStore:
        return ObjectStore.plain(self.object_count, BOT)

    def check_input(self, value: Any) -> None:
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise InvalidInputError(f"input {value!r} must be a natural number")

    def init_process(self, pid: int, input: int) -> PairState:
        self.check_input(input)
        obj = self.object_for(pid)
        if obj is None:
            return PairState(PC.DECIDED, input, None, input)
        return PairState(PC.SWAP_AT, input, obj, None)

    def poised_op(self, state: PairState, pid: int) -> PendingOp | None:
        if state.pc is PC.DECIDED:
            return None
        return PendingOp(OpKind.SWAP, state.obj, state.input)

    def apply_response(self, state: PairState, pid: int, response: Any) -> PairState:
        return pairwise_consensus_step(state, response)

    @staticmethod
    def decision(state: PairState) -> int | None:
        return state.decision

    @staticmethod
    def value_to_json(value: Any) -> Any:
        return "bot" if value is BOT else value

    @staticmethod
    def value_from_json(raw: Any) -> Any:
        return BOT if raw == "bot" else int(raw)

    @staticmethod
    def state_to_json(state: PairState) -> dict:
        return {"pc": state.pc.value, "input": state.input, "obj": state.obj, "decision": state.decision}

    @staticmethod
    def state_from_json(raw: dict) -> PairState:
        return PairState(PC(raw["pc"]), int(raw["input"]), raw["obj"], raw["decision"])

    def header(self) -> dict:
        return {"protocol": self.name, "n": self.n, "k": self.k, "m": None, "objects": self.object_count}


def paired_kset(n: int, k: int) -> PairedKSet:
    return PairedKSet(n, k)


def algorithm_from_header(header: dict) -> SwapKSetAgreement | PairedKSet:
    """Rebuild the protocol named by a trace or config header."""
    protocol = header.get("protocol", "kset")
    if protocol == "kset":
        return SwapKSetAgreement(ProtocolParams(header["n"], header["k"], header["m"], header.get("objects")))
    if protocol == "paired":
        return PairedKSet(header["n"], header["k"])
    raise ParameterError(f"unknown protocol {protocol!r}")


__all__ = [
    "BOT",
    "Bottom",
    "OpKind",
    "PC",
    "PairState",
    "PairedKSet",
    "PendingOp",
    "ProcessState",
    "ProtocolParams",
    "SwapKSetAgreement",
    "algorithm_from_header",
    "apply_response",
    "init_process",
    "paired_kset",
    "pairwise_consensus_step",
    "poised_op",
]
