"""A small protocol on readable objects, to exercise Read paths.

Each process reads object 0; if it is still 0 the process swaps in ``input+1``
and decides its own input unless the swap returned someone else's mark.
Otherwise it adopts the value it read. It is not a correct consensus
protocol, which makes it a handy target for the explorer.
"""

from typing import NamedTuple

from swapagree.memory import ObjectStore
from swapagree.protocols import OpKind, PendingOp


class ToyState(NamedTuple):
    pc: str  # "read", "swap" or "done"
    input: int
    decision: int | None


class ReadThenSwap:
    name = "toy"
    solo_bound = 2
    default_step_limit = 64
    object_count = 1
    k = 1

    def __init__(self, n, m=2):
        self.n = n
        self.m = m

    def initial_store(self):
        return ObjectStore.generic(1, self.m + 1)

    def check_input(self, value):
        if not 0 <= value < self.m:
            raise ValueError(value)

    def init_process(self, pid, input):
        return ToyState("read", input, None)

    def poised_op(self, state, pid):
        if state.pc == "read":
            return PendingOp(OpKind.READ, 0)
        if state.pc == "swap":
            return PendingOp(OpKind.SWAP, 0, state.input + 1)
        return None

    def apply_response(self, state, pid, response):
        if state.pc == "read":
            if response == 0:
                return ToyState("swap", state.input, None)
            return ToyState("done", state.input, response - 1)
        value = state.input if response == 0 else response - 1
        return ToyState("done", state.input, value)

    @staticmethod
    def decision(state):
        return state.decision
