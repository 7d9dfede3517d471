import pytest

from swapagree import adversary as adv
from swapagree.checkers import check_k_agreement
from swapagree.errors import ParameterError, SearchExhausted, UsageError
from swapagree.harness import Explicit, indistinguishable, replay, run
from swapagree.harness import step as step_fn
from swapagree.memory import value_of
from swapagree.protocols import PC, ProtocolParams, SwapKSetAgreement


def kset(n, k, m, objects=None):
    return SwapKSetAgreement(ProtocolParams(n, k, m, objects))


def invariant_holds(alg, step, quiet_rest):
    """Consumed objects agree, unmoved quiet processes see no difference, and q saw the same prefix."""
    same_objects = all(value_of(step.c_after, o) == value_of(step.d_after, o) for o in step.consumed)
    d_tau = step.reference.start
    for e in step.reference.events[:-1]:
        d_tau, _ = step_fn(alg, d_tau, e.pid)
    q = step.process
    q_saw_same = step.mirrored.final.processes[q] == d_tau.processes[q]
    return same_objects and q_saw_same and indistinguishable(step.c_after, step.d_after, quiet_rest)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_underprovisioned_consensus_is_broken(n):
    alg = kset(n, 1, 2, n - 2)
    out = adv.consensus_scenario(alg)
    assert isinstance(out, adv.Violation)
    assert out.decided == (0, 1)
    assert replay(out.trace) == out.trace.final
    assert replay(out.raw) == out.raw.final
    assert not check_k_agreement(out.trace, 1).passed
    assert len(out.trace) <= len(out.raw)
    assert len(out.consumed) == n - 2


@pytest.mark.parametrize("n", [2, 3, 4])
def test_provisioned_consensus_yields_certificate(n):
    alg = kset(n, 1, 2)
    out = adv.consensus_scenario(alg)
    assert isinstance(out, adv.Certificate)
    assert len(set(out.consumed)) == n - 1 == out.q_count
    done = []
    for s in out.steps:
        done.append(s.process)
        rest = [q for q in range(1, n) if q not in done]
        assert invariant_holds(alg, s, rest)
        assert replay(s.mirrored) == s.mirrored.final
        # q's swaps on the mirrored prefix see exactly what they saw on the D side
        assert [e.resp for e in s.mirrored.events] == [e.resp for e in s.reference.events[:-1]]


def test_consume_argument_checks():
    alg = kset(3, 1, 2)
    inputs = [0, 1, 1]
    alpha = adv.build_alpha(alg, inputs, [1, 2], [0])
    with pytest.raises(UsageError):
        adv.consume(alg, inputs, alpha, [1, 2], 0, k=1)
    with pytest.raises(UsageError):
        adv.consume(alg, [0, 1, 0], alpha, [1, 2], 1, k=1)
    sneaky = run(alg, inputs, Explicit([1] + alpha.pids()))
    with pytest.raises(UsageError):
        adv.consume(alg, inputs, sneaky, [1, 2], 1, k=1)


def test_build_alpha_keeps_quiet_processes_still():
    alg = kset(4, 1, 2)
    alpha = adv.build_alpha(alg, [0, 1, 1, 1], [1, 2, 3], [0])
    assert set(alpha.pids()) == {0}
    assert alpha.decided_values() == {0}


def test_build_alpha_exhausted():
    # two processes of the lap-race protocol never disagree
    alg = kset(4, 2, 3, 2)
    with pytest.raises(SearchExhausted):
        adv.build_alpha(alg, [0, 1, 2, 2], [2, 3], [0, 1], budget=50)


def test_restriction_sizes():
    assert adv.restriction(6, 2) == ((0, 1, 2), (3, 4, 5))
    assert adv.restriction(7, 3) == ((0, 1, 2, 3, 4), (5, 6))
    with pytest.raises(ParameterError):
        adv.restriction(4, 1)
    assert adv.lower_bound(6, 2) == 2
    assert adv.lower_bound(5, 1) == 4


def test_reduction_consume_branch_finds_three_values():
    alg = kset(6, 2, 3, 1)
    red = adv.reduce_k(alg, budget=2000, seed=0)
    assert red.branch == "consume"
    assert isinstance(red.outcome, adv.Violation)
    assert set(red.outcome.decided) == {0, 1, 2}
    assert replay(red.outcome.trace) == red.outcome.trace.final


def test_reduction_recurses_when_active_set_cannot_disagree():
    alg = kset(4, 2, 3)
    red = adv.reduce_k(alg, budget=200, seed=0)
    assert red.branch == "recurse"
    assert red.sub.k == 1
    assert isinstance(red.sub.outcome, adv.Certificate)
    record = adv.summary(red, alg.object_count)
    assert record["verdict"] == "certificate" and record["branch"] == "recurse"


def test_reduction_needs_enough_values():
    with pytest.raises(ParameterError):
        adv.reduce_k(kset(6, 2, 2, 1), budget=10)


def test_summary_records():
    alg = kset(4, 1, 2, 2)
    record = adv.summary(adv.consensus_scenario(alg), 2)
    assert record["verdict"] == "violation" and record["consumed"] == 2 and record["q_count"] == 3
    record = adv.summary(adv.NotObstructionFreeVerdict(1, 9), 3)
    assert record["verdict"] == "not_obstruction_free"


def test_not_obstruction_free_verdict():
    class Stuck(SwapKSetAgreement):
        """Never decides once anyone else has written."""

        def apply_response(self, state, pid, response):
            nxt = super().apply_response(state, pid, response)
            if nxt.pc is PC.DECIDED and pid > 0:
                return nxt._replace(pc=PC.SWAP_AT, decision=None, preference=None)
            return nxt

    out = adv.consensus_scenario(Stuck(ProtocolParams(3, 1, 2)), solo_cap=30)
    assert isinstance(out, adv.NotObstructionFreeVerdict)
    assert out.process == 1
