import pytest

from swapagree.analysis import (
    CoverMember,
    PreconditionError,
    Valency,
    apply_schedule,
    block_swap,
    detect_cover,
    explore,
    find_extension,
    sample_reachable,
    valency,
    verify_bivalent,
)
from swapagree.errors import StaleCoverError, UsageError
from swapagree.harness import Explicit, initial_configuration, run, solo_run, step
from swapagree.protocols import PairedKSet, ProtocolParams, SwapKSetAgreement

from toy import ReadThenSwap


def kset(n, k, m, objects=None):
    return SwapKSetAgreement(ProtocolParams(n, k, m, objects))


def test_explore_small_instance():
    summary = explore(kset(2, 1, 2), [0, 1], 8)
    assert summary.max_distinct_decided == 1
    assert summary.validity_ok and not summary.truncated
    assert summary.decisions_seen > 0
    assert set(summary.to_json()) == {"states", "depth", "max_distinct_decided", "validity_ok", "truncated"}


def test_explore_respects_memory_budget():
    summary = explore(kset(3, 1, 2), [0, 1, 1], 12, memory_budget=50)
    assert summary.truncated and summary.states == 50


def test_explore_finds_violation_when_underprovisioned():
    # one object for three consensus processes is below the floor; bounded search sees the split
    summary = explore(kset(3, 1, 2, 1), [0, 1, 1], 9)
    assert summary.max_distinct_decided == 2


def test_explore_paths_replay():
    alg = kset(2, 1, 2)
    summary = explore(alg, [0, 1], 6, sample=5, seed=1)
    assert len(summary.sample_paths) == 5
    for path, key in summary.sample_paths:
        trace = run(alg, [0, 1], Explicit(path))
        assert trace.final.key() == key


def test_explore_paired_and_toy():
    assert explore(PairedKSet(4, 2), [0, 1, 2, 3], 4).max_distinct_decided == 2
    # the toy is not a consensus protocol: a late reader can adopt an overwritten mark
    toy = explore(ReadThenSwap(3), [0, 1, 1], 6)
    assert toy.max_distinct_decided == 2 and toy.validity_ok


def test_initial_mixed_configuration_is_bivalent():
    alg = kset(3, 1, 2)
    config = initial_configuration(alg, [0, 0, 1])
    report = valency(alg, config, [1, 2], 12)
    assert report.classification is Valency.BIVALENT
    assert verify_bivalent(alg, config, report)
    assert all(set(w) <= {1, 2} for w in report.witnesses.values())


def test_same_input_group_is_univalent():
    alg = kset(3, 1, 2)
    config = initial_configuration(alg, [0, 1, 1])
    report = valency(alg, config, [1, 2], 6)
    assert report.classification is Valency.UNIVALENT and report.value == 1


def test_cutoff_without_solo_completion_is_unknown():
    alg = kset(3, 1, 2)
    config = initial_configuration(alg, [0, 1, 1])
    report = valency(alg, config, [1, 2], 2, solo_cap=1)
    assert report.classification is Valency.UNKNOWN and not report.closed


def test_fast_valency_agrees_with_exhaustive():
    alg = kset(3, 1, 2)
    for inputs in ([0, 0, 1], [1, 0, 0], [0, 1, 1]):
        config = initial_configuration(alg, inputs)
        fast = valency(alg, config, [1, 2], 10, exhaustive=False)
        full = valency(alg, config, [1, 2], 10)
        assert fast.classification is full.classification
        assert fast.value == full.value


def test_already_decided_values_count():
    alg = kset(2, 1, 2)
    done = solo_run(alg, 0, [0, 1]).final
    report = valency(alg, done, [0, 1], 6)
    assert report.witnesses[0] == ()
    with pytest.raises(UsageError):
        valency(alg, done, [], 3)


def test_detect_cover_and_block_swap():
    alg = kset(4, 1, 2)
    config = run(alg, [0, 1, 1, 0], Explicit([0, 3])).final
    cover = detect_cover(alg, config, [0, 1, 2, 3])
    assert [(m.pid, m.obj) for m in cover] == [(0, 1), (1, 0)]
    after = block_swap(alg, config, cover)
    assert after.store.cells[0] == cover[1].argument
    assert after.store.cells[1] == cover[0].argument
    reversed_order = block_swap(alg, config, cover, order=[1, 0])
    assert reversed_order.store == after.store
    moved = apply_schedule(alg, config, [0])
    with pytest.raises(StaleCoverError):
        block_swap(alg, moved, cover)
    with pytest.raises(UsageError):
        block_swap(alg, config, cover, order=[0])
    with pytest.raises(UsageError):
        block_swap(alg, config, (cover[0], CoverMember(2, cover[0].obj, None)))


def test_readers_never_cover():
    alg = ReadThenSwap(3)
    config = initial_configuration(alg, [0, 1, 1])
    assert detect_cover(alg, config) == ()
    after_read = apply_schedule(alg, config, [0])
    assert [m.pid for m in detect_cover(alg, after_read)] == [0]


def test_find_extension_with_empty_gamma():
    alg = kset(3, 1, 2)
    config = initial_configuration(alg, [0, 0, 1])
    cover = detect_cover(alg, config, [0])
    ext = find_extension(alg, config, cover, [1, 2], 12)
    assert ext.found
    after = block_swap(alg, apply_schedule(alg, config, ext.gamma), cover)
    assert verify_bivalent(alg, after, ext.report)


def test_find_extension_needs_bivalent_start():
    alg = kset(3, 1, 2)
    config = initial_configuration(alg, [0, 1, 1])
    with pytest.raises(PreconditionError):
        find_extension(alg, config, detect_cover(alg, config, [0]), [1, 2], 8)
    with pytest.raises(UsageError):
        find_extension(alg, config, detect_cover(alg, config, [1]), [1, 2], 8)


def test_sample_reachable_is_seeded():
    alg = kset(3, 1, 2)
    a = sample_reachable(alg, 20, seed=4)
    b = sample_reachable(alg, 20, seed=4)
    assert [c.key() for c in a] == [c.key() for c in b]
    assert any(c.step_count == 0 for c in sample_reachable(alg, 200, seed=1, max_prefix=3))


def test_sample_reachable_matches_stepwise_walk():
    import random

    alg = kset(3, 1, 2)
    rng = random.Random(9)
    expected = []
    for _ in range(40):
        config = initial_configuration(alg, [rng.randrange(2) for _ in range(3)])
        for _ in range(rng.randint(0, 12)):
            live = config.undecided(alg)
            if not live:
                break
            config, _ = step(alg, config, live[rng.randrange(len(live))])
        expected.append(config)
    assert sample_reachable(alg, 40, seed=9) == expected
