import pytest
from hypothesis import given
from hypothesis import strategies as st

from swapagree.errors import CorruptionError, UsageError
from swapagree.memory import (
    BOT,
    ObjectStore,
    SwapCellValue,
    check_counter,
    dominated,
    incomparable,
    merge_counters,
    read,
    swap,
    value_of,
    zero_counter,
)

counters = st.lists(st.integers(0, 6), min_size=3, max_size=3).map(tuple)


def test_lap_cells_start_at_zero_bottom():
    store = ObjectStore.lap_cells(3, 2)
    assert len(store) == 3
    assert all(c == SwapCellValue((0, 0), BOT) for c in store.cells)


def test_swap_returns_old_value_and_installs_new():
    store = ObjectStore.lap_cells(2, 2)
    v = SwapCellValue((1, 0), 0)
    assert swap(store, 1, v) == SwapCellValue((0, 0), BOT)
    assert store.cells[1] == v
    assert store.swap(1, SwapCellValue((2, 0), 1)) == v


def test_plain_swap_objects_have_no_read():
    store = ObjectStore.lap_cells(1, 2)
    with pytest.raises(UsageError):
        read(store, 0)


def test_generic_store_reads_and_validates_domain():
    store = ObjectStore.generic(2, 2)
    assert read(store, 0) == 0
    assert store.swap(0, 1) == 0
    assert store.read(0) == 1
    with pytest.raises(UsageError):
        store.swap(1, 2)
    with pytest.raises(UsageError):
        store.swap(1, True)


@pytest.mark.parametrize("obj", [-1, 2, "0", None])
def test_out_of_range_object_id(obj):
    store = ObjectStore.generic(2, 2)
    with pytest.raises(UsageError):
        store.swap(obj, 0)
    with pytest.raises(UsageError):
        store.read(obj)


def test_lap_cell_rejects_malformed_values():
    store = ObjectStore.lap_cells(1, 2)
    for bad in [(1, 0), SwapCellValue((1, 0, 0), 0), SwapCellValue((-1, 0), 0), SwapCellValue((1, 0), "p")]:
        with pytest.raises(UsageError):
            store.swap(0, bad)
    assert store.cells[0] == SwapCellValue((0, 0), BOT)


def test_clone_is_independent():
    store = ObjectStore.generic(2, 3)
    twin = store.clone()
    twin.swap(0, 2)
    assert store.cells == [0, 0]
    assert twin != store
    assert twin.snapshot() == (2, 0)


def test_value_of_reads_without_an_operation():
    class Holder:
        store = ObjectStore.lap_cells(2, 2)

    assert value_of(Holder, 1) == SwapCellValue((0, 0), BOT)


def test_check_counter():
    check_counter((0, 3, 1), 3)
    with pytest.raises(CorruptionError):
        check_counter((0, 3), 3)
    with pytest.raises(CorruptionError):
        check_counter((0, -1, 0), 3)


def test_incomparable_pair():
    assert incomparable((1, 0), (0, 1))
    assert not incomparable((1, 0), (1, 1))
    assert zero_counter(3) == (0, 0, 0)


@given(counters)
def test_domination_reflexive(v):
    assert dominated(v, v)


@given(counters, counters)
def test_domination_antisymmetric(v, w):
    if dominated(v, w) and dominated(w, v):
        assert v == w


@given(counters, counters, counters)
def test_domination_transitive(u, v, w):
    if dominated(u, v) and dominated(v, w):
        assert dominated(u, w)


@given(counters, counters)
def test_merge_is_least_upper_bound(v, w):
    top = merge_counters(v, w)
    assert dominated(v, top) and dominated(w, top)
    assert merge_counters(w, v) == top
    assert merge_counters(top, v) == top


@given(st.lists(st.integers(0, 1), min_size=1, max_size=20), st.integers(1, 4))
def test_store_length_never_changes(ops, count):
    store = ObjectStore.generic(count, 2)
    for i, v in enumerate(ops):
        store.swap(i % count, v)
    assert len(store) == count
